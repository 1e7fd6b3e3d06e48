#pragma once

#include <string>

#include "entail/train.hpp"

namespace entail {

// One JSON object per epoch: {epoch, train_loss, train_acc, dev_acc}.
void write_history_jsonl(const std::string& path, const RunHistory& history);

// CSV of (lr, dropout, l2, best_dev_acc), ranked best-first.
void write_grid_csv(const std::string& path, const std::vector<GridPoint>& ranked);

std::string metrics_json(const EvalMetrics& metrics);
void write_metrics_json(const std::string& path, const EvalMetrics& metrics);

}  // namespace entail
