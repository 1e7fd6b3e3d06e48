#include "entail/report.hpp"

#include <fstream>

#include <json.hpp>

#include "entail/data.hpp"
#include "entail/errors.hpp"

namespace entail {

void write_history_jsonl(const std::string& path, const RunHistory& history) {
  std::ofstream out(path);
  if (!out) throw DataError("history: cannot open " + path + " for writing");
  for (const EpochRecord& e : history.epochs) {
    nlohmann::json j{{"epoch", e.epoch},
                     {"train_loss", e.train_loss},
                     {"train_acc", e.train_acc},
                     {"dev_acc", e.dev_acc}};
    out << j.dump() << '\n';
  }
}

void write_grid_csv(const std::string& path, const std::vector<GridPoint>& ranked) {
  std::ofstream out(path);
  if (!out) throw DataError("grid: cannot open " + path + " for writing");
  out << "lr,dropout,l2,best_dev_acc\n";
  for (const GridPoint& p : ranked) {
    out << p.lr << ',' << p.dropout << ',' << p.l2 << ','
        << (p.diverged ? std::string("diverged") : std::to_string(p.best_dev_acc)) << '\n';
  }
}

std::string metrics_json(const EvalMetrics& metrics) {
  nlohmann::json per_class;
  for (int c = 0; c < kNumClasses; ++c) {
    per_class[label_name(static_cast<Label>(c))] = {
        {"precision", metrics.precision[static_cast<size_t>(c)]},
        {"recall", metrics.recall[static_cast<size_t>(c)]}};
  }
  nlohmann::json confusion = nlohmann::json::array();
  for (const auto& row : metrics.confusion) confusion.push_back(row);
  nlohmann::json j{{"accuracy", metrics.accuracy},
                   {"n", metrics.n},
                   {"per_class", per_class},
                   {"confusion", confusion}};
  return j.dump(1);
}

void write_metrics_json(const std::string& path, const EvalMetrics& metrics) {
  std::ofstream out(path);
  if (!out) throw DataError("metrics: cannot open " + path + " for writing");
  out << metrics_json(metrics) << '\n';
}

}  // namespace entail
