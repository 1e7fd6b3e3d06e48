#pragma once

#include <string>
#include <vector>

#include "entail/attention.hpp"

namespace entail {

// Self-contained SVG grid: premise tokens as columns, one row per weight
// vector (hypothesis tokens for word-by-word, a single row otherwise).
// Weights are clamped to [0,1] and mapped linearly from white to a saturated
// blue; each cell carries a 3-decimal tooltip.
std::string heatmap_svg(const AttentionRecord& record);

void write_heatmap_svg(const std::string& path, const AttentionRecord& record);

std::string attention_record_json(const AttentionRecord& record);

void write_attention_record(const std::string& path, const AttentionRecord& record);

}  // namespace entail
