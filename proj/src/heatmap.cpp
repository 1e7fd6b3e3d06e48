#include "entail/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "entail/errors.hpp"

namespace entail {

namespace {

constexpr int kCell = 34;
constexpr int kLeftGutter = 110;
constexpr int kTopGutter = 92;
constexpr int kPad = 8;

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string cell_color(double w) {
  w = std::clamp(w, 0.0, 1.0);
  // white (1,1,1) -> saturated blue (0.10, 0.25, 0.65)
  const int r = static_cast<int>(std::lround(255.0 * (1.0 - w * 0.90)));
  const int g = static_cast<int>(std::lround(255.0 * (1.0 - w * 0.75)));
  const int b = static_cast<int>(std::lround(255.0 * (1.0 - w * 0.35)));
  std::ostringstream ss;
  ss << "rgb(" << r << "," << g << "," << b << ")";
  return ss.str();
}

std::string fixed3(double v) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(3);
  ss << v;
  return ss.str();
}

}  // namespace

std::string heatmap_svg(const AttentionRecord& record) {
  const int cols = static_cast<int>(record.premise.size());
  const int rows = static_cast<int>(record.weights.size());
  if (rows == 0 || cols == 0) throw DataError("heatmap: empty attention record");
  for (const auto& row : record.weights)
    if (static_cast<int>(row.size()) != cols)
      throw DataError("heatmap: weight row length does not match premise length");
  const bool row_per_hyp = rows > 1;
  if (row_per_hyp && rows != static_cast<int>(record.hypothesis.size()))
    throw DataError("heatmap: weight rows do not match hypothesis length");

  const int width = kLeftGutter + cols * kCell + kPad;
  const int height = kTopGutter + rows * kCell + kPad + 18;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" font-family=\"monospace\" font-size=\"12\">\n";
  svg << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (int c = 0; c < cols; ++c) {
    const int x = kLeftGutter + c * kCell + kCell / 2;
    svg << "  <text x=\"" << x << "\" y=\"" << kTopGutter - 8 << "\" text-anchor=\"start\" "
        << "transform=\"rotate(-55 " << x << " " << kTopGutter - 8 << ")\">"
        << escape_xml(record.premise[static_cast<size_t>(c)]) << "</text>\n";
  }
  for (int r = 0; r < rows; ++r) {
    const std::string label =
        row_per_hyp ? record.hypothesis[static_cast<size_t>(r)] : std::string("alpha");
    svg << "  <text x=\"" << kLeftGutter - 6 << "\" y=\""
        << kTopGutter + r * kCell + kCell / 2 + 4 << "\" text-anchor=\"end\">"
        << escape_xml(label) << "</text>\n";
    for (int c = 0; c < cols; ++c) {
      const double w = record.weights[static_cast<size_t>(r)][static_cast<size_t>(c)];
      svg << "  <rect x=\"" << kLeftGutter + c * kCell << "\" y=\"" << kTopGutter + r * kCell
          << "\" width=\"" << kCell << "\" height=\"" << kCell << "\" fill=\""
          << cell_color(w) << "\" stroke=\"#ccc\"><title>"
          << escape_xml(record.hypothesis.empty() || !row_per_hyp
                            ? record.premise[static_cast<size_t>(c)]
                            : record.hypothesis[static_cast<size_t>(r)] + " / " +
                                  record.premise[static_cast<size_t>(c)])
          << ": " << fixed3(w) << "</title></rect>\n";
    }
  }
  svg << "  <text x=\"" << kPad << "\" y=\"" << height - 8 << "\">" << escape_xml(record.variant)
      << " predicted=" << escape_xml(record.predicted)
      << (record.gold.empty() ? "" : " gold=" + escape_xml(record.gold)) << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void write_heatmap_svg(const std::string& path, const AttentionRecord& record) {
  std::ofstream out(path);
  if (!out) throw DataError("heatmap: cannot open " + path + " for writing");
  out << heatmap_svg(record);
}

std::string attention_record_json(const AttentionRecord& record) {
  nlohmann::json j{{"premise", record.premise},
                   {"hypothesis", record.hypothesis},
                   {"weights", record.weights},
                   {"variant", record.variant},
                   {"predicted", record.predicted}};
  j["gold"] = record.gold.empty() ? nlohmann::json() : nlohmann::json(record.gold);
  return j.dump(1);
}

void write_attention_record(const std::string& path, const AttentionRecord& record) {
  std::ofstream out(path);
  if (!out) throw DataError("attention record: cannot open " + path + " for writing");
  out << attention_record_json(record) << '\n';
}

}  // namespace entail
