#include "entail/vocab.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "entail/errors.hpp"
#include "entail/rng.hpp"

namespace entail {

Vocabulary::Vocabulary() {
  add(kDelim);
  add(kUnk);
}

int Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

int Vocabulary::find(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? -1 : it->second;
}

const std::string& Vocabulary::token(int index) const {
  if (index < 0 || index >= size())
    throw DimensionError("Vocabulary: index " + std::to_string(index) + " out of range");
  return tokens_[static_cast<size_t>(index)];
}

uint64_t Vocabulary::hash() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tokens_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0x1f;  // separator so ["ab","c"] != ["a","bc"]
    h *= 0x100000001b3ULL;
  }
  return h;
}

void Vocabulary::dump(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("Vocabulary: cannot open " + path + " for writing");
  for (int i = 0; i < size(); ++i) out << i << '\t' << tokens_[static_cast<size_t>(i)] << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("Vocabulary: cannot open " + path);
  Vocabulary vocab;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("Vocabulary: malformed line " + std::to_string(lineno) + " in " + path);
    const std::string token = line.substr(tab + 1);
    const int expected = std::stoi(line.substr(0, tab));
    const int got = vocab.add(token);
    if (got != expected)
      throw DataError("Vocabulary: index " + std::to_string(expected) + " for '" + token +
                      "' conflicts with position " + std::to_string(got) + " (line " +
                      std::to_string(lineno) + ")");
  }
  return vocab;
}

namespace {

bool parse_double(std::string_view s, double& out) {
  // std::from_chars<double> is available on this toolchain; keep strtod as
  // the portable path for older libstdc++.
  try {
    size_t pos = 0;
    out = std::stod(std::string(s), &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

}  // namespace

Word2VecTable load_word2vec_text(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("word2vec: cannot open " + path);
  Word2VecTable table;
  std::string line;
  size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> fields;
    std::string f;
    while (ss >> f) fields.push_back(f);
    if (first && fields.size() == 2) {
      // optional "V d" header
      double v = 0, d = 0;
      if (parse_double(fields[0], v) && parse_double(fields[1], d)) {
        table.dim = static_cast<int>(d);
        first = false;
        continue;
      }
    }
    first = false;
    if (fields.size() < 2)
      throw DataError("word2vec: malformed line " + std::to_string(lineno) + " in " + path);
    const int dim = static_cast<int>(fields.size()) - 1;
    if (table.dim == 0) table.dim = dim;
    if (dim != table.dim)
      throw DataError("word2vec: dimension " + std::to_string(dim) + " at line " +
                      std::to_string(lineno) + " disagrees with " + std::to_string(table.dim));
    ++table.file_words;
    const int idx = vocab.find(fields[0]);
    if (idx < 0) continue;
    std::vector<double> values(static_cast<size_t>(dim));
    for (int j = 0; j < dim; ++j) {
      if (!parse_double(fields[static_cast<size_t>(j) + 1], values[static_cast<size_t>(j)]))
        throw DataError("word2vec: bad number '" + fields[static_cast<size_t>(j) + 1] +
                        "' at line " + std::to_string(lineno));
    }
    table.rows.emplace(idx, std::move(values));
  }
  for (int i = 0; i < vocab.size(); ++i)
    if (!table.rows.count(i)) ++table.missing;
  return table;
}

}  // namespace entail
