#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "entail/mat.hpp"

namespace entail {

// Token <-> index bijection built from the training corpus. Two reserved
// tokens: the premise/hypothesis delimiter and a placeholder index that
// unseen-at-inference tokens map to inside padded index matrices.
class Vocabulary {
 public:
  static constexpr const char* kDelim = "<delim>";
  static constexpr const char* kUnk = "<unk>";
  static constexpr int kDelimIndex = 0;
  static constexpr int kUnkIndex = 1;

  Vocabulary();

  // Adds a token if absent; returns its index either way.
  int add(const std::string& token);
  // Returns -1 for unknown tokens.
  int find(const std::string& token) const;
  const std::string& token(int index) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  // FNV-1a over the ordered token list; checkpoint integrity anchor.
  uint64_t hash() const;

  // One "index<TAB>token" line per entry.
  void dump(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct Word2VecTable {
  int dim = 0;
  // vocab index -> loaded vector, only for tokens present in the file
  std::unordered_map<int, std::vector<double>> rows;
  size_t file_words = 0;   // words seen in the file
  size_t missing = 0;      // vocab words without a vector
};

// Text word2vec format: optional "V d" header, then "token v1 .. vd" lines.
// Keeps only rows for tokens present in `vocab`. Throws DataError with the
// offending line number on malformed input or dimension drift.
Word2VecTable load_word2vec_text(const std::string& path, const Vocabulary& vocab);

}  // namespace entail
