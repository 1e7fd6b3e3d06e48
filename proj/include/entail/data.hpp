#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "entail/vocab.hpp"

namespace entail {

enum class Label : int { Entailment = 0, Neutral = 1, Contradiction = 2 };

inline constexpr int kNumClasses = 3;

const char* label_name(Label l);
// Accepts the SNLI gold_label strings; "-" is not a label (handled upstream).
Label label_from_string(const std::string& s);

struct Example {
  std::vector<std::string> premise;
  std::vector<std::string> hypothesis;
  Label label = Label::Neutral;
  std::string pair_id;
};

// Lowercases, splits on whitespace, and detaches each punctuation character
// as its own token.
std::vector<std::string> tokenize(const std::string& sentence);
std::string join_tokens(const std::vector<std::string>& tokens);

struct ParseStats {
  size_t kept = 0;
  size_t skipped_no_consensus = 0;
};

// JSON-lines with fields gold_label, sentence1, sentence2 (pairID optional).
// Records with gold_label "-" are skipped and counted. Malformed lines and
// unknown labels raise DataError with the line number.
std::vector<Example> parse_snli(const std::string& path, ParseStats* stats = nullptr);

void write_snli_jsonl(const std::string& path, std::span<const Example> examples);

// Right-padded token-index matrix; every row is a 1-prefix mask.
struct IndexMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int32_t> index;  // row-major
  std::vector<uint8_t> mask;

  int32_t at(int r, int c) const { return index[static_cast<size_t>(r) * cols + c]; }
  uint8_t mask_at(int r, int c) const { return mask[static_cast<size_t>(r) * cols + c]; }
};

struct Batch {
  IndexMatrix premise;
  IndexMatrix hypothesis;
  std::vector<Label> labels;
  std::vector<size_t> example_ids;  // positions in the source example list
};

IndexMatrix pad_token_lists(const std::vector<std::vector<std::string>>& lists,
                            const Vocabulary& vocab);

// Seeded shuffle, then fixed-size groups (last one may be smaller).
std::vector<Batch> make_batches(std::span<const Example> examples, int batch_size, uint64_t seed,
                                const Vocabulary& vocab);

// Recovers the padded token sequences of one batch side via its mask.
std::vector<std::vector<std::string>> unpad_tokens(const IndexMatrix& m, const Vocabulary& vocab);

// Planted-correspondence entailment task. Each hypothesis token either copies
// a premise token (its planted position) or is novel. Labels:
//   CONTRADICTION  premise contains one designated antonym, hypothesis the other
//   ENTAILMENT     every hypothesis token occurs in the premise
//   NEUTRAL        otherwise (exactly one novel token is planted)
struct SynthSpec {
  int vocab_size = 50;
  int premise_min = 6;
  int premise_max = 9;
  int hyp_min = 2;
  int hyp_max = 4;
  int size = 3000;
  uint64_t seed = 1;
};

struct SynthData {
  std::vector<Example> examples;
  // per example, per hypothesis token: premise position or -1
  std::vector<std::vector<int>> alignments;
  std::vector<std::string> vocab_tokens;
};

SynthData gen_synth(const SynthSpec& spec);

void write_alignment_json(const std::string& path, const SynthData& data);

}  // namespace entail
