#include "entail/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "entail/errors.hpp"
#include "entail/rng.hpp"

namespace entail {

const char* label_name(Label l) {
  switch (l) {
    case Label::Entailment: return "entailment";
    case Label::Neutral: return "neutral";
    case Label::Contradiction: return "contradiction";
  }
  return "?";
}

Label label_from_string(const std::string& s) {
  if (s == "entailment") return Label::Entailment;
  if (s == "neutral") return Label::Neutral;
  if (s == "contradiction") return Label::Contradiction;
  throw DataError("unknown label '" + s + "'");
}

std::vector<std::string> tokenize(const std::string& sentence) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (unsigned char c : sentence) {
    if (std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      tokens.emplace_back(1, static_cast<char>(c));
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::vector<Example> parse_snli(const std::string& path, ParseStats* stats) {
  std::ifstream in(path);
  if (!in) throw DataError("snli: cannot open " + path);
  std::vector<Example> examples;
  ParseStats local;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("snli: malformed JSON at line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!record.contains("gold_label") || !record.contains("sentence1") ||
        !record.contains("sentence2"))
      throw DataError("snli: missing field at line " + std::to_string(lineno));
    const std::string gold = record["gold_label"].get<std::string>();
    if (gold == "-") {
      ++local.skipped_no_consensus;
      continue;
    }
    Example ex;
    try {
      ex.label = label_from_string(gold);
    } catch (const DataError& e) {
      throw DataError(std::string(e.what()) + " at line " + std::to_string(lineno));
    }
    ex.premise = tokenize(record["sentence1"].get<std::string>());
    ex.hypothesis = tokenize(record["sentence2"].get<std::string>());
    if (ex.premise.empty() || ex.hypothesis.empty())
      throw DataError("snli: empty sentence at line " + std::to_string(lineno));
    ex.pair_id = record.contains("pairID") ? record["pairID"].get<std::string>()
                                           : "line" + std::to_string(lineno);
    examples.push_back(std::move(ex));
    ++local.kept;
  }
  if (stats) *stats = local;
  return examples;
}

void write_snli_jsonl(const std::string& path, std::span<const Example> examples) {
  std::ofstream out(path);
  if (!out) throw DataError("snli: cannot open " + path + " for writing");
  for (const Example& ex : examples) {
    nlohmann::json record{{"gold_label", label_name(ex.label)},
                          {"sentence1", join_tokens(ex.premise)},
                          {"sentence2", join_tokens(ex.hypothesis)},
                          {"pairID", ex.pair_id}};
    out << record.dump() << '\n';
  }
}

IndexMatrix pad_token_lists(const std::vector<std::vector<std::string>>& lists,
                            const Vocabulary& vocab) {
  IndexMatrix m;
  m.rows = static_cast<int>(lists.size());
  m.cols = 0;
  for (const auto& l : lists) m.cols = std::max(m.cols, static_cast<int>(l.size()));
  m.index.assign(static_cast<size_t>(m.rows) * m.cols, Vocabulary::kUnkIndex);
  m.mask.assign(static_cast<size_t>(m.rows) * m.cols, 0);
  for (int r = 0; r < m.rows; ++r) {
    const auto& l = lists[static_cast<size_t>(r)];
    for (size_t c = 0; c < l.size(); ++c) {
      const int idx = vocab.find(l[c]);
      m.index[static_cast<size_t>(r) * m.cols + c] =
          idx >= 0 ? idx : Vocabulary::kUnkIndex;
      m.mask[static_cast<size_t>(r) * m.cols + c] = 1;
    }
  }
  return m;
}

std::vector<Batch> make_batches(std::span<const Example> examples, int batch_size, uint64_t seed,
                                const Vocabulary& vocab) {
  if (batch_size < 1) throw ConfigError("make_batches: batch size must be >= 1");
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(mix_seed(seed, 0xba7c4e5ULL));
  rng.shuffle(order);

  std::vector<Batch> batches;
  for (size_t start = 0; start < order.size(); start += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(order.size(), start + static_cast<size_t>(batch_size));
    Batch b;
    std::vector<std::vector<std::string>> prem, hyp;
    for (size_t i = start; i < end; ++i) {
      const Example& ex = examples[order[i]];
      prem.push_back(ex.premise);
      hyp.push_back(ex.hypothesis);
      b.labels.push_back(ex.label);
      b.example_ids.push_back(order[i]);
    }
    b.premise = pad_token_lists(prem, vocab);
    b.hypothesis = pad_token_lists(hyp, vocab);
    batches.push_back(std::move(b));
  }
  return batches;
}

std::vector<std::vector<std::string>> unpad_tokens(const IndexMatrix& m,
                                                   const Vocabulary& vocab) {
  std::vector<std::vector<std::string>> out(static_cast<size_t>(m.rows));
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols && m.mask_at(r, c); ++c)
      out[static_cast<size_t>(r)].push_back(vocab.token(m.at(r, c)));
  return out;
}

namespace {

// distinct sample of `n` values from pool[0..pool_size)
std::vector<int> sample_distinct(int pool_size, int n, Rng& rng) {
  std::vector<int> pool(static_cast<size_t>(pool_size));
  std::iota(pool.begin(), pool.end(), 0);
  rng.shuffle(pool);
  pool.resize(static_cast<size_t>(n));
  return pool;
}

}  // namespace

SynthData gen_synth(const SynthSpec& spec) {
  if (spec.vocab_size < spec.premise_max + 4)
    throw ConfigError("gen_synth: vocabulary too small for premise length range");
  if (spec.premise_min < 2 || spec.premise_min > spec.premise_max ||
      spec.hyp_min < 1 || spec.hyp_min > spec.hyp_max || spec.hyp_max > spec.premise_min - 1)
    throw ConfigError("gen_synth: invalid length ranges");

  SynthData data;
  data.vocab_tokens.push_back("hot");   // designated antonym pair
  data.vocab_tokens.push_back("cold");
  for (int i = 2; i < spec.vocab_size; ++i)
    data.vocab_tokens.push_back("w" + std::string(i < 10 ? "0" : "") + std::to_string(i));
  const int pool = spec.vocab_size - 2;  // tokens other than the antonym pair
  auto pool_token = [&](int i) { return data.vocab_tokens[static_cast<size_t>(i) + 2]; };

  Rng rng(mix_seed(spec.seed, 0x5e17ULL));
  for (int n = 0; n < spec.size; ++n) {
    const Label target = static_cast<Label>(n % 3);  // round-robin for balance
    const int lp = spec.premise_min +
                   static_cast<int>(rng.below(static_cast<uint64_t>(
                       spec.premise_max - spec.premise_min + 1)));
    const int lh =
        spec.hyp_min +
        static_cast<int>(rng.below(static_cast<uint64_t>(spec.hyp_max - spec.hyp_min + 1)));

    Example ex;
    ex.label = target;
    ex.pair_id = "synth-" + std::to_string(n);
    std::vector<int> align;

    if (target == Label::Contradiction) {
      // premise gets one antonym; the hypothesis carries the other, aligned to it
      std::vector<int> ids = sample_distinct(pool, lp - 1, rng);
      for (int id : ids) ex.premise.push_back(pool_token(id));
      const int a_pos = static_cast<int>(rng.below(static_cast<uint64_t>(lp)));
      const bool hot_in_premise = rng.bernoulli(0.5);
      ex.premise.insert(ex.premise.begin() + a_pos, hot_in_premise ? "hot" : "cold");

      std::vector<int> copy_pos;
      for (int i = 0; i < lp; ++i)
        if (i != a_pos) copy_pos.push_back(i);
      rng.shuffle(copy_pos);
      copy_pos.resize(static_cast<size_t>(lh - 1));
      for (int p : copy_pos) {
        ex.hypothesis.push_back(ex.premise[static_cast<size_t>(p)]);
        align.push_back(p);
      }
      const int b_pos = static_cast<int>(rng.below(static_cast<uint64_t>(lh)));
      ex.hypothesis.insert(ex.hypothesis.begin() + b_pos, hot_in_premise ? "cold" : "hot");
      align.insert(align.begin() + b_pos, a_pos);
    } else {
      std::vector<int> ids = sample_distinct(pool, lp, rng);
      for (int id : ids) ex.premise.push_back(pool_token(id));
      std::vector<int> copy_pos(static_cast<size_t>(lp));
      std::iota(copy_pos.begin(), copy_pos.end(), 0);
      rng.shuffle(copy_pos);
      const int copied = target == Label::Entailment ? lh : lh - 1;
      copy_pos.resize(static_cast<size_t>(copied));
      for (int p : copy_pos) {
        ex.hypothesis.push_back(ex.premise[static_cast<size_t>(p)]);
        align.push_back(p);
      }
      if (target == Label::Neutral) {
        // one novel token absent from the premise
        int novel;
        do {
          novel = static_cast<int>(rng.below(static_cast<uint64_t>(pool)));
        } while (std::find(ids.begin(), ids.end(), novel) != ids.end());
        const int pos = static_cast<int>(rng.below(static_cast<uint64_t>(lh)));
        ex.hypothesis.insert(ex.hypothesis.begin() + pos, pool_token(novel));
        align.insert(align.begin() + pos, -1);
      }
    }
    data.examples.push_back(std::move(ex));
    data.alignments.push_back(std::move(align));
  }

  // interleave the round-robin labels
  std::vector<size_t> order(data.examples.size());
  std::iota(order.begin(), order.end(), size_t{0});
  rng.shuffle(order);
  SynthData shuffled;
  shuffled.vocab_tokens = std::move(data.vocab_tokens);
  for (size_t i : order) {
    shuffled.examples.push_back(std::move(data.examples[i]));
    shuffled.alignments.push_back(std::move(data.alignments[i]));
  }
  return shuffled;
}

void write_alignment_json(const std::string& path, const SynthData& data) {
  nlohmann::json out = nlohmann::json::array();
  for (size_t i = 0; i < data.examples.size(); ++i) {
    out.push_back({{"pairID", data.examples[i].pair_id},
                   {"alignment", data.alignments[i]}});
  }
  std::ofstream f(path);
  if (!f) throw DataError("alignment: cannot open " + path + " for writing");
  f << out.dump(1) << '\n';
}

}  // namespace entail
