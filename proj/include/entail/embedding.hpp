#pragma once

#include <string>
#include <vector>

#include "entail/mat.hpp"
#include "entail/params.hpp"
#include "entail/rng.hpp"
#include "entail/vocab.hpp"

namespace entail {

enum class Phase { Train, Inference };

// Word representations under the frozen/tunable/OOV policy:
//   - tokens with a pretrained vector keep it, frozen;
//   - remaining vocabulary rows (incl. the delimiter) are tunable, initialized
//     uniformly in (-0.05, 0.05);
//   - tokens unseen at inference get a fixed vector derived from the token
//     string hash, identical on every call and never trained.
template <typename T>
struct EmbeddingTable {
  int dim = 0;
  Mat<T> table;                  // [V x dim], row per vocab index
  std::vector<uint8_t> tunable;  // per row
  uint64_t init_seed = 0;

  static EmbeddingTable build(const Vocabulary& vocab, int dim, const Word2VecTable* pretrained,
                              uint64_t seed) {
    if (pretrained && pretrained->dim != dim)
      throw DimensionError("EmbeddingTable: pretrained dimension " +
                           std::to_string(pretrained->dim) + " != requested " +
                           std::to_string(dim));
    EmbeddingTable t;
    t.dim = dim;
    t.init_seed = seed;
    t.table = Mat<T>(vocab.size(), dim);
    t.tunable.assign(static_cast<size_t>(vocab.size()), 1);
    Rng rng(mix_seed(seed, 0xe2bedull));
    for (int i = 0; i < vocab.size(); ++i) {
      const std::vector<double>* row =
          pretrained && pretrained->rows.count(i) ? &pretrained->rows.at(i) : nullptr;
      if (row) {
        for (int j = 0; j < dim; ++j) t.table(i, j) = static_cast<T>((*row)[static_cast<size_t>(j)]);
        t.tunable[static_cast<size_t>(i)] = 0;
      } else {
        for (int j = 0; j < dim; ++j) t.table(i, j) = static_cast<T>(rng.uniform(-0.05, 0.05));
      }
    }
    // the inference placeholder row is never used as a vector; keep it frozen
    // at zero so it cannot enter the trainable parameter count
    t.tunable[Vocabulary::kUnkIndex] = 0;
    for (int j = 0; j < dim; ++j) t.table(Vocabulary::kUnkIndex, j) = T(0);
    return t;
  }

  size_t tunable_rows() const {
    size_t n = 0;
    for (uint8_t f : tunable) n += f;
    return n;
  }

  size_t tunable_value_count() const { return tunable_rows() * static_cast<size_t>(dim); }

  // Fixed random vector for a token outside the vocabulary. Depends only on
  // the token string and the table seed, so repeated calls agree.
  Mat<T> oov_vector(const std::string& token) const {
    Rng rng(mix_seed(init_seed, fnv1a(token)));
    Mat<T> v(dim, 1);
    for (int j = 0; j < dim; ++j) v(j, 0) = static_cast<T>(rng.uniform(-0.05, 0.05));
    return v;
  }

  Mat<T> row_vector(int index) const {
    Mat<T> v(dim, 1);
    for (int j = 0; j < dim; ++j) v(j, 0) = table(index, j);
    return v;
  }

  template <typename U>
  EmbeddingTable<U> cast() const {
    EmbeddingTable<U> out;
    out.dim = dim;
    out.table = table.template cast<U>();
    out.tunable = tunable;
    out.init_seed = init_seed;
    return out;
  }
};

template <typename T>
struct LookupResult {
  Mat<T> vector;      // [dim x 1]
  bool tunable;       // true only for in-vocabulary tunable rows
  int vocab_index;    // -1 for out-of-vocabulary tokens
};

template <typename T>
LookupResult<T> lookup(const EmbeddingTable<T>& table, const Vocabulary& vocab,
                       const std::string& token, Phase /*phase*/) {
  const int idx = vocab.find(token);
  if (idx >= 0)
    return LookupResult<T>{table.row_vector(idx), table.tunable[static_cast<size_t>(idx)] != 0,
                           idx};
  return LookupResult<T>{table.oov_vector(token), false, -1};
}

// Tape-side lookup: tunable rows become named gradient leaves ("emb/<index>"),
// frozen rows and OOV vectors become constants.
template <typename T>
Tensor<T> lookup_on(GraphBinder<T>& binder, const EmbeddingTable<T>& table,
                    const Vocabulary& vocab, const std::string& token, Phase phase) {
  LookupResult<T> r = lookup(table, vocab, token, phase);
  if (r.tunable)
    return binder.named_value("emb/" + std::to_string(r.vocab_index), r.vector);
  return Tensor<T>::constant(std::move(r.vector));
}

// W_proj x + b_proj, mapping a [d x 1] word vector to the hidden size k.
template <typename T>
Tensor<T> project(GraphBinder<T>& binder, const ParameterSet<T>& params, const Tensor<T>& x) {
  Tensor<T> w = binder.param(params, "proj/W");
  Tensor<T> b = binder.param(params, "proj/b");
  if (w.cols() != x.rows())
    throw DimensionError("project: weight " + w.value().shape() + " incompatible with input " +
                         x.value().shape());
  return add(matmul(w, x), b);
}

}  // namespace entail
