#pragma once

#include "entail/embedding.hpp"
#include "entail/rng.hpp"
#include "entail/tape.hpp"

namespace entail {

// Inverted dropout: training keeps each entry with probability 1-rate and
// scales survivors by 1/(1-rate); inference is the identity. Applied only at
// the network inputs (projected word vectors) and outputs (the representation
// fed to the classifier).
template <typename T>
Tensor<T> apply_dropout(const Tensor<T>& x, double rate, Phase phase, Rng* rng) {
  if (rate < 0 || rate >= 1)
    throw ConfigError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  if (rate == 0 || phase == Phase::Inference) return x;
  if (!rng) throw ConfigError("dropout: training-phase dropout needs a generator");
  Mat<T> keep(x.rows(), x.cols());
  const T inv = static_cast<T>(1.0 / (1.0 - rate));
  for (auto& v : keep.data) v = rng->bernoulli(rate) ? T(0) : inv;
  return mul(x, Tensor<T>::constant(std::move(keep)));
}

}  // namespace entail
