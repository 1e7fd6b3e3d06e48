#pragma once

#include <span>
#include <string>
#include <vector>

#include "entail/params.hpp"
#include "entail/tape.hpp"

namespace entail {

// Attention projections lifted onto a tape. Wr/Wt are present only for the
// word-by-word variant (their tensors stay default-constructed otherwise).
template <typename T>
struct AttnRefs {
  Tensor<T> Wy, Wh, w, Wp, Wx;
  Tensor<T> Wr, Wt;
  bool word_by_word = false;
};

template <typename T>
void add_attention_params(ParameterSet<T>& params, int k, bool word_by_word, Rng& rng) {
  const double s = uniform_init_bound(k);
  params.add("attn/Wy", random_uniform<T>(k, k, s, rng));
  params.add("attn/Wh", random_uniform<T>(k, k, s, rng));
  params.add("attn/w", random_uniform<T>(k, 1, s, rng));
  params.add("attn/Wp", random_uniform<T>(k, k, s, rng));
  params.add("attn/Wx", random_uniform<T>(k, k, s, rng));
  if (word_by_word) {
    params.add("attn/Wr", random_uniform<T>(k, k, s, rng));
    params.add("attn/Wt", random_uniform<T>(k, k, s, rng));
  }
}

template <typename T>
AttnRefs<T> lift_attention(GraphBinder<T>& binder, const ParameterSet<T>& params,
                           bool word_by_word) {
  AttnRefs<T> refs;
  refs.Wy = binder.param(params, "attn/Wy");
  refs.Wh = binder.param(params, "attn/Wh");
  refs.w = binder.param(params, "attn/w");
  refs.Wp = binder.param(params, "attn/Wp");
  refs.Wx = binder.param(params, "attn/Wx");
  refs.word_by_word = word_by_word;
  if (word_by_word) {
    refs.Wr = binder.param(params, "attn/Wr");
    refs.Wt = binder.param(params, "attn/Wt");
  }
  return refs;
}

template <typename T>
struct AttendResult {
  Tensor<T> alpha;  // [1 x L], simplex over unmasked premise positions
  Tensor<T> r;      // [k x 1]
};

// M = tanh(Wy Y + (Wh h_N) 1_L^T),  alpha = softmax(w^T M),  r = Y alpha^T
template <typename T>
AttendResult<T> attend_last(const Tensor<T>& Y, const Tensor<T>& h_n, const AttnRefs<T>& p,
                            const std::vector<uint8_t>& mask) {
  const int L = Y.cols();
  Tensor<T> m = tanh(add(matmul(p.Wy, Y), broadcast_cols(matmul(p.Wh, h_n), L)));
  Tensor<T> alpha = softmax_masked(matmul(transpose(p.w), m), mask);
  Tensor<T> r = matmul(Y, transpose(alpha));
  return AttendResult<T>{alpha, r};
}

// h* = tanh(Wp r + Wx h_N)
template <typename T>
Tensor<T> combine(const Tensor<T>& r, const Tensor<T>& h_n, const AttnRefs<T>& p) {
  return tanh(add(matmul(p.Wp, r), matmul(p.Wx, h_n)));
}

template <typename T>
struct WordByWordResult {
  std::vector<Tensor<T>> alphas;  // one [1 x L] row per hypothesis step
  Tensor<T> r_final;              // r_N, [k x 1]

  Mat<T> weights() const {
    Mat<T> a(static_cast<int>(alphas.size()), alphas.empty() ? 0 : alphas.front().cols());
    for (size_t t = 0; t < alphas.size(); ++t)
      for (int j = 0; j < a.cols; ++j) a(static_cast<int>(t), j) = alphas[t].value()(0, j);
    return a;
  }
};

// Per hypothesis step t:
//   M_t = tanh(Wy Y + (Wh h_t + Wr r_{t-1}) 1_L^T)
//   alpha_t = softmax(w^T M_t)
//   r_t = Y alpha_t^T + tanh(Wt r_{t-1})
// with r_0 = 0. Wy Y is shared across steps on the same tape.
template <typename T>
WordByWordResult<T> attend_wordbyword(const Tensor<T>& Y,
                                      std::span<const Tensor<T>> hyp_outputs,
                                      const AttnRefs<T>& p, const std::vector<uint8_t>& mask) {
  if (hyp_outputs.empty())
    throw DimensionError("attend_wordbyword: hypothesis must have at least one step");
  if (!p.word_by_word)
    throw DimensionError("attend_wordbyword: Wr/Wt missing from attention parameters");
  const int L = Y.cols();
  const int k = Y.rows();
  Tensor<T> wy_y = matmul(p.Wy, Y);
  Tensor<T> w_row = transpose(p.w);
  WordByWordResult<T> out;
  Tensor<T> r_prev = Tensor<T>::constant(Mat<T>(k, 1));
  for (const Tensor<T>& h_t : hyp_outputs) {
    Tensor<T> cond = add(matmul(p.Wh, h_t), matmul(p.Wr, r_prev));
    Tensor<T> m_t = tanh(add(wy_y, broadcast_cols(cond, L)));
    Tensor<T> alpha_t = softmax_masked(matmul(w_row, m_t), mask);
    Tensor<T> r_t = add(matmul(Y, transpose(alpha_t)), tanh(matmul(p.Wt, r_prev)));
    out.alphas.push_back(alpha_t);
    r_prev = r_t;
  }
  out.r_final = r_prev;
  return out;
}

// Concatenates the premise->hypothesis and hypothesis->premise sentence-pair
// representations produced by the same weights.
template <typename T>
Tensor<T> two_way(const Tensor<T>& h_star_ph, const Tensor<T>& h_star_hp) {
  if (h_star_ph.rows() != h_star_hp.rows() || h_star_ph.cols() != 1 || h_star_hp.cols() != 1)
    throw DimensionError("two_way: mismatched representations " + h_star_ph.value().shape() +
                         " vs " + h_star_hp.value().shape());
  return concat_rows(h_star_ph, h_star_hp);
}

// Serializable per-example attention pattern.
struct AttentionRecord {
  std::vector<std::string> premise;
  std::vector<std::string> hypothesis;
  std::vector<std::vector<double>> weights;  // one row (attention) or one per hyp token
  std::string variant;
  std::string predicted;
  std::string gold;  // empty when unknown
};

}  // namespace entail
