#pragma once

#include <span>
#include <string>
#include <vector>

#include "entail/params.hpp"
#include "entail/tape.hpp"

namespace entail {

// One LSTM cell's parameters lifted onto a tape. Gate weights are stored
// [k x 2k] and applied to the stacked input H = [x_t ; h_{t-1}].
template <typename T>
struct LstmRefs {
  Tensor<T> Wi, bi, Wf, bf, Wo, bo, Wc, bc;
  int k = 0;
};

inline const char* const kLstmTensorNames[8] = {"Wi", "bi", "Wf", "bf", "Wo", "bo", "Wc", "bc"};

template <typename T>
void add_lstm_params(ParameterSet<T>& params, const std::string& prefix, int k, Rng& rng) {
  const double s = uniform_init_bound(k);
  for (const char* gate : {"i", "f", "o", "c"}) {
    params.add(prefix + "/W" + gate, random_uniform<T>(k, 2 * k, s, rng));
    Mat<T> bias(k, 1);
    if (gate[0] == 'f') std::fill(bias.data.begin(), bias.data.end(), T(1));  // forget bias 1.0
    params.add(prefix + "/b" + gate, std::move(bias));
  }
}

template <typename T>
LstmRefs<T> lift_lstm(GraphBinder<T>& binder, const ParameterSet<T>& params,
                      const std::string& prefix) {
  LstmRefs<T> refs{
      binder.param(params, prefix + "/Wi"), binder.param(params, prefix + "/bi"),
      binder.param(params, prefix + "/Wf"), binder.param(params, prefix + "/bf"),
      binder.param(params, prefix + "/Wo"), binder.param(params, prefix + "/bo"),
      binder.param(params, prefix + "/Wc"), binder.param(params, prefix + "/bc"),
  };
  refs.k = refs.Wi.rows();
  return refs;
}

template <typename T>
struct LstmState {
  Tensor<T> h, c;

  static LstmState zeros(int k) {
    return LstmState{Tensor<T>::constant(Mat<T>(k, 1)), Tensor<T>::constant(Mat<T>(k, 1))};
  }
};

// i = s(Wi H + bi), f = s(Wf H + bf), o = s(Wo H + bo)
// c_t = f . c_{t-1} + i . tanh(Wc H + bc),  h_t = o . tanh(c_t)
template <typename T>
LstmState<T> lstm_step(const Tensor<T>& x, const LstmState<T>& prev, const LstmRefs<T>& p) {
  if (x.cols() != 1 || x.rows() != p.k)
    throw DimensionError("lstm_step: input " + x.value().shape() + " incompatible with k=" +
                         std::to_string(p.k));
  Tensor<T> stacked = concat_rows(x, prev.h);
  Tensor<T> gate_i = sigmoid(add(matmul(p.Wi, stacked), p.bi));
  Tensor<T> gate_f = sigmoid(add(matmul(p.Wf, stacked), p.bf));
  Tensor<T> gate_o = sigmoid(add(matmul(p.Wo, stacked), p.bo));
  Tensor<T> candidate = tanh(add(matmul(p.Wc, stacked), p.bc));
  Tensor<T> c = add(mul(gate_f, prev.c), mul(gate_i, candidate));
  Tensor<T> h = mul(gate_o, tanh(c));
  return LstmState<T>{h, c};
}

template <typename T>
struct EncodedSequence {
  std::vector<Tensor<T>> outputs;  // per-step h (carried forward on masked steps)
  Tensor<T> Y;                     // [k x L]
  LstmState<T> final_state;        // state after the last unmasked step
  std::vector<uint8_t> mask;
};

// Left-to-right fold of lstm_step. Masked steps freeze the state and repeat
// the previous output column, so the final state always reflects the last
// real token.
template <typename T>
EncodedSequence<T> encode(std::span<const Tensor<T>> inputs, LstmState<T> init,
                          std::span<const uint8_t> mask, const LstmRefs<T>& p) {
  if (inputs.empty()) throw DimensionError("encode: empty sequence");
  if (mask.size() != inputs.size())
    throw DimensionError("encode: mask length " + std::to_string(mask.size()) +
                         " != sequence length " + std::to_string(inputs.size()));
  EncodedSequence<T> enc;
  enc.mask.assign(mask.begin(), mask.end());
  LstmState<T> state = init;
  Tensor<T> last_h = Tensor<T>::constant(Mat<T>(p.k, 1));
  bool any_real = false;
  for (size_t t = 0; t < inputs.size(); ++t) {
    if (mask[t]) {
      state = lstm_step(inputs[t], state, p);
      last_h = state.h;
      any_real = true;
    }
    enc.outputs.push_back(last_h);
  }
  if (!any_real) throw DimensionError("encode: mask excludes every position");
  enc.Y = concat_cols<T>(enc.outputs);
  enc.final_state = state;
  return enc;
}

}  // namespace entail
