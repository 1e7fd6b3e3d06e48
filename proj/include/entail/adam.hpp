#pragma once

#include <cmath>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "entail/params.hpp"

namespace entail {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment buffers keyed by parameter name, plus the shared step
// counter. Buffers are created on first use and sized like their parameter.
template <typename T>
struct AdamState {
  struct Moments {
    std::vector<T> m, v;
  };
  std::unordered_map<std::string, Moments> moments;
  long step = 0;
  AdamConfig config;
};

// One update over every view. A missing gradient is treated as zero (the
// moments still decay), so the sweep is the dense update regardless of which
// parameters the batch touched. Parameters absent from `views` — frozen
// embedding rows — are never written.
template <typename T>
void adam_step(std::span<ParamRef<T>> views, const NamedGrads<T>& grads, AdamState<T>& state,
               double lr) {
  state.step += 1;
  const AdamConfig& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (const auto& view : views) {
    auto& mom = state.moments[view.name];
    if (mom.m.empty()) {
      mom.m.assign(view.size, T(0));
      mom.v.assign(view.size, T(0));
    } else if (mom.m.size() != view.size) {
      throw DimensionError("adam: moment size mismatch for " + view.name);
    }
    const Mat<T>* g = grads.find(view.name);
    if (g && g->size() != view.size)
      throw DimensionError("adam: gradient size mismatch for " + view.name);
    for (size_t i = 0; i < view.size; ++i) {
      const double gi = g ? static_cast<double>(g->data[i]) : 0.0;
      if (!std::isfinite(gi))
        throw NumericError("adam: non-finite gradient in parameter " + view.name);
      double m = c.beta1 * static_cast<double>(mom.m[i]) + (1.0 - c.beta1) * gi;
      double v = c.beta2 * static_cast<double>(mom.v[i]) + (1.0 - c.beta2) * gi * gi;
      mom.m[i] = static_cast<T>(m);
      mom.v[i] = static_cast<T>(v);
      const double m_hat = m / bc1;
      const double v_hat = v / bc2;
      view.data[i] = static_cast<T>(static_cast<double>(view.data[i]) -
                                    lr * m_hat / (std::sqrt(v_hat) + c.epsilon));
    }
  }
}

}  // namespace entail
