#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "entail/mat.hpp"
#include "entail/rng.hpp"
#include "entail/tape.hpp"

namespace entail {

// Named trainable tensors in insertion order. Order is part of the contract:
// optimizer sweeps, gradient checks and checkpoints all follow it.
template <typename T>
struct ParameterSet {
  struct Entry {
    std::string name;
    Mat<T> value;
  };

  std::vector<Entry> entries;
  std::unordered_map<std::string, size_t> index;

  Mat<T>& add(const std::string& name, Mat<T> value) {
    if (index.count(name)) throw DimensionError("ParameterSet: duplicate parameter " + name);
    index.emplace(name, entries.size());
    entries.push_back(Entry{name, std::move(value)});
    return entries.back().value;
  }

  bool has(const std::string& name) const { return index.count(name) != 0; }

  Mat<T>& at(const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw DimensionError("ParameterSet: unknown parameter " + name);
    return entries[it->second].value;
  }
  const Mat<T>& at(const std::string& name) const {
    return const_cast<ParameterSet*>(this)->at(name);
  }

  size_t total_size() const {
    size_t n = 0;
    for (const auto& e : entries) n += e.value.size();
    return n;
  }

  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (const auto& e : entries) out.add(e.name, e.value.template cast<U>());
    return out;
  }
};

// Flat mutable view of one named parameter; the unit optimizers and the
// finite-difference checker iterate over.
template <typename T>
struct ParamRef {
  std::string name;
  T* data;
  size_t size;
};

template <typename T>
std::vector<ParamRef<T>> param_refs(ParameterSet<T>& params) {
  std::vector<ParamRef<T>> refs;
  refs.reserve(params.entries.size());
  for (auto& e : params.entries)
    refs.push_back(ParamRef<T>{e.name, e.value.data.data(), e.value.size()});
  return refs;
}

// Gradients keyed by parameter name, accumulated flat.
template <typename T>
struct NamedGrads {
  std::unordered_map<std::string, Mat<T>> by_name;

  void accumulate(const std::string& name, const Mat<T>& g) {
    auto it = by_name.find(name);
    if (it == by_name.end())
      by_name.emplace(name, g);
    else
      add_into(it->second, g);
  }

  const Mat<T>* find(const std::string& name) const {
    auto it = by_name.find(name);
    return it == by_name.end() ? nullptr : &it->second;
  }
};

// Lifts named parameters onto one tape, at most once each, and maps node
// gradients back to names after backward().
template <typename T>
class GraphBinder {
 public:
  explicit GraphBinder(Tape<T>& tape, bool trainable = true)
      : tape_(tape), trainable_(trainable) {}

  Tensor<T> param(const ParameterSet<T>& params, const std::string& name) {
    return lift(name, params.at(name));
  }

  // For tensors stored outside a ParameterSet (tunable embedding rows).
  Tensor<T> named_value(const std::string& name, const Mat<T>& value) {
    return lift(name, value);
  }

  NamedGrads<T> collect(const GradMap<T>& grads) const {
    NamedGrads<T> out;
    for (const auto& [name, tensor] : lifted_)
      if (grads.has(tensor.node_id())) out.accumulate(name, grads.at(tensor.node_id()));
    return out;
  }

  Tape<T>& tape() { return tape_; }

 private:
  Tensor<T> lift(const std::string& name, const Mat<T>& value) {
    auto it = lifted_.find(name);
    if (it != lifted_.end()) return it->second;
    Tensor<T> t = trainable_ ? tape_.leaf(value) : Tensor<T>::constant(value);
    lifted_.emplace(name, t);
    return t;
  }

  Tape<T>& tape_;
  bool trainable_;
  std::unordered_map<std::string, Tensor<T>> lifted_;
};

inline double uniform_init_bound(int fan_in) {
  return 1.0 / std::sqrt(static_cast<double>(fan_in));
}

template <typename T>
Mat<T> random_uniform(int rows, int cols, double bound, Rng& rng) {
  Mat<T> m(rows, cols);
  for (auto& v : m.data) v = static_cast<T>(rng.uniform(-bound, bound));
  return m;
}

}  // namespace entail
