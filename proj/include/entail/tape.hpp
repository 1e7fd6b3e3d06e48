#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "entail/mat.hpp"

namespace entail {

template <typename T>
class Tape;

// Handle to a value in a computation. Constants carry only the value; tensors
// produced on a tape additionally carry the node id used by backward().
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Mat<T> m) {
    Tensor t;
    t.val_ = std::make_shared<const Mat<T>>(std::move(m));
    return t;
  }

  const Mat<T>& value() const { return *val_; }
  std::shared_ptr<const Mat<T>> shared_value() const { return val_; }
  int rows() const { return val_->rows; }
  int cols() const { return val_->cols; }

  bool on_tape() const { return tape_ != nullptr; }
  int node_id() const { return node_; }  // -1 for constants
  Tape<T>* tape() const { return tape_; }

  bool defined() const { return static_cast<bool>(val_); }

 private:
  friend class Tape<T>;
  std::shared_ptr<const Mat<T>> val_;
  Tape<T>* tape_ = nullptr;
  int node_ = -1;
};

template <typename T>
struct GradMap {
  std::vector<std::optional<Mat<T>>> by_node;

  bool has(int node) const {
    return node >= 0 && node < static_cast<int>(by_node.size()) && by_node[node].has_value();
  }
  const Mat<T>& at(int node) const { return *by_node[node]; }
};

// Records one operation per node, in execution order (inputs always precede
// their consumers). backward() replays the records in reverse, summing
// gradients where a node feeds several consumers.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(const Mat<T>& upstream, GradMap<T>& grads)>;

  struct Node {
    const char* op;
    std::vector<int> parents;
    BackwardFn backward;  // empty for leaves
    int rows, cols;
  };

  Tensor<T> leaf(Mat<T> value) {
    Tensor<T> t;
    t.val_ = std::make_shared<const Mat<T>>(std::move(value));
    t.tape_ = this;
    t.node_ = add_node("leaf", {}, nullptr, t.val_->rows, t.val_->cols);
    return t;
  }

  Tensor<T> make(const char* op, std::shared_ptr<const Mat<T>> value, std::vector<int> parents,
                 BackwardFn backward) {
    Tensor<T> t;
    t.val_ = std::move(value);
    t.tape_ = this;
    t.node_ = add_node(op, std::move(parents), std::move(backward), t.val_->rows, t.val_->cols);
    return t;
  }

  int size() const { return static_cast<int>(nodes_.size()); }
  const Node& node(int id) const { return nodes_[static_cast<size_t>(id)]; }

  // Reverse-topological sweep from a scalar loss. Gradients accumulate by
  // summation at shared nodes; nodes unreachable from the loss get none.
  GradMap<T> backward(const Tensor<T>& loss) const {
    if (!loss.defined() || loss.tape() != this || loss.node_id() < 0)
      throw DimensionError("backward: loss is not a tensor of this tape");
    if (loss.rows() != 1 || loss.cols() != 1)
      throw DimensionError("backward: loss must be scalar, got " + loss.value().shape());
    GradMap<T> grads;
    grads.by_node.resize(nodes_.size());
    grads.by_node[static_cast<size_t>(loss.node_id())] = Mat<T>::filled(1, 1, T(1));
    for (int id = loss.node_id(); id >= 0; --id) {
      auto& slot = grads.by_node[static_cast<size_t>(id)];
      if (!slot.has_value()) continue;
      const Node& n = nodes_[static_cast<size_t>(id)];
      if (n.backward) n.backward(*slot, grads);
    }
    return grads;
  }

  static void accumulate(GradMap<T>& grads, int node, Mat<T> delta) {
    auto& slot = grads.by_node[static_cast<size_t>(node)];
    if (slot.has_value())
      add_into(*slot, delta);
    else
      slot = std::move(delta);
  }

 private:
  int add_node(const char* op, std::vector<int> parents, BackwardFn backward, int r, int c) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{op, std::move(parents), std::move(backward), r, c});
    return id;
  }

  std::vector<Node> nodes_;
};

namespace detail {

template <typename T>
Tape<T>* common_tape(std::initializer_list<const Tensor<T>*> ins) {
  Tape<T>* tape = nullptr;
  for (const Tensor<T>* t : ins) {
    if (!t->on_tape()) continue;
    if (tape && tape != t->tape())
      throw DimensionError("op: inputs belong to different tapes");
    tape = t->tape();
  }
  return tape;
}

template <typename T>
std::vector<int> tape_parents(std::initializer_list<const Tensor<T>*> ins) {
  std::vector<int> ids;
  for (const Tensor<T>* t : ins)
    if (t->on_tape()) ids.push_back(t->node_id());
  return ids;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Primitive operations. Each returns a constant when no input is on a tape,
// otherwise a node whose backward closure pushes gradients to tape parents.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions disagree: " + a.value().shape() + " * " +
                         b.value().shape());
  Mat<T> out = mat_mul(a.value(), b.value());
  Tape<T>* tape = detail::common_tape<T>({&a, &b});
  if (!tape) return Tensor<T>::constant(std::move(out));
  auto ov = std::make_shared<const Mat<T>>(std::move(out));
  auto av = a.shared_value();
  auto bv = b.shared_value();
  const int aid = a.node_id(), bid = b.node_id();
  return tape->make(
      "matmul", ov, detail::tape_parents<T>({&a, &b}),
      [av, bv, aid, bid](const Mat<T>& up, GradMap<T>& g) {
        if (aid >= 0) Tape<T>::accumulate(g, aid, mat_mul_nt(up, *bv));  // dA = dC * B^T
        if (bid >= 0) Tape<T>::accumulate(g, bid, mat_mul_tn(*av, up));  // dB = A^T * dC
      });
}

enum class Unary { Tanh, Sigmoid };

template <typename T>
Tensor<T> map_unary(Unary f, const Tensor<T>& x) {
  using CT = std::common_type_t<T, double>;
  Mat<T> out(x.rows(), x.cols());
  const Mat<T>& xv = x.value();
  for (size_t i = 0; i < xv.data.size(); ++i) {
    const CT v = static_cast<CT>(xv.data[i]);
    if (!std::isfinite(static_cast<double>(v)))
      throw NumericError("map_unary: non-finite input value");
    if (f == Unary::Tanh) {
      out.data[i] = static_cast<T>(std::tanh(v));
    } else {
      // numerically stable sigmoid
      out.data[i] = static_cast<T>(v >= 0 ? CT(1) / (CT(1) + std::exp(-v))
                                          : std::exp(v) / (CT(1) + std::exp(v)));
    }
  }
  Tape<T>* tape = detail::common_tape<T>({&x});
  if (!tape) return Tensor<T>::constant(std::move(out));
  auto ov = std::make_shared<const Mat<T>>(std::move(out));
  const int xid = x.node_id();
  return tape->make(f == Unary::Tanh ? "tanh" : "sigmoid", ov, {xid},
                    [ov, xid, f](const Mat<T>& up, GradMap<T>& g) {
                      Mat<T> dx(up.rows, up.cols);
                      for (size_t i = 0; i < up.data.size(); ++i) {
                        const T y = ov->data[i];
                        const T d = f == Unary::Tanh ? T(1) - y * y : y * (T(1) - y);
                        dx.data[i] = up.data[i] * d;
                      }
                      Tape<T>::accumulate(g, xid, std::move(dx));
                    });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  return map_unary(Unary::Tanh, x);
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return map_unary(Unary::Sigmoid, x);
}

// Element-wise add. Also accepts a column-vector bias against a matrix with
// the same row count; the bias is broadcast across columns and the node is
// labeled "add_bias" so the variant that fired is visible on the tape.
template <typename T>
Tensor<T> add(const Tensor<T>& x, const Tensor<T>& y) {
  const bool same = x.value().same_shape(y.value());
  const bool x_bias = !same && x.cols() == 1 && x.rows() == y.rows();
  const bool y_bias = !same && y.cols() == 1 && y.rows() == x.rows();
  if (!same && !x_bias && !y_bias)
    throw DimensionError("add: incompatible shapes " + x.value().shape() + " + " +
                         y.value().shape());

  const Tensor<T>& full = x_bias ? y : x;
  const Tensor<T>& bias = x_bias ? x : y;
  Mat<T> out = full.value();
  if (same) {
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += bias.value().data[i];
  } else {
    for (int i = 0; i < out.rows; ++i) {
      const T b = bias.value()(i, 0);
      T* row = out.data.data() + static_cast<size_t>(i) * out.cols;
      for (int j = 0; j < out.cols; ++j) row[j] += b;
    }
  }
  Tape<T>* tape = detail::common_tape<T>({&x, &y});
  if (!tape) return Tensor<T>::constant(std::move(out));
  auto ov = std::make_shared<const Mat<T>>(std::move(out));
  const int fid = full.node_id(), bid = bias.node_id();
  return tape->make(same ? "add" : "add_bias", ov, detail::tape_parents<T>({&x, &y}),
                    [fid, bid, same](const Mat<T>& up, GradMap<T>& g) {
                      if (fid >= 0) Tape<T>::accumulate(g, fid, up);
                      if (bid < 0) return;
                      if (same) {
                        Tape<T>::accumulate(g, bid, up);
                      } else {
                        Mat<T> db(up.rows, 1);
                        for (int i = 0; i < up.rows; ++i) {
                          T acc = T(0);
                          for (int j = 0; j < up.cols; ++j) acc += up(i, j);
                          db(i, 0) = acc;
                        }
                        Tape<T>::accumulate(g, bid, std::move(db));
                      }
                    });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& x, const Tensor<T>& y) {
  if (!x.value().same_shape(y.value()))
    throw DimensionError("mul: incompatible shapes " + x.value().shape() + " * " +
                         y.value().shape());
  Mat<T> out = x.value();
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= y.value().data[i];
  Tape<T>* tape = detail::common_tape<T>({&x, &y});
  if (!tape) return Tensor<T>::constant(std::move(out));
  auto ov = std::make_shared<const Mat<T>>(std::move(out));
  auto xv = x.shared_value();
  auto yv = y.shared_value();
  const int xid = x.node_id(), yid = y.node_id();
  return tape->make("mul", ov, detail::tape_parents<T>({&x, &y}),
                    [xv, yv, xid, yid](const Mat<T>& up, GradMap<T>& g) {
                      if (xid >= 0) {
                        Mat<T> dx(up.rows, up.cols);
                        for (size_t i = 0; i < up.data.size(); ++i)
                          dx.data[i] = up.data[i] * yv->data[i];
                        Tape<T>::accumulate(g, xid, std::move(dx));
                      }
                      if (yid >= 0) {
                        Mat<T> dy(up.rows, up.cols);
                        for (size_t i = 0; i < up.data.size(); ++i)
                          dy.data[i] = up.data[i] * xv->data[i];
                        Tape<T>::accumulate(g, yid, std::move(dy));
                      }
                    });
}

// Repeats column v L times: v ⊗ 1_L. Backward sums over columns.
template <typename T>
Tensor<T> broadcast_cols(const Tensor<T>& v, int count) {
  if (v.cols() != 1)
    throw DimensionError("broadcast_cols: expected column vector, got " + v.value().shape());
  if (count < 1)
    throw DimensionError("broadcast_cols: empty sequence (count = " + std::to_string(count) + ")");
  Mat<T> out(v.rows(), count);
  for (int i = 0; i < out.rows; ++i) {
    const T val = v.value()(i, 0);
    for (int j = 0; j < count; ++j) out(i, j) = val;
  }
  Tape<T>* tape = detail::common_tape<T>({&v});
  if (!tape) return Tensor<T>::constant(std::move(out));
  auto ov = std::make_shared<const Mat<T>>(std::move(out));
  const int vid = v.node_id();
  return tape->make("broadcast_cols", ov, {vid}, [vid](const Mat<T>& up, GradMap<T>& g) {
    Mat<T> dv(up.rows, 1);
    for (int i = 0; i < up.rows; ++i) {
      T acc = T(0);
      for (int j = 0; j < up.cols; ++j) acc += up(i, j);
      dv(i, 0) = acc;
    }
    Tape<T>::accumulate(g, vid, std::move(dv));
  });
}

// Softmax over a 1xL score row with a binary keep-mask. Masked positions get
// weight exactly 0; the rest is max-subtracted for stability.
template <typename T>
Tensor<T> softmax_masked(const Tensor<T>& scores, const std::vector<uint8_t>& mask) {
  if (scores.rows() != 1)
    throw DimensionError("softmax_masked: expected 1xL scores, got " + scores.value().shape());
  const int L = scores.cols();
  if (static_cast<int>(mask.size()) != L)
    throw DimensionError("softmax_masked: mask length " + std::to_string(mask.size()) +
                         " does not match scores " + scores.value().shape());
  using CT = std::common_type_t<T, double>;
  CT max_score = -std::numeric_limits<CT>::infinity();
  for (int j = 0; j < L; ++j)
    if (mask[j]) max_score = std::max(max_score, static_cast<CT>(scores.value()(0, j)));
  if (!std::isfinite(static_cast<double>(max_score)))
    throw DimensionError("softmax_masked: degenerate mask (all positions masked)");

  Mat<T> out(1, L);
  CT denom = 0;
  for (int j = 0; j < L; ++j) {
    if (!mask[j]) continue;
    denom += std::exp(static_cast<CT>(scores.value()(0, j)) - max_score);
  }
  for (int j = 0; j < L; ++j) {
    out(0, j) = mask[j] ? static_cast<T>(
                              std::exp(static_cast<CT>(scores.value()(0, j)) - max_score) /
                              denom)
                        : T(0);
  }
  Tape<T>* tape = detail::common_tape<T>({&scores});
  if (!tape) return Tensor<T>::constant(std::move(out));
  auto ov = std::make_shared<const Mat<T>>(std::move(out));
  const int sid = scores.node_id();
  return tape->make("softmax_masked", ov, {sid}, [ov, sid](const Mat<T>& up, GradMap<T>& g) {
    // ds_j = a_j * (u_j - sum_i u_i a_i); masked entries have a_j = 0.
    T dot = T(0);
    for (size_t i = 0; i < up.data.size(); ++i) dot += up.data[i] * ov->data[i];
    Mat<T> ds(1, static_cast<int>(up.data.size()));
    for (size_t i = 0; i < up.data.size(); ++i) ds.data[i] = ov->data[i] * (up.data[i] - dot);
    Tape<T>::accumulate(g, sid, std::move(ds));
  });
}

// Fused log-sum-exp cross entropy over a logit vector (row or column).
// Gradient w.r.t. logits is softmax(logits) - onehot(label).
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, int label) {
  if (logits.rows() != 1 && logits.cols() != 1)
    throw DimensionError("cross_entropy: expected a logit vector, got " + logits.value().shape());
  const int n = static_cast<int>(logits.value().size());
  if (label < 0 || label >= n)
    throw DimensionError("cross_entropy: label " + std::to_string(label) + " out of range [0," +
                         std::to_string(n) + ")");
  using CT = std::common_type_t<T, double>;
  CT max_logit = -std::numeric_limits<CT>::infinity();
  for (T v : logits.value().data) max_logit = std::max(max_logit, static_cast<CT>(v));
  CT sum_exp = 0;
  for (T v : logits.value().data) sum_exp += std::exp(static_cast<CT>(v) - max_logit);
  const CT lse = max_logit + std::log(sum_exp);
  Mat<T> out(1, 1);
  out(0, 0) = static_cast<T>(lse - static_cast<CT>(logits.value().data[label]));

  Tape<T>* tape = detail::common_tape<T>({&logits});
  if (!tape) return Tensor<T>::constant(std::move(out));
  Mat<T> probs(logits.rows(), logits.cols());
  for (size_t i = 0; i < probs.data.size(); ++i)
    probs.data[i] = static_cast<T>(
        std::exp(static_cast<CT>(logits.value().data[i]) - max_logit) / sum_exp);
  auto pv = std::make_shared<const Mat<T>>(std::move(probs));
  auto ov = std::make_shared<const Mat<T>>(std::move(out));
  const int lid = logits.node_id();
  return tape->make("cross_entropy", ov, {lid}, [pv, lid, label](const Mat<T>& up, GradMap<T>& g) {
    Mat<T> dl = *pv;
    dl.data[label] -= T(1);
    for (auto& v : dl.data) v *= up(0, 0);
    Tape<T>::accumulate(g, lid, std::move(dl));
  });
}

// Vertical stack [X; Y]. A zero-row operand is allowed and contributes nothing.
template <typename T>
Tensor<T> concat_rows(const Tensor<T>& x, const Tensor<T>& y) {
  if (x.cols() != y.cols() && x.rows() != 0 && y.rows() != 0)
    throw DimensionError("concat_rows: column mismatch " + x.value().shape() + " over " +
                         y.value().shape());
  const int cols = x.rows() == 0 ? y.cols() : x.cols();
  Mat<T> out(x.rows() + y.rows(), cols);
  std::copy(x.value().data.begin(), x.value().data.end(), out.data.begin());
  std::copy(y.value().data.begin(), y.value().data.end(),
            out.data.begin() + static_cast<long>(x.value().size()));
  Tape<T>* tape = detail::common_tape<T>({&x, &y});
  if (!tape) return Tensor<T>::constant(std::move(out));
  auto ov = std::make_shared<const Mat<T>>(std::move(out));
  const int xid = x.node_id(), yid = y.node_id();
  const int xrows = x.rows(), yrows = y.rows();
  return tape->make("concat_rows", ov, detail::tape_parents<T>({&x, &y}),
                    [xid, yid, xrows, yrows, cols](const Mat<T>& up, GradMap<T>& g) {
                      if (xid >= 0) {
                        Mat<T> dx(xrows, cols);
                        std::copy(up.data.begin(),
                                  up.data.begin() + static_cast<long>(dx.size()),
                                  dx.data.begin());
                        Tape<T>::accumulate(g, xid, std::move(dx));
                      }
                      if (yid >= 0) {
                        Mat<T> dy(yrows, cols);
                        std::copy(up.data.begin() + static_cast<long>(static_cast<size_t>(xrows) *
                                                                      cols),
                                  up.data.end(), dy.data.begin());
                        Tape<T>::accumulate(g, yid, std::move(dy));
                      }
                    });
}

// Horizontal pack [c_1 ... c_n] of column vectors; backward slices per column.
template <typename T>
Tensor<T> concat_cols(std::span<const Tensor<T>> cols) {
  if (cols.empty()) throw DimensionError("concat_cols: empty sequence");
  const int rows = cols.front().rows();
  for (const auto& c : cols)
    if (c.cols() != 1 || c.rows() != rows)
      throw DimensionError("concat_cols: expected " + shape_str(rows, 1) + " columns, got " +
                           c.value().shape());
  Mat<T> out(rows, static_cast<int>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j)
    for (int i = 0; i < rows; ++i) out(i, static_cast<int>(j)) = cols[j].value()(i, 0);

  Tape<T>* tape = nullptr;
  for (const auto& c : cols) {
    if (!c.on_tape()) continue;
    if (tape && tape != c.tape())
      throw DimensionError("concat_cols: inputs belong to different tapes");
    tape = c.tape();
  }
  if (!tape) return Tensor<T>::constant(std::move(out));
  std::vector<int> ids(cols.size());
  std::vector<int> parents;
  for (size_t j = 0; j < cols.size(); ++j) {
    ids[j] = cols[j].node_id();
    if (ids[j] >= 0) parents.push_back(ids[j]);
  }
  auto ov = std::make_shared<const Mat<T>>(std::move(out));
  return tape->make("concat_cols", ov, std::move(parents),
                    [ids, rows](const Mat<T>& up, GradMap<T>& g) {
                      for (size_t j = 0; j < ids.size(); ++j) {
                        if (ids[j] < 0) continue;
                        Mat<T> dc(rows, 1);
                        for (int i = 0; i < rows; ++i) dc(i, 0) = up(i, static_cast<int>(j));
                        Tape<T>::accumulate(g, ids[j], std::move(dc));
                      }
                    });
}

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& cols) {
  return concat_cols(std::span<const Tensor<T>>(cols));
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  Mat<T> out = mat_transpose(x.value());
  Tape<T>* tape = detail::common_tape<T>({&x});
  if (!tape) return Tensor<T>::constant(std::move(out));
  auto ov = std::make_shared<const Mat<T>>(std::move(out));
  const int xid = x.node_id();
  return tape->make("transpose", ov, {xid}, [xid](const Mat<T>& up, GradMap<T>& g) {
    Tape<T>::accumulate(g, xid, mat_transpose(up));
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  Mat<T> out = x.value();
  for (auto& v : out.data) v *= factor;
  Tape<T>* tape = detail::common_tape<T>({&x});
  if (!tape) return Tensor<T>::constant(std::move(out));
  auto ov = std::make_shared<const Mat<T>>(std::move(out));
  const int xid = x.node_id();
  return tape->make("scale", ov, {xid}, [xid, factor](const Mat<T>& up, GradMap<T>& g) {
    Mat<T> dx = up;
    for (auto& v : dx.data) v *= factor;
    Tape<T>::accumulate(g, xid, std::move(dx));
  });
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
  T acc = T(0);
  for (T v : x.value().data) acc += v;
  Mat<T> out(1, 1);
  out(0, 0) = acc;
  Tape<T>* tape = detail::common_tape<T>({&x});
  if (!tape) return Tensor<T>::constant(std::move(out));
  auto ov = std::make_shared<const Mat<T>>(std::move(out));
  const int xid = x.node_id();
  const int r = x.rows(), c = x.cols();
  return tape->make("sum_all", ov, {xid}, [xid, r, c](const Mat<T>& up, GradMap<T>& g) {
    Tape<T>::accumulate(g, xid, Mat<T>::filled(r, c, up(0, 0)));
  });
}

// Inference-path softmax over a logit vector (plain values, no tape node).
template <typename T>
std::vector<T> softmax_values(const Mat<T>& logits) {
  using CT = std::common_type_t<T, double>;
  CT max_logit = -std::numeric_limits<CT>::infinity();
  for (T v : logits.data) max_logit = std::max(max_logit, static_cast<CT>(v));
  std::vector<T> out(logits.size());
  CT denom = 0;
  for (size_t i = 0; i < out.size(); ++i) {
    const CT e = std::exp(static_cast<CT>(logits.data[i]) - max_logit);
    out[i] = static_cast<T>(e);
    denom += e;
  }
  for (auto& v : out) v = static_cast<T>(static_cast<CT>(v) / denom);
  return out;
}

}  // namespace entail
