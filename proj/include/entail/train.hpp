#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "entail/adam.hpp"
#include "entail/gradcheck.hpp"
#include "entail/model.hpp"

namespace entail {

struct TrainConfig {
  double lr = 3e-4;
  double dropout = 0.0;
  double l2 = 0.0;
  int batch_size = 32;
  int max_epochs = 10;
  int patience = 5;
  uint64_t seed = 42;
  int jobs = 1;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;
  double train_acc = 0;
  double dev_acc = 0;
};

struct RunHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  double best_dev_acc = -1;
  bool diverged = false;
  int diverged_epoch = -1;
};

// fn(i) over [0, n), sharded across up to `jobs` threads. Work items must be
// independent; results land in pre-sized slots so ordering never depends on
// scheduling.
template <typename Fn>
void parallel_for(size_t n, int jobs, const Fn& fn) {
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (workers == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : threads) t.join();
}

struct EvalMetrics {
  size_t n = 0;
  double accuracy = 0;
  std::array<std::array<size_t, 3>, 3> confusion{};  // [gold][pred]
  std::array<double, 3> precision{};
  std::array<double, 3> recall{};

  void finalize() {
    size_t correct = 0;
    for (int g = 0; g < 3; ++g) correct += confusion[static_cast<size_t>(g)][static_cast<size_t>(g)];
    accuracy = n ? static_cast<double>(correct) / static_cast<double>(n) : 0;
    for (int c = 0; c < 3; ++c) {
      size_t pred_c = 0, gold_c = 0;
      for (int o = 0; o < 3; ++o) {
        pred_c += confusion[static_cast<size_t>(o)][static_cast<size_t>(c)];
        gold_c += confusion[static_cast<size_t>(c)][static_cast<size_t>(o)];
      }
      const size_t tp = confusion[static_cast<size_t>(c)][static_cast<size_t>(c)];
      precision[static_cast<size_t>(c)] =
          pred_c ? static_cast<double>(tp) / static_cast<double>(pred_c) : 0;
      recall[static_cast<size_t>(c)] =
          gold_c ? static_cast<double>(tp) / static_cast<double>(gold_c) : 0;
    }
  }
};

template <typename T>
EvalMetrics evaluate(const ModelState<T>& state, std::span<const Example> examples, int jobs = 1) {
  std::vector<int> predicted(examples.size());
  parallel_for(examples.size(), jobs, [&](size_t i) {
    predicted[i] = static_cast<int>(
        predict(state, examples[i].premise, examples[i].hypothesis).predicted);
  });
  EvalMetrics m;
  m.n = examples.size();
  for (size_t i = 0; i < examples.size(); ++i)
    ++m.confusion[static_cast<size_t>(examples[i].label)][static_cast<size_t>(predicted[i])];
  m.finalize();
  return m;
}

inline double majority_class_rate(std::span<const Example> examples) {
  std::array<size_t, 3> counts{};
  for (const Example& ex : examples) ++counts[static_cast<size_t>(ex.label)];
  const size_t top = *std::max_element(counts.begin(), counts.end());
  return examples.empty() ? 0 : static_cast<double>(top) / static_cast<double>(examples.size());
}

namespace detail {

template <typename T>
struct ExampleGrad {
  NamedGrads<T> grads;
  double ce = 0;
  bool correct = false;
};

// One example's loss gradient on its own tape. The dropout stream is a pure
// function of (seed, epoch, position in the shuffled epoch order).
template <typename T>
ExampleGrad<T> example_gradient(const ModelState<T>& state, const Example& ex,
                                const TrainConfig& cfg, int epoch, size_t ordinal) {
  Tape<T> tape;
  GraphBinder<T> binder(tape);
  Rng dropout_rng(mix_seed(mix_seed(cfg.seed, 0xd0ull + static_cast<uint64_t>(epoch)),
                           ordinal));
  DropoutPlan drop{cfg.dropout, Phase::Train, &dropout_rng};
  ForwardOut<T> fwd = forward_on(binder, state, ex.premise, ex.hypothesis, drop);
  Tensor<T> ce = cross_entropy(fwd.logits, static_cast<int>(ex.label));
  ExampleGrad<T> out;
  out.ce = static_cast<double>(ce.value()(0, 0));
  int best = 0;
  for (int i = 1; i < kNumClasses; ++i)
    if (fwd.logits.value()(i, 0) > fwd.logits.value()(best, 0)) best = i;
  out.correct = best == static_cast<int>(ex.label);
  out.grads = binder.collect(tape.backward(ce));
  return out;
}

template <typename T>
double l2_norm_sq(const ParameterSet<T>& params) {
  double acc = 0;
  for (const auto& e : params.entries)
    for (T v : e.value.data) acc += static_cast<double>(v) * static_cast<double>(v);
  return acc;
}

}  // namespace detail

template <typename T>
struct TrainResult {
  ModelState<T> best;
  RunHistory history;
};

// Optional per-epoch observer: sees the record just appended and the current
// (post-epoch) model.
template <typename T>
using EpochObserver = std::function<void(const EpochRecord&, const ModelState<T>&)>;

// Epoch loop: seeded reshuffle, per-example gradients (optionally in worker
// threads) reduced in example order, one Adam step per batch, dev evaluation
// and best-checkpoint tracking, early stop on patience. The l2 gradient
// lambda * theta is added analytically after the reduction, matching the
// penalty term in batch_loss_on.
template <typename T>
TrainResult<T> train(const ModelState<T>& initial, std::span<const Example> train_set,
                     std::span<const Example> dev_set, const TrainConfig& cfg,
                     const EpochObserver<T>& on_epoch = {}) {
  if (train_set.empty()) throw DataError("train: empty training set");
  ModelState<T> state = initial;
  ModelState<T> best = initial;
  AdamState<T> adam;
  RunHistory history;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const uint64_t epoch_seed = mix_seed(cfg.seed, 0xe0ull + static_cast<uint64_t>(epoch));
    std::vector<Batch> batches =
        make_batches(train_set, cfg.batch_size, epoch_seed, state.vocab);

    double loss_sum = 0;
    size_t correct = 0;
    size_t ordinal = 0;
    bool diverged = false;
    for (const Batch& batch : batches) {
      const size_t bsize = batch.example_ids.size();
      std::vector<detail::ExampleGrad<T>> results(bsize);
      const size_t base_ordinal = ordinal;
      parallel_for(bsize, cfg.jobs, [&](size_t i) {
        results[i] = detail::example_gradient(state, train_set[batch.example_ids[i]], cfg,
                                              epoch, base_ordinal + i);
      });
      ordinal += bsize;

      NamedGrads<T> grads;
      double ce_sum = 0;
      for (const auto& r : results) {
        ce_sum += r.ce;
        correct += r.correct ? 1 : 0;
        for (const auto& [name, g] : r.grads.by_name) grads.accumulate(name, g);
      }
      const T inv_b = static_cast<T>(1.0 / static_cast<double>(bsize));
      for (auto& [name, g] : grads.by_name)
        for (auto& v : g.data) v *= inv_b;
      if (cfg.l2 > 0) {
        for (const auto& e : state.params.entries) {
          Mat<T> reg = e.value;
          for (auto& v : reg.data) v *= static_cast<T>(cfg.l2);
          grads.accumulate(e.name, reg);
        }
      }

      const double batch_loss = ce_sum / static_cast<double>(bsize) +
                                cfg.l2 / 2.0 * detail::l2_norm_sq(state.params);
      if (!std::isfinite(batch_loss)) {
        diverged = true;
        break;
      }
      loss_sum += batch_loss;

      auto refs = trainable_refs(state);
      adam_step<T>(refs, grads, adam, cfg.lr);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(batches.size());
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(train_set.size());
    if (diverged) {
      history.diverged = true;
      history.diverged_epoch = epoch;
      history.epochs.push_back(rec);
      break;
    }
    rec.dev_acc = dev_set.empty() ? rec.train_acc : evaluate(state, dev_set, cfg.jobs).accuracy;
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec, state);

    if (rec.dev_acc > history.best_dev_acc) {
      history.best_dev_acc = rec.dev_acc;
      history.best_epoch = epoch;
      best = state;
    }
    if (cfg.patience > 0 && epoch - history.best_epoch >= cfg.patience) break;
  }
  if (history.best_epoch < 0) best = state;  // diverged on epoch 1
  return TrainResult<T>{std::move(best), std::move(history)};
}

// ---------------------------------------------------------------------------
// Grid search over (learning rate, dropout, l2).
// ---------------------------------------------------------------------------

struct Grids {
  std::vector<double> lrs{1e-4, 3e-4, 1e-3};
  std::vector<double> dropouts{0.0, 0.1, 0.2};
  std::vector<double> l2s{0.0, 1e-4, 3e-4, 1e-3};
};

struct GridPoint {
  double lr = 0, dropout = 0, l2 = 0;
  double best_dev_acc = -1;
  bool diverged = false;
};

inline std::vector<GridPoint> enumerate_grid(const Grids& grids) {
  if (grids.lrs.empty() || grids.dropouts.empty() || grids.l2s.empty())
    throw ConfigError("grid: every grid axis must be non-empty");
  std::vector<GridPoint> points;
  for (double lr : grids.lrs)
    for (double dropout : grids.dropouts)
      for (double l2 : grids.l2s) points.push_back(GridPoint{lr, dropout, l2, -1, false});
  return points;
}

template <typename T>
struct GridResult {
  std::vector<GridPoint> ranked;  // by best dev accuracy, descending
  TrainConfig best_config;
  TrainResult<T> best_run;
};

// Trains one independently seeded run per grid point; `jobs` fans runs out
// across threads. Ties rank by enumeration order, so results are stable.
template <typename T>
GridResult<T> grid_search(const ModelConfig& model_config, const Vocabulary& vocab,
                          const Word2VecTable* pretrained, std::span<const Example> train_set,
                          std::span<const Example> dev_set, const TrainConfig& base,
                          const Grids& grids, int jobs = 1) {
  std::vector<GridPoint> points = enumerate_grid(grids);
  std::vector<TrainResult<T>> runs(points.size());
  parallel_for(points.size(), jobs, [&](size_t i) {
    TrainConfig cfg = base;
    cfg.lr = points[i].lr;
    cfg.dropout = points[i].dropout;
    cfg.l2 = points[i].l2;
    cfg.seed = mix_seed(base.seed, 0x62ull + i);
    cfg.jobs = 1;  // run-level parallelism only
    ModelState<T> model = init_model<T>(model_config, vocab, pretrained, cfg.seed);
    runs[i] = train<T>(model, train_set, dev_set, cfg);
    points[i].best_dev_acc = runs[i].history.best_dev_acc;
    points[i].diverged = runs[i].history.diverged;
  });

  std::vector<size_t> order(points.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return points[a].best_dev_acc > points[b].best_dev_acc;
  });

  GridResult<T> out;
  for (size_t i : order) out.ranked.push_back(points[i]);
  const size_t win = order.front();
  out.best_config = base;
  out.best_config.lr = points[win].lr;
  out.best_config.dropout = points[win].dropout;
  out.best_config.l2 = points[win].l2;
  out.best_config.seed = mix_seed(base.seed, 0x62ull + win);
  out.best_run = std::move(runs[win]);
  return out;
}

// ---------------------------------------------------------------------------
// Attention/alignment agreement on the planted-correspondence task.
// ---------------------------------------------------------------------------

struct AlignmentScore {
  size_t aligned_tokens = 0;
  size_t matched = 0;
  double rate() const {
    return aligned_tokens ? static_cast<double>(matched) / static_cast<double>(aligned_tokens)
                          : 0;
  }
};

template <typename T>
AlignmentScore alignment_match_rate(const ModelState<T>& state,
                                    std::span<const Example> examples,
                                    std::span<const std::vector<int>> alignments, int jobs = 1) {
  std::vector<AlignmentScore> partial(examples.size());
  parallel_for(examples.size(), jobs, [&](size_t i) {
    Prediction pred = predict(state, examples[i].premise, examples[i].hypothesis);
    if (!pred.attention) return;
    const auto& rows = pred.attention->weights;
    const auto& align = alignments[i];
    for (size_t t = 0; t < align.size() && t < rows.size(); ++t) {
      if (align[t] < 0) continue;
      const auto& row = rows[t];
      size_t argmax = 0;
      for (size_t j = 1; j < row.size(); ++j)
        if (row[j] > row[argmax]) argmax = j;
      ++partial[i].aligned_tokens;
      if (static_cast<int>(argmax) == align[t]) ++partial[i].matched;
    }
  });
  AlignmentScore total;
  for (const auto& p : partial) {
    total.aligned_tokens += p.aligned_tokens;
    total.matched += p.matched;
  }
  return total;
}

// Full-model gradient check in checking precision. Dropout must be disabled;
// a live dropout stream would make the finite differences meaningless.
// The difference quotients are evaluated in extended precision so the
// reference side carries less rounding noise than the gradients under test
// (at h = 1e-5 the double-precision quotient alone is ~1e-11, which the
// relative-error floor of 1e-8 would turn into a spurious ~1e-3).
template <typename T>
GradCheckReport model_grad_check(ModelState<T>& state, std::span<const Example> batch,
                                 double l2_lambda = 0.0, double h = 1e-5) {
  static_assert(std::is_same_v<T, double>, "gradient checks run in checking precision");
  Tape<T> tape;
  GraphBinder<T> binder(tape);
  Tensor<T> loss = batch_loss_on(binder, state, batch, l2_lambda);
  NamedGrads<T> analytic = binder.collect(tape.backward(loss));
  auto views = trainable_refs(state);
  auto loss_fn = [&]() -> long double {
    ModelState<long double> wide = state.template cast<long double>();
    Tape<long double> t2;
    GraphBinder<long double> b2(t2, /*trainable=*/false);
    return batch_loss_on(b2, wide, batch, l2_lambda).value()(0, 0);
  };
  return grad_check<T>(views, loss_fn, analytic, h);
}

}  // namespace entail
