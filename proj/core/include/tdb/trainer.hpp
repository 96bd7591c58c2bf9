#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "tdb/dataset.hpp"
#include "tdb/evaluator.hpp"
#include "tdb/model.hpp"
#include "tdb/regularizer.hpp"

namespace tdb {

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t batch_size = 100;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  RegConfig reg;
  std::size_t valid_interval = 5;  // 0 disables validation and snapshotting
  double adagrad_eps = 1e-10;
  std::size_t threads = 0;  // 0: thread_count()
  std::filesystem::path log_path;  // appended to when non-empty

  void validate() const;
};

// Dense gradients shaped like the model's parameters. tail is empty for tied
// models (tail-role gradients land in head); core is empty for constant cores.
struct GradientSet {
  std::vector<double> head;
  std::vector<double> rel;
  std::vector<double> tail;
  std::vector<double> core;

  static GradientSet zeros_like(const TdbModel& model);
  void set_zero();
  void add(const GradientSet& other);
};

// -scores[k] + logsumexp(scores) + penalty, with a max-shifted logsumexp.
double loss_triplet(std::span<const double> scores, std::size_t k, double penalty);

// Adds the gradient of one triplet's loss (score softmax + penalty) into `grads`; returns the loss.
double accumulate_triplet_gradient(const TdbModel& model, const Triplet& x, const RegConfig& reg,
                                   GradientSet& grads);

struct BatchResult {
  GradientSet grads;  // gradient of the summed loss
  double mean_loss = 0.0;
};

BatchResult batch_gradients(const TdbModel& model, std::span<const Triplet> batch,
                            const TrainConfig& cfg);
// Reuses `grads` (resized and zeroed); returns the summed loss.
double batch_gradients_into(const TdbModel& model, std::span<const Triplet> batch,
                            const TrainConfig& cfg, GradientSet& grads);

struct AdagradState {
  std::vector<double> head;
  std::vector<double> rel;
  std::vector<double> tail;
  std::vector<double> core;
  double eps = 1e-10;

  static AdagradState for_model(const TdbModel& model, double eps = 1e-10);
};

// accum += g^2; theta -= lr * g / (sqrt(accum) + eps), elementwise.
void adagrad_update(TdbModel& model, AdagradState& state, const GradientSet& grads, double lr);

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double valid_mrr = std::numeric_limits<double>::quiet_NaN();  // NaN when not evaluated
};

struct FitResult {
  std::vector<EpochRecord> trace;
  std::size_t best_epoch = 0;  // 0: final model kept
  double best_valid_mrr = std::numeric_limits<double>::quiet_NaN();
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Trains in place. With validation on, the model ends as the best-validation snapshot.
// Throws TrainingError on a non-finite loss.
FitResult fit(TdbModel& model, const Dataset& ds, const TrainConfig& cfg,
              const EpochCallback& on_epoch = {});

}  // namespace tdb
