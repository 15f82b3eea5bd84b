#pragma once

#include <string>
#include <vector>

#include "spdnet/model.hpp"
#include "spdnet/rng.hpp"
#include "spdnet/skeleton.hpp"

namespace spdnet {

struct OptimState {
  double learning_rate = 1e-2;
  double momentum = 0.9;
  double clip_norm = 5.0;
  double lr_decay = 0.5;
  int lr_decay_every = 50;  // epochs
  int step_count = 0;
  std::vector<Mat> velocity;

  double lr_for_epoch(int epoch) const;
};

// p <- p - lr * (momentum * v + clip(g)). Gradients are clipped at the
// global norm; a non-finite gradient skips the whole step, with the event
// counted.
void sgd_step(std::vector<Param>& params, const std::vector<Mat>& grads, OptimState& opt,
              double lr);

struct EpochMetrics {
  double loss_sum = 0.0;   // Eq-style sum over the epoch
  double loss_mean = 0.0;  // per-sample average, the quantity reported in logs
  double accuracy = 0.0;
  int samples = 0;
  int skipped = 0;
};

// One pass over the raw sequences: per-epoch augmentation and subclip
// draws, seeded shuffle, minibatch gradient accumulation in sample order.
// Deterministic given the rng state.
EpochMetrics train_epoch(Model& model, const std::vector<SkeletonSequence>& data,
                         const PipelineOptions& pipeline, OptimState& opt, double lr,
                         int batch_size, Rng& rng);

struct EvalReport {
  int classes = 0;
  std::vector<std::string> class_names;
  std::vector<std::vector<int>> confusion;  // [true][predicted]
  std::vector<double> precision, recall;
  double accuracy = 0.0;
  double wall_seconds = 0.0;
  std::string config_echo;

  std::string confusion_csv() const;
  std::string summary() const;
};

EvalReport evaluate(const Model& model, const std::vector<PreparedSample>& samples,
                    std::vector<std::string> class_names = {});

// Confusion-derived metrics on externally produced (label, prediction)
// pairs; the evaluation path above and the unit fixtures share it.
EvalReport metrics_from_pairs(const std::vector<std::pair<int, int>>& pairs, int classes,
                              std::vector<std::string> class_names = {});

struct GradCheckEntry {
  std::string param;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  int coords = 0;
};

struct GradCheckReport {
  double worst_rel_err = 0.0;
  std::string worst_param;
  std::vector<GradCheckEntry> entries;
  std::string summary() const;
};

// Central differences (f(p+h) - f(p-h)) / 2h on sampled parameter
// coordinates against the tape adjoint.
GradCheckReport gradient_check(Model& model, const PreparedSample& sample, double h,
                               int coords_per_param, Rng& rng);

}  // namespace spdnet
