#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "nara/bundle.hpp"
#include "nara/dataset.hpp"
#include "nara/parallel.hpp"

namespace nara {

struct TrainingConfig {
  double lr = 1e-3;
  std::size_t batch = 16;                  // K
  std::size_t max_chunk = 20;              // B
  std::size_t epochs = 30;
  std::size_t drafts = 1;                  // rollouts per training position
  std::size_t positions_per_sequence = 4;  // training positions per sequence per epoch
  std::uint64_t seed = kDefaultSeed;
  Execution execution = Execution::parallel;
  ConfidenceTrainingConfig confidence;

  void validate() const;
};

/// One training position: observe x_<=position, predict the next `chunk`.
struct TrainingSample {
  std::size_t sequence = 0;
  std::size_t position = 0;  // v in [1, N]
  std::size_t chunk = 0;     // l = min(B, N - v)
};

TrainingSample draw_training_sample(std::size_t sequence, std::size_t length, std::size_t max_chunk, Rng& rng);

/// rollouts[sample][draft] holds l values drawn sequentially from the AR
/// model after x_<=v. They enter the loss as constants.
using Rollouts = std::vector<std::vector<std::vector<double>>>;

Rollouts draw_rollouts(const ArParams& ar, const std::vector<std::vector<double>>& sequences,
                       std::span<const TrainingSample> batch, std::size_t drafts, std::uint64_t seed,
                       Execution execution = Execution::parallel);

struct JointLoss {
  double ground_truth = 0.0;  // (1/K) sum -log p(x_<=v+l)
  double approximate = 0.0;   // (1/KM) sum -log q(x-hat | x_<=v, priors)
  std::size_t ground_truth_positions = 0;
  std::size_t samples = 0;

  double total() const noexcept { return ground_truth + approximate; }
};

/// Joint objective over a batch with fixed rollouts. When the gradient
/// pointers are non-null, d(total)/d(theta) and d(total)/d(W) are added into
/// them.
JointLoss joint_loss(const ArParams& ar, const PriorParams& prior,
                     const std::vector<std::vector<double>>& sequences,
                     std::span<const TrainingSample> batch, const Rollouts& rollouts, ArParams* ar_grad,
                     PriorParams* prior_grad, Execution execution = Execution::parallel);

/// Draws the rollouts from `seed`, then evaluates.
JointLoss joint_loss(const ArParams& ar, const PriorParams& prior,
                     const std::vector<std::vector<double>>& sequences,
                     std::span<const TrainingSample> batch, std::size_t drafts, std::uint64_t seed);

/// Mean per-position teacher-forced NLL.
double mean_sequence_nll(const ArParams& ar, const std::vector<std::vector<double>>& sequences,
                         Execution execution = Execution::parallel);

struct EpochLog {
  std::size_t epoch = 0;
  double train_nll = 0.0;  // per ground-truth position
  double val_nll = 0.0;
  double prior_l1 = 0.0;
};

struct TrainingLog {
  double initial_val_nll = 0.0;
  double initial_prior_l1 = 0.0;
  std::vector<EpochLog> epochs;
  ConfidenceFitLog confidence;
};

/// Adam on the joint objective for `epochs`, then confidence training with
/// the AR model and prior predictor frozen. Zero epochs leaves the bundle
/// untouched.
TrainingLog train(ModelBundle& bundle, const SinusoidDataset& dataset, const TrainingConfig& config);

/// CSV with header epoch,train_nll,val_nll,prior_l1,conf_bce. Joint epochs
/// come first with an empty conf_bce; confidence epochs continue the
/// numbering with only conf_bce (validation BCE) filled.
void write_training_log(const TrainingLog& log, std::ostream& out);

}  // namespace nara
