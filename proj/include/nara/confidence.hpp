#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "nara/ar_model.hpp"
#include "nara/dense.hpp"
#include "nara/prior.hpp"

namespace nara {

struct ModelBundle;

inline constexpr std::size_t kDefaultConfHidden = 64;
inline constexpr double kDefaultKappa = 2.5;

/// Confidence predictor: [window, priors] -> tanh hidden layer -> M logits,
/// read through a sigmoid.
struct ConfParams {
  DenseLayer hidden;
  DenseLayer output;

  static ConfParams zeros(std::size_t window = kDefaultContext, std::size_t chunk = kDefaultChunk,
                          std::size_t hidden_size = kDefaultConfHidden);
  static ConfParams random(std::size_t window, std::size_t chunk, std::size_t hidden_size, Rng& rng);

  std::size_t chunk() const noexcept { return output.outputs(); }
  std::size_t hidden_size() const noexcept { return hidden.outputs(); }

  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  std::vector<std::string> tensor_names() const;
  ConfParams zeros_like() const;

  friend bool operator==(const ConfParams&, const ConfParams&) = default;
};

enum class ConfidenceKind { oracle_log_density, predictor_score };

struct ConfidenceVector {
  ConfidenceKind kind = ConfidenceKind::predictor_score;
  std::vector<double> values;
};

/// Log-density of each drafted value under the prior-conditioned draft heads
/// started from `context_state`.
ConfidenceVector oracle_confidence(const ArParams& ar, const ArState& context_state,
                                   std::span<const double> priors, std::span<const double> drafted);
ConfidenceVector oracle_confidence(const ArParams& ar, std::span<const double> context,
                                   std::span<const double> priors, std::span<const double> drafted);

struct ConfidenceForward {
  std::vector<double> input;
  std::vector<double> hidden;  // after tanh
  std::vector<double> logits;
};

ConfidenceForward confidence_forward(const ConfParams& params, std::span<const double> window,
                                     std::span<const double> priors);

/// Sigmoid scores in (0, 1), one per chunk position.
ConfidenceVector predict_confidence(const ConfParams& params, std::span<const double> window,
                                    std::span<const double> priors);

enum class CalibrationMode { quantile, running_mean };

std::string to_string(CalibrationMode mode);
CalibrationMode parse_calibration_mode(const std::string& text);

/// Maps oracle log-densities to decision thresholds.
///  - running_mean: tau = kappa * mean(log density), independent of epsilon.
///  - quantile: tau(eps) = empirical eps-quantile of the observed stream,
///    tau(0) = -inf. Stored as a monotone table of 101 knots at eps = j/100;
///    other eps interpolate linearly between knots.
class ThresholdCalibration {
 public:
  static constexpr std::size_t kQuantileKnots = 101;
  static constexpr std::size_t kMinQuantileSamples = 100;

  ThresholdCalibration() = default;
  explicit ThresholdCalibration(CalibrationMode mode, double kappa = kDefaultKappa);

  /// Restores a calibration from persisted statistics.
  static ThresholdCalibration restore(CalibrationMode mode, double kappa, std::uint64_t count,
                                      double mean, std::vector<double> quantile_table);

  void observe(std::span<const double> log_densities);
  double threshold(double epsilon = 0.5) const;

  CalibrationMode mode() const noexcept { return mode_; }
  double kappa() const noexcept { return kappa_; }
  std::uint64_t count() const noexcept { return count_; }
  double running_mean() const noexcept { return mean_; }
  const std::vector<double>& quantile_table() const noexcept { return table_; }

 private:
  CalibrationMode mode_ = CalibrationMode::quantile;
  double kappa_ = kDefaultKappa;
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  std::vector<double> stream_;  // sorted; not persisted
  std::vector<double> table_;
};

inline constexpr double kAcceptAll = -std::numeric_limits<double>::infinity();

/// Exact empirical quantile: sorted[ceil(eps * n) - 1], -inf at eps = 0.
double empirical_quantile(std::vector<double> values, double epsilon);

ThresholdCalibration calibrate_threshold(CalibrationMode mode, double kappa,
                                         std::span<const double> log_densities);

/// Per-position indicator sigma_k >= tau (1.0 / 0.0).
std::vector<double> label_chunk(std::span<const double> oracle, double tau);

/// Regression targets for the confidence predictor. running_mean mode uses
/// the binary labels at its single threshold; quantile mode averages the
/// binary labels over every table knot, which approximates the quantile rank
/// of each sigma_k so one predictor can be thresholded at any epsilon.
std::vector<double> confidence_targets(const ThresholdCalibration& cal, std::span<const double> oracle);

/// Inference-time acceptance decision for one chunk.
struct AcceptMask {
  std::vector<bool> mask;
  std::size_t first_rejected = 1;  // 1-based k-hat; chunk length + 1 when none

  std::size_t accepted() const noexcept { return first_rejected - 1; }
};

/// k-hat is the first 1-based index whose score is below epsilon (M + 1 if
/// none). epsilon >= 1 always rejects the first position; epsilon <= 0
/// accepts the whole chunk.
AcceptMask accept_prefix(std::span<const double> scores, double epsilon);

/// Training data for the confidence predictor. Rows are aligned.
struct ConfidenceExamples {
  std::vector<std::vector<double>> windows;
  std::vector<std::vector<double>> priors;
  std::vector<std::vector<double>> oracle;   // log densities
  std::vector<std::vector<double>> targets;  // in [0, 1]

  std::size_t size() const noexcept { return windows.size(); }
  std::vector<double> flat_oracle() const;
};

/// Mean binary cross-entropy over all positions of all examples.
double confidence_bce(const ConfParams& params, const ConfidenceExamples& examples);

/// Mean BCE over the selected rows, gradient (of that mean) accumulated into
/// `grad`.
double confidence_bce_with_grad(const ConfParams& params, const ConfidenceExamples& examples,
                                std::span<const std::size_t> rows, ConfParams& grad);

struct ConfidenceFitOptions {
  std::size_t epochs = 150;
  std::size_t batch = 32;
  double lr = 1e-3;
  std::uint64_t seed = kDefaultSeed;
};

struct ConfidenceFitLog {
  std::vector<double> train_bce;  // after each epoch
  std::vector<double> val_bce;
  double initial_train_bce = 0.0;
  double initial_val_bce = 0.0;
};

/// Adam on BCE; only `params` is updated.
ConfidenceFitLog fit_confidence(ConfParams& params, const ConfidenceExamples& train,
                                const ConfidenceExamples& validation,
                                const ConfidenceFitOptions& options);

/// For each sequence, picks `windows_per_sequence` positions v in [o, N - M],
/// draws a chunk x-hat sequentially from the AR model after x_<=v, and scores
/// it with oracle_confidence against the priors predicted from the window.
/// Targets are left empty.
ConfidenceExamples collect_confidence_examples(const ArParams& ar, const PriorParams& prior,
                                               const std::vector<std::vector<double>>& sequences,
                                               std::size_t windows_per_sequence, std::uint64_t seed);

struct ConfidenceTrainingConfig {
  std::size_t windows_per_sequence = 8;
  ConfidenceFitOptions fit;
};

struct ConfidenceTrainingResult {
  ConfidenceFitLog log;
  ThresholdCalibration calibration;
};

/// Calibrates on the training stream, labels, and fits the confidence
/// predictor with the AR model and prior predictor frozen. Throws if either
/// of them is not flagged as trained.
ConfidenceTrainingResult train_confidence(ModelBundle& bundle,
                                          const std::vector<std::vector<double>>& train,
                                          const std::vector<std::vector<double>>& validation,
                                          const ConfidenceTrainingConfig& config);

}  // namespace nara
