#include "nara/confidence.hpp"

#include <algorithm>
#include <utility>
#include <cmath>
#include <numeric>

#include "nara/adam.hpp"
#include "nara/bundle.hpp"
#include "nara/parallel.hpp"

namespace nara {

ConfParams ConfParams::zeros(std::size_t window, std::size_t chunk, std::size_t hidden_size) {
  return {DenseLayer(window + chunk, hidden_size), DenseLayer(hidden_size, chunk)};
}

ConfParams ConfParams::random(std::size_t window, std::size_t chunk, std::size_t hidden_size, Rng& rng) {
  ConfParams p;
  p.hidden = DenseLayer::uniform(window + chunk, hidden_size, rng);
  p.output = DenseLayer::uniform(hidden_size, chunk, rng);
  return p;
}

std::vector<Tensor*> ConfParams::tensors() {
  return {&hidden.weight, &hidden.bias, &output.weight, &output.bias};
}

std::vector<const Tensor*> ConfParams::tensors() const {
  return {&hidden.weight, &hidden.bias, &output.weight, &output.bias};
}

std::vector<std::string> ConfParams::tensor_names() const {
  return {"conf.hidden.weight", "conf.hidden.bias", "conf.output.weight", "conf.output.bias"};
}

ConfParams ConfParams::zeros_like() const {
  ConfParams z = *this;
  for (Tensor* t : z.tensors()) t->fill(0.0);
  return z;
}

ConfidenceVector oracle_confidence(const ArParams& ar, const ArState& context_state,
                                   std::span<const double> priors, std::span<const double> drafted) {
  if (priors.size() != drafted.size()) throw Error("oracle confidence length mismatch");
  const auto heads = draft_pass(ar, context_state, priors);
  ConfidenceVector out{ConfidenceKind::oracle_log_density, std::vector<double>(drafted.size())};
  for (std::size_t k = 0; k < drafted.size(); ++k) out.values[k] = gaussian_log_density(drafted[k], heads[k]);
  return out;
}

ConfidenceVector oracle_confidence(const ArParams& ar, std::span<const double> context,
                                   std::span<const double> priors, std::span<const double> drafted) {
  return oracle_confidence(ar, warmup(ar, context), priors, drafted);
}

ConfidenceForward confidence_forward(const ConfParams& params, std::span<const double> window,
                                     std::span<const double> priors) {
  ConfidenceForward f;
  f.input.reserve(window.size() + priors.size());
  f.input.insert(f.input.end(), window.begin(), window.end());
  f.input.insert(f.input.end(), priors.begin(), priors.end());
  if (f.input.size() != params.hidden.inputs() || priors.size() != params.chunk()) {
    throw Error("confidence predictor input has the wrong length");
  }
  f.hidden = params.hidden.forward(f.input);
  for (double& h : f.hidden) h = std::tanh(h);
  f.logits = params.output.forward(f.hidden);
  return f;
}

ConfidenceVector predict_confidence(const ConfParams& params, std::span<const double> window,
                                    std::span<const double> priors) {
  auto f = confidence_forward(params, window, priors);
  for (double& z : f.logits) z = sigmoid(z);
  return {ConfidenceKind::predictor_score, std::move(f.logits)};
}

std::string to_string(CalibrationMode mode) {
  return mode == CalibrationMode::quantile ? "quantile" : "running_mean";
}

CalibrationMode parse_calibration_mode(const std::string& text) {
  if (text == "quantile") return CalibrationMode::quantile;
  if (text == "running_mean") return CalibrationMode::running_mean;
  throw Error("unknown calibration mode '" + text + "'");
}

ThresholdCalibration::ThresholdCalibration(CalibrationMode mode, double kappa) : mode_(mode), kappa_(kappa) {
  if (!(kappa > 0.0)) throw Error("kappa must be positive");
}

ThresholdCalibration ThresholdCalibration::restore(CalibrationMode mode, double kappa, std::uint64_t count,
                                                   double mean, std::vector<double> quantile_table) {
  ThresholdCalibration cal(mode, kappa);
  cal.count_ = count;
  cal.mean_ = mean;
  if (!quantile_table.empty() && quantile_table.size() != kQuantileKnots) {
    throw Error("quantile table must have 101 knots");
  }
  if (!std::is_sorted(quantile_table.begin(), quantile_table.end())) {
    throw Error("quantile table must be monotone");
  }
  cal.table_ = std::move(quantile_table);
  return cal;
}

double empirical_quantile(std::vector<double> values, double epsilon) {
  if (values.empty()) throw Error("empty stream");
  if (epsilon <= 0.0) return kAcceptAll;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(std::min(epsilon, 1.0) * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

void ThresholdCalibration::observe(std::span<const double> log_densities) {
  for (double x : log_densities) {
    if (!std::isfinite(x)) throw Error("non-finite input");
    ++count_;
    mean_ += (x - mean_) / static_cast<double>(count_);
  }
  if (mode_ != CalibrationMode::quantile) return;
  const auto mid = static_cast<std::ptrdiff_t>(stream_.size());
  stream_.insert(stream_.end(), log_densities.begin(), log_densities.end());
  std::sort(stream_.begin() + mid, stream_.end());
  std::inplace_merge(stream_.begin(), stream_.begin() + mid, stream_.end());
  if (stream_.size() < kMinQuantileSamples) return;
  table_.resize(kQuantileKnots);
  const double n = static_cast<double>(stream_.size());
  for (std::size_t j = 0; j < kQuantileKnots; ++j) {
    const double eps = static_cast<double>(j) / static_cast<double>(kQuantileKnots - 1);
    auto rank = static_cast<std::size_t>(std::ceil(eps * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, stream_.size());
    table_[j] = stream_[rank - 1];
  }
}

double ThresholdCalibration::threshold(double epsilon) const {
  if (count_ == 0) throw Error("empty stream");
  if (mode_ == CalibrationMode::running_mean) return kappa_ * mean_;
  if (table_.empty()) throw Error("quantile calibration needs at least 100 observations");
  if (epsilon <= 0.0) return kAcceptAll;
  if (epsilon >= 1.0) return table_.back();
  const double pos = epsilon * static_cast<double>(kQuantileKnots - 1);
  const double nearest = std::round(pos);
  if (std::abs(pos - nearest) < 1e-9) return table_[static_cast<std::size_t>(nearest)];
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  return table_[lo] + frac * (table_[lo + 1] - table_[lo]);
}

ThresholdCalibration calibrate_threshold(CalibrationMode mode, double kappa,
                                         std::span<const double> log_densities) {
  if (log_densities.empty()) throw Error("empty stream");
  ThresholdCalibration cal(mode, kappa);
  cal.observe(log_densities);
  return cal;
}

std::vector<double> label_chunk(std::span<const double> oracle, double tau) {
  std::vector<double> labels(oracle.size());
  for (std::size_t k = 0; k < oracle.size(); ++k) labels[k] = oracle[k] >= tau ? 1.0 : 0.0;
  return labels;
}

std::vector<double> confidence_targets(const ThresholdCalibration& cal, std::span<const double> oracle) {
  if (cal.mode() == CalibrationMode::running_mean) return label_chunk(oracle, cal.threshold());
  std::vector<double> targets(oracle.size(), 0.0);
  constexpr std::size_t knots = ThresholdCalibration::kQuantileKnots;
  for (std::size_t j = 0; j < knots; ++j) {
    const double eps = static_cast<double>(j) / static_cast<double>(knots - 1);
    const auto labels = label_chunk(oracle, cal.threshold(eps));
    for (std::size_t k = 0; k < oracle.size(); ++k) targets[k] += labels[k];
  }
  for (double& t : targets) t /= static_cast<double>(knots);
  return targets;
}

AcceptMask accept_prefix(std::span<const double> scores, double epsilon) {
  const std::size_t m = scores.size();
  AcceptMask out;
  out.mask.assign(m, false);
  std::size_t k = 0;
  if (epsilon <= 0.0) {
    k = m;
  } else if (epsilon < 1.0) {
    while (k < m && !(scores[k] < epsilon)) ++k;
  }
  for (std::size_t j = 0; j < k; ++j) out.mask[j] = true;
  out.first_rejected = k + 1;
  return out;
}

std::vector<double> ConfidenceExamples::flat_oracle() const {
  std::vector<double> flat;
  for (const auto& row : oracle) flat.insert(flat.end(), row.begin(), row.end());
  return flat;
}

namespace {

// softplus(z) - t z, stable for large |z|
double bce_from_logit(double z, double t) noexcept {
  return std::max(z, 0.0) - t * z + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

double confidence_bce(const ConfParams& params, const ConfidenceExamples& examples) {
  if (examples.size() == 0) throw Error("no confidence examples");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < examples.size(); ++r) {
    const auto f = confidence_forward(params, examples.windows[r], examples.priors[r]);
    for (std::size_t k = 0; k < f.logits.size(); ++k) total += bce_from_logit(f.logits[k], examples.targets[r][k]);
    count += f.logits.size();
  }
  return total / static_cast<double>(count);
}

double confidence_bce_with_grad(const ConfParams& params, const ConfidenceExamples& examples,
                                std::span<const std::size_t> rows, ConfParams& grad) {
  if (rows.empty()) throw Error("no confidence examples");
  const double norm = 1.0 / static_cast<double>(rows.size() * params.chunk());
  double total = 0.0;
  std::vector<double> dlogits(params.chunk());
  std::vector<double> dhidden(params.hidden_size());
  for (std::size_t r : rows) {
    const auto f = confidence_forward(params, examples.windows[r], examples.priors[r]);
    for (std::size_t k = 0; k < f.logits.size(); ++k) {
      const double t = examples.targets[r][k];
      total += bce_from_logit(f.logits[k], t);
      dlogits[k] = (sigmoid(f.logits[k]) - t) * norm;
    }
    std::fill(dhidden.begin(), dhidden.end(), 0.0);
    params.output.backward(f.hidden, dlogits, grad.output, dhidden);
    for (std::size_t j = 0; j < dhidden.size(); ++j) dhidden[j] *= 1.0 - f.hidden[j] * f.hidden[j];
    params.hidden.backward(f.input, dhidden, grad.hidden, {});
  }
  return total * norm;
}

ConfidenceFitLog fit_confidence(ConfParams& params, const ConfidenceExamples& train,
                                const ConfidenceExamples& validation, const ConfidenceFitOptions& options) {
  if (train.size() == 0) throw Error("no confidence examples");
  ConfidenceFitLog log;
  log.initial_train_bce = confidence_bce(params, train);
  log.initial_val_bce = validation.size() > 0 ? confidence_bce(params, validation) : log.initial_train_bce;

  AdamState adam(std::as_const(params).tensors(), AdamOptions{options.lr});
  Rng rng(mix_seed(options.seed, 0xC0F1DE));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = std::max<std::size_t>(1, options.batch);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      ConfParams grad = params.zeros_like();
      const double loss = confidence_bce_with_grad(
          params, train, std::span<const std::size_t>(order).subspan(start, end - start), grad);
      if (!std::isfinite(loss)) throw Error("diverged");
      auto g = grad.tensors();
      adam.apply(params.tensors(), std::vector<const Tensor*>(g.begin(), g.end()));
    }
    log.train_bce.push_back(confidence_bce(params, train));
    log.val_bce.push_back(validation.size() > 0 ? confidence_bce(params, validation) : log.train_bce.back());
  }
  return log;
}

ConfidenceExamples collect_confidence_examples(const ArParams& ar, const PriorParams& prior,
                                               const std::vector<std::vector<double>>& sequences,
                                               std::size_t windows_per_sequence, std::uint64_t seed) {
  const std::size_t o = prior.window();
  const std::size_t m = prior.chunk();
  std::vector<ConfidenceExamples> per_sequence(sequences.size());

  for_each_index(sequences.size(), Execution::parallel, [&](std::size_t s) {
    const auto& seq = sequences[s];
    if (seq.size() < o + m || windows_per_sequence == 0) return;
    Rng rng(mix_seed(seed, s));
    std::vector<std::size_t> positions(windows_per_sequence);
    for (auto& v : positions) {
      std::uniform_int_distribution<std::size_t> pick(o, seq.size() - m);
      v = pick(rng);
    }
    std::sort(positions.begin(), positions.end());

    ConfidenceExamples& out = per_sequence[s];
    const std::span<const double> x(seq);
    ArState state = start_state(ar);
    std::size_t consumed = 0;
    for (std::size_t v : positions) {
      while (consumed < v) state = advance(ar, state, x[consumed++]);
      std::vector<double> drafted(m);
      ArState roll = state;
      for (std::size_t k = 0; k < m; ++k) {
        auto next = sample_next(ar, roll, rng);
        drafted[k] = next.value;
        roll = std::move(next.state);
      }
      auto window = std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(v - o),
                                        x.begin() + static_cast<std::ptrdiff_t>(v));
      auto priors = predict_priors(prior, window, static_cast<std::int64_t>(v)).values;
      out.oracle.push_back(oracle_confidence(ar, state, priors, drafted).values);
      out.windows.push_back(std::move(window));
      out.priors.push_back(std::move(priors));
    }
  });

  ConfidenceExamples all;
  for (auto& part : per_sequence) {
    for (std::size_t r = 0; r < part.size(); ++r) {
      all.windows.push_back(std::move(part.windows[r]));
      all.priors.push_back(std::move(part.priors[r]));
      all.oracle.push_back(std::move(part.oracle[r]));
    }
  }
  if (all.size() == 0) throw Error("no sequence is long enough for a confidence window");
  return all;
}

ConfidenceTrainingResult train_confidence(ModelBundle& bundle,
                                          const std::vector<std::vector<double>>& train,
                                          const std::vector<std::vector<double>>& validation,
                                          const ConfidenceTrainingConfig& config) {
  if (!bundle.ar_trained || !bundle.prior_trained) {
    throw Error("confidence training needs a trained AR model and prior predictor");
  }
  const std::uint64_t seed = config.fit.seed;
  auto train_examples = collect_confidence_examples(bundle.ar, bundle.prior, train,
                                                    config.windows_per_sequence, mix_seed(seed, 1));
  ConfidenceExamples val_examples;
  if (!validation.empty()) {
    val_examples = collect_confidence_examples(bundle.ar, bundle.prior, validation,
                                               config.windows_per_sequence, mix_seed(seed, 2));
  }

  const auto stream = train_examples.flat_oracle();
  ThresholdCalibration cal =
      calibrate_threshold(bundle.calibration.mode(), bundle.calibration.kappa(), stream);
  for (const auto& row : train_examples.oracle) train_examples.targets.push_back(confidence_targets(cal, row));
  for (const auto& row : val_examples.oracle) val_examples.targets.push_back(confidence_targets(cal, row));

  ConfidenceTrainingResult result;
  result.log = fit_confidence(bundle.conf, train_examples, val_examples, config.fit);
  result.calibration = cal;
  bundle.calibration = cal;
  bundle.conf_trained = true;
  return result;
}

}  // namespace nara
