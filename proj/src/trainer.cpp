#include "nara/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <utility>

#include "nara/adam.hpp"
#include "nara/format.hpp"

namespace nara {

void TrainingConfig::validate() const {
  if (!(lr > 0.0)) throw Error("lr must be positive");
  if (batch == 0) throw Error("batch must be >= 1");
  if (max_chunk == 0) throw Error("max chunk B must be >= 1");
  if (drafts == 0) throw Error("drafts must be >= 1");
  if (positions_per_sequence == 0) throw Error("positions per sequence must be >= 1");
}

TrainingSample draw_training_sample(std::size_t sequence, std::size_t length, std::size_t max_chunk, Rng& rng) {
  if (length < 1) throw Error("sequence must be non-empty");
  std::uniform_int_distribution<std::size_t> pick(1, length);
  const std::size_t v = pick(rng);
  return {sequence, v, std::min(max_chunk, length - v)};
}

namespace {

std::vector<double> shifted_inputs(std::span<const double> x, std::size_t steps) {
  std::vector<double> inputs(steps);
  for (std::size_t t = 1; t < steps; ++t) inputs[t] = x[t - 1];
  return inputs;
}

struct PositionLoss {
  double ground_truth = 0.0;
  double approximate = 0.0;  // averaged over drafts
  std::size_t positions = 0;
  ArParams ar_grad;
  PriorParams prior_grad;
};

// Loss of one training position and, when `with_grad`, its gradient scaled by
// `weight_gt` / `weight_approx` (the batch normalizers).
PositionLoss sample_loss(const ArParams& ar, const PriorParams& prior, std::span<const double> x,
                         const TrainingSample& s, const std::vector<std::vector<double>>& drafts,
                         bool with_grad, double weight_gt, double weight_approx) {
  PositionLoss r;
  const std::size_t v = s.position;
  const std::size_t l = s.chunk;
  const std::size_t steps = v + l;
  if (l > prior.chunk()) throw Error("training chunk longer than the prior chunk");
  const ArTape truth(ar, blank_layers(ar), shifted_inputs(x, steps));

  std::vector<HeadGrad> truth_grads(with_grad ? steps : 0);
  for (std::size_t t = 0; t < steps; ++t) {
    r.ground_truth -= gaussian_log_density(x[t], truth.head(t));
    if (with_grad) {
      const HeadGrad g = gaussian_nll_grad(x[t], truth.head(t));
      truth_grads[t] = {weight_gt * g.d_mean, weight_gt * g.d_log_var};
    }
  }
  r.positions = steps;

  const auto window = context_window(x.first(v), prior.window());
  const auto priors = predict_priors(prior, window).values;
  std::vector<double> draft_inputs(priors.begin(), priors.begin() + static_cast<std::ptrdiff_t>(l - 1));
  std::optional<ArTape> draft;
  if (l > 1) draft.emplace(ar, truth.states_after(v), draft_inputs);

  std::vector<HeadGrad> draft_grads(draft ? l - 1 : 0);
  const double inv_drafts = 1.0 / static_cast<double>(drafts.size());
  for (const auto& xhat : drafts) {
    double nll = -gaussian_log_density(xhat[0], truth.head(v));
    if (with_grad) {
      const HeadGrad g = gaussian_nll_grad(xhat[0], truth.head(v));
      truth_grads[v].d_mean += weight_approx * g.d_mean;
      truth_grads[v].d_log_var += weight_approx * g.d_log_var;
    }
    for (std::size_t k = 1; k < l; ++k) {
      nll -= gaussian_log_density(xhat[k], draft->head(k - 1));
      if (with_grad) {
        const HeadGrad g = gaussian_nll_grad(xhat[k], draft->head(k - 1));
        draft_grads[k - 1].d_mean += weight_approx * g.d_mean;
        draft_grads[k - 1].d_log_var += weight_approx * g.d_log_var;
      }
    }
    r.approximate += nll * inv_drafts;
  }
  if (!with_grad) return r;

  r.ar_grad = ar.zeros_like();
  r.prior_grad = PriorParams{DenseLayer(prior.window(), prior.chunk())};
  std::vector<StateGrad> injected;
  if (draft) {
    std::vector<double> d_priors(prior.chunk(), 0.0);
    auto d_state = draft->backward(ar, draft_grads, {}, r.ar_grad, std::span<double>(d_priors).first(l - 1));
    injected.push_back({v, std::move(d_state)});
    prior.layer.backward(window, d_priors, r.prior_grad.layer, {});
  }
  truth.backward(ar, truth_grads, injected, r.ar_grad, {});
  return r;
}

}  // namespace

Rollouts draw_rollouts(const ArParams& ar, const std::vector<std::vector<double>>& sequences,
                       std::span<const TrainingSample> batch, std::size_t drafts, std::uint64_t seed,
                       Execution execution) {
  Rollouts out(batch.size());
  for_each_index(batch.size(), execution, [&](std::size_t i) {
    const TrainingSample& s = batch[i];
    out[i].resize(drafts);
    if (s.chunk == 0) return;
    const std::span<const double> x(sequences.at(s.sequence));
    const ArState base = warmup(ar, x.first(s.position));
    Rng rng(mix_seed(seed, i));
    for (auto& xhat : out[i]) {
      ArState state = base;
      xhat.resize(s.chunk);
      for (double& value : xhat) {
        auto next = sample_next(ar, state, rng);
        value = next.value;
        state = std::move(next.state);
      }
    }
  });
  return out;
}

JointLoss joint_loss(const ArParams& ar, const PriorParams& prior,
                     const std::vector<std::vector<double>>& sequences,
                     std::span<const TrainingSample> batch, const Rollouts& rollouts, ArParams* ar_grad,
                     PriorParams* prior_grad, Execution execution) {
  if (rollouts.size() != batch.size()) throw Error("rollout count does not match batch");
  const bool with_grad = ar_grad != nullptr || prior_grad != nullptr;

  std::size_t active = 0;
  for (const auto& s : batch) {
    if (s.chunk > 0) ++active;
  }
  JointLoss loss;
  loss.samples = active;
  if (active == 0) return loss;

  std::vector<PositionLoss> results(batch.size());
  const double weight = 1.0 / static_cast<double>(active);
  for_each_index(batch.size(), execution, [&](std::size_t i) {
    const TrainingSample& s = batch[i];
    if (s.chunk == 0) return;
    const auto& x = sequences.at(s.sequence);
    if (s.position + s.chunk > x.size()) throw Error("training sample exceeds its sequence");
    const auto& drafts = rollouts[i];
    if (drafts.empty()) throw Error("training sample has no rollouts");
    for (const auto& d : drafts) {
      if (d.size() != s.chunk) throw Error("rollout length does not match chunk");
    }
    results[i] = sample_loss(ar, prior, x, s, drafts, with_grad, weight,
                             weight / static_cast<double>(drafts.size()));
  });

  // Fixed-order reduction keeps serial and parallel runs bit-identical.
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].chunk == 0) continue;
    loss.ground_truth += results[i].ground_truth * weight;
    loss.approximate += results[i].approximate * weight;
    loss.ground_truth_positions += results[i].positions;
    if (ar_grad != nullptr) ar_grad->add(results[i].ar_grad);
    if (prior_grad != nullptr) {
      auto dst = prior_grad->tensors();
      auto src = std::as_const(results[i].prior_grad).tensors();
      for (std::size_t k = 0; k < dst.size(); ++k) {
        for (std::size_t j = 0; j < dst[k]->size(); ++j) (*dst[k])[j] += (*src[k])[j];
      }
    }
  }
  return loss;
}

JointLoss joint_loss(const ArParams& ar, const PriorParams& prior,
                     const std::vector<std::vector<double>>& sequences,
                     std::span<const TrainingSample> batch, std::size_t drafts, std::uint64_t seed) {
  const auto rollouts = draw_rollouts(ar, sequences, batch, drafts, seed);
  return joint_loss(ar, prior, sequences, batch, rollouts, nullptr, nullptr);
}

double mean_sequence_nll(const ArParams& ar, const std::vector<std::vector<double>>& sequences,
                         Execution execution) {
  std::vector<double> totals(sequences.size());
  for_each_index(sequences.size(), execution,
                 [&](std::size_t i) { totals[i] = sequence_nll(ar, sequences[i]); });
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    sum += totals[i];
    n += sequences[i].size();
  }
  if (n == 0) throw Error("no sequences to evaluate");
  return sum / static_cast<double>(n);
}

TrainingLog train(ModelBundle& bundle, const SinusoidDataset& dataset, const TrainingConfig& config) {
  config.validate();
  TrainingLog log;
  if (config.epochs == 0) return log;

  const auto& train_set = dataset.train;
  log.initial_val_nll = mean_sequence_nll(bundle.ar, dataset.validation, config.execution);
  log.initial_prior_l1 = prior_l1(bundle.prior, dataset.validation);

  std::vector<Tensor*> params = bundle.ar.tensors();
  for (Tensor* t : bundle.prior.tensors()) params.push_back(t);
  std::vector<const Tensor*> like(params.begin(), params.end());
  AdamState adam(like, AdamOptions{config.lr});
  Rng rng(mix_seed(config.seed, 0x7EA1));

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<TrainingSample> samples;
    for (std::size_t s = 0; s < train_set.size(); ++s) {
      for (std::size_t r = 0; r < config.positions_per_sequence; ++r) {
        samples.push_back(draw_training_sample(s, train_set[s].size(), config.max_chunk, rng));
      }
    }
    std::shuffle(samples.begin(), samples.end(), rng);

    double gt_sum = 0.0;
    std::size_t gt_positions = 0;
    for (std::size_t start = 0; start < samples.size(); start += config.batch) {
      const std::size_t end = std::min(samples.size(), start + config.batch);
      const std::span<const TrainingSample> batch(samples.data() + start, end - start);
      const auto rollouts = draw_rollouts(bundle.ar, train_set, batch, config.drafts, rng(), config.execution);
      ArParams ar_grad = bundle.ar.zeros_like();
      PriorParams prior_grad{DenseLayer(bundle.prior.window(), bundle.prior.chunk())};
      const JointLoss loss =
          joint_loss(bundle.ar, bundle.prior, train_set, batch, rollouts, &ar_grad, &prior_grad, config.execution);
      if (!std::isfinite(loss.total())) throw Error("diverged at epoch " + std::to_string(epoch));
      if (loss.samples == 0) continue;
      gt_sum += loss.ground_truth * static_cast<double>(loss.samples);
      gt_positions += loss.ground_truth_positions;

      std::vector<const Tensor*> grads;
      for (const Tensor* t : std::as_const(ar_grad).tensors()) grads.push_back(t);
      for (const Tensor* t : std::as_const(prior_grad).tensors()) grads.push_back(t);
      try {
        adam.apply(params, grads);
      } catch (const Error&) {
        throw Error("diverged at epoch " + std::to_string(epoch));
      }
    }

    EpochLog row;
    row.epoch = epoch;
    row.train_nll = gt_positions > 0 ? gt_sum / static_cast<double>(gt_positions) : 0.0;
    row.val_nll = mean_sequence_nll(bundle.ar, dataset.validation, config.execution);
    row.prior_l1 = prior_l1(bundle.prior, dataset.validation);
    if (!std::isfinite(row.val_nll) || !std::isfinite(row.prior_l1)) {
      throw Error("diverged at epoch " + std::to_string(epoch));
    }
    log.epochs.push_back(row);
  }
  bundle.ar_trained = true;
  bundle.prior_trained = true;

  ConfidenceTrainingConfig conf = config.confidence;
  conf.fit.seed = mix_seed(config.seed, 0xC0F);
  log.confidence = train_confidence(bundle, train_set, dataset.validation, conf).log;
  return log;
}

void write_training_log(const TrainingLog& log, std::ostream& out) {
  out << "epoch,train_nll,val_nll,prior_l1,conf_bce\n";
  for (const auto& row : log.epochs) {
    out << row.epoch << ',' << format_double(row.train_nll) << ',' << format_double(row.val_nll) << ','
        << format_double(row.prior_l1) << ",\n";
  }
  const std::size_t offset = log.epochs.size();
  for (std::size_t i = 0; i < log.confidence.val_bce.size(); ++i) {
    out << offset + i + 1 << ",,,," << format_double(log.confidence.val_bce[i]) << '\n';
  }
}

}  // namespace nara
