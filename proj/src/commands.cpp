#include "nara/commands.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "nara/checkpoint.hpp"
#include "nara/config.hpp"
#include "nara/engine.hpp"
#include "nara/format.hpp"
#include "nara/grad_check.hpp"
#include "nara/sweep.hpp"
#include "nara/theory.hpp"

namespace nara {

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

// Precedence: explicit flag, then NARA_SEED, then the stored seed.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t stored) {
  if (flag) return *flag;
  if (auto env = seed_from_environment()) return *env;
  return stored;
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  try {
    return load_checkpoint(path);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

RunConfig bundle_config(const ModelBundle& bundle) {
  try {
    return RunConfig::from_map(bundle.config);
  } catch (const Error& e) {
    throw UsageError(std::string("checkpoint config: ") + e.what());
  }
}

template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace

std::vector<double> read_context_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("context file not found: " + path.string());
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    try {
      values.push_back(parse_double(std::string_view(line).substr(first, last - first + 1)));
    } catch (const Error&) {
      throw Error("malformed context file " + path.string() + " line " + std::to_string(lineno));
    }
    if (!std::isfinite(values.back())) throw Error("non-finite input in context file line " + std::to_string(lineno));
  }
  if (values.empty()) throw Error("malformed context file " + path.string() + ": no values");
  return values;
}

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig cfg;
    try {
      cfg = RunConfig::load(args.config);
      cfg.apply_environment();
      if (args.seed) cfg.set("seed", std::to_string(*args.seed));
      cfg.validate();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    set_threads(static_cast<int>(cfg.get_size("threads")));

    const auto dataset = make_sinusoids(cfg.dataset(), cfg.seed());
    ModelBundle bundle = ModelBundle::initialize(cfg.dims(), cfg.seed());
    bundle.standardization = dataset.stats;
    bundle.calibration = ThresholdCalibration(cfg.calibration(), cfg.kappa());
    bundle.config = cfg.values();

    const TrainingLog log = train(bundle, dataset, cfg.training());
    save_checkpoint(bundle, args.out);
    const auto log_path = args.log.value_or(std::filesystem::path(args.out.string() + ".log.csv"));
    std::ofstream log_out(log_path);
    if (!log_out) throw Error("cannot write training log " + log_path.string());
    write_training_log(log, log_out);

    out << "checkpoint " << args.out.string() << '\n';
    if (!log.epochs.empty()) {
      const auto& last = log.epochs.back();
      out << "epochs " << log.epochs.size() << " val_nll " << format_double(last.val_nll, 6) << " prior_l1 "
          << format_double(last.prior_l1, 6) << " (epoch 1: " << format_double(log.epochs.front().prior_l1, 6)
          << ")\n";
      if (!log.confidence.val_bce.empty()) {
        out << "confidence val_bce " << format_double(log.confidence.val_bce.back(), 6) << '\n';
      }
    }
    return kExitOk;
  });
}

int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ModelBundle bundle = load_bundle(args.checkpoint);
    const RunConfig cfg = bundle_config(bundle);
    if (!bundle.ar_trained || !bundle.prior_trained) throw UsageError("AR model or prior predictor untrained");
    if (!bundle.conf_trained) throw UsageError("confidence predictor untrained");
    if (!(args.epsilon >= 0.0 && args.epsilon <= 1.0)) throw UsageError("epsilon must be in [0, 1]");
    std::vector<double> context;
    try {
      context = bundle.standardization.apply(read_context_file(args.context_file));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }

    GenerationConfig gen;
    gen.epsilon = args.epsilon;
    gen.horizon = args.horizon.value_or(cfg.horizon());
    gen.seed = resolve_seed(args.seed, cfg.seed());
    const auto trace = generate_nara(bundle, context, gen);
    for (double z : trace.generated) out << format_double(bundle.standardization.invert(z)) << '\n';
    err << "epsilon " << format_double(gen.epsilon) << " horizon " << gen.horizon << " rounds "
        << trace.sequential_rounds << " draft_passes " << trace.draft_passes << " accepted " << trace.accepted_total
        << " resampled " << trace.resampled_total << '\n';
    return kExitOk;
  });
}

int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ModelBundle bundle = load_bundle(args.checkpoint);
    const RunConfig cfg = bundle_config(bundle);
    if (!bundle.conf_trained) throw UsageError("confidence predictor untrained");
    SweepOptions options;
    try {
      options.grid = parse_grid(args.grid);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    options.horizon = args.horizon.value_or(cfg.horizon());
    options.seed = resolve_seed(args.seed, cfg.seed());
    options.execution = args.serial ? Execution::serial : Execution::parallel;
    set_threads(static_cast<int>(cfg.get_size("threads")));

    const auto dataset = make_sinusoids(cfg.dataset(), cfg.seed());
    const auto rows = run_sweep(bundle, dataset.validation, options);
    std::ofstream csv(args.out);
    if (!csv) throw Error("cannot write " + args.out.string());
    write_sweep_csv(rows, csv);
    write_sweep_csv(rows, out);
    if (args.plot) {
      std::ofstream svg(*args.plot);
      if (svg) {
        write_sweep_svg(rows, svg);
      } else {
        err << "warning: cannot write plot " << args.plot->string() << '\n';
      }
    }
    return kExitOk;
  });
}

int cmd_check(const CheckArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    struct Line {
      std::string name;
      double residual;
      double tolerance;
      bool passed;
    };
    std::vector<Line> lines;
    if (args.what == "grad") {
      for (const auto& r : run_grad_suite(args.seed, kGradSeeds, args.inject_fault)) {
        lines.push_back({r.name, r.max_rel_error, r.tolerance, r.passed()});
      }
    } else if (args.what == "theory") {
      if (!args.inject_fault.empty()) throw UsageError("fault injection applies to the grad suite only");
      for (const auto& r : theory::run_theory_suite(args.seed)) {
        lines.push_back({r.name, r.max_residual, r.tolerance, r.passed()});
      }
    } else {
      throw UsageError("--what must be grad or theory");
    }
    const Line* worst = nullptr;
    for (const auto& l : lines) {
      out << (l.passed ? "PASS " : "FAIL ") << l.name << " max_error " << format_double(l.residual, 3)
          << " tolerance " << format_double(l.tolerance, 3) << '\n';
      if (!l.passed && (worst == nullptr || !(l.residual / l.tolerance <= worst->residual / worst->tolerance))) {
        worst = &l;
      }
    }
    if (worst != nullptr) {
      err << "worst offender: " << worst->name << " (" << format_double(worst->residual, 3) << ")\n";
      return kExitFailure;
    }
    return kExitOk;
  });
}

}  // namespace nara
