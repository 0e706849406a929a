#include <chrono>
#include <iostream>
#include <string>
#include <vector>

#include "nara/engine.hpp"
#include "nara/format.hpp"
#include "nara/sweep.hpp"
#include "nara/trainer.hpp"

using namespace nara;

namespace {

template <class F>
double best_ms(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  }
  return best;
}

void row(const std::string& name, double serial, double parallel) {
  std::cout << name << "  serial " << format_double(serial, 4) << " ms  parallel " << format_double(parallel, 4)
            << " ms  speedup " << format_double(serial / parallel, 3) << "x\n";
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::stoi(argv[1]) : 3;
  std::cout << "threads " << available_threads() << ", best of " << repeats << "\n";

  SinusoidParams sp;
  sp.count = 40;
  const auto ds = make_sinusoids(sp, 0);
  ModelDims dims;
  ModelBundle bundle = ModelBundle::initialize(dims, 0);
  bundle.calibration = ThresholdCalibration(CalibrationMode::running_mean);
  bundle.calibration.observe(std::vector<double>{-1.0});
  bundle.ar_trained = bundle.prior_trained = bundle.conf_trained = true;

  Rng rng(1);
  std::vector<TrainingSample> batch;
  for (std::size_t i = 0; i < 16; ++i) batch.push_back(draw_training_sample(i % ds.train.size(), sp.length, 20, rng));
  const auto rollouts = draw_rollouts(bundle.ar, ds.train, batch, 1, 2, Execution::serial);
  auto grad_ms = [&](Execution exec) {
    return best_ms(repeats, [&] {
      ArParams g = bundle.ar.zeros_like();
      PriorParams pg = PriorParams::zeros(dims.context, dims.chunk);
      joint_loss(bundle.ar, bundle.prior, ds.train, batch, rollouts, &g, &pg, exec);
    });
  };
  row("joint_loss gradient (batch 16)", grad_ms(Execution::serial), grad_ms(Execution::parallel));

  SweepOptions opt;
  opt.grid = parse_grid("0.0:1.0:0.1");
  opt.horizon = 100;
  auto sweep_ms = [&](Execution exec) {
    opt.execution = exec;
    return best_ms(repeats, [&] { run_sweep(bundle, ds.validation, opt); });
  };
  row("sweep (11 eps x 8 contexts, H 100)", sweep_ms(Execution::serial), sweep_ms(Execution::parallel));

  const std::span<const double> ctx(ds.validation[0].data(), dims.context);
  const auto ar = generate_pure_ar(bundle.ar, ctx, 100, 0);
  const double ar_ms = best_ms(repeats, [&] { generate_pure_ar(bundle.ar, ctx, 100, 0); });
  std::cout << "pure AR          rounds " << ar.sequential_rounds << "  " << format_double(ar_ms, 4) << " ms\n";
  for (double eps : {0.0, 0.5, 1.0}) {
    GenerationConfig g;
    g.epsilon = eps;
    g.horizon = 100;
    const auto t = generate_nara(bundle, ctx, g);
    const double ms = best_ms(repeats, [&] { generate_nara(bundle, ctx, g); });
    std::cout << "NARA eps " << format_double(eps, 2) << "       rounds " << t.sequential_rounds << "  "
              << format_double(ms, 4) << " ms  acceptance " << format_double(100.0 * t.acceptance_ratio(), 3)
              << "%\n";
  }
  return 0;
}
