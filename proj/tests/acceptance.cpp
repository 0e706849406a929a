#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nara/checkpoint.hpp"
#include "nara/commands.hpp"
#include "nara/config.hpp"
#include "nara/engine.hpp"
#include "nara/format.hpp"
#include "nara/grad_check.hpp"
#include "nara/sweep.hpp"
#include "nara/theory.hpp"

using namespace nara;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string without_wall_ms(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
  return out;
}

std::string fmt(double x, int digits = 4) { return format_double(x, digits); }

std::vector<double> raw_bytes(const std::vector<const Tensor*>& tensors) { return flatten(tensors); }

bool same_bytes(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::map<int, std::string> lines;

void report(int id, bool ok, const std::string& detail) {
  lines[id] = std::string(ok ? "PASS" : "FAIL") + " criterion " + std::to_string(id) + ": " + detail;
  std::cerr << "evaluated criterion " << id << std::endl;
}

std::vector<SweepRow> read_rows(const fs::path& csv) {
  std::istringstream in(slurp(csv));
  std::string line;
  std::getline(in, line);
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    SweepRow r;
    r.epsilon = parse_double(cells.at(0));
    r.acceptance_ratio_pct = parse_double(cells.at(1));
    r.mean_l1 = parse_double(cells.at(2));
    r.sequential_rounds = static_cast<std::size_t>(parse_double(cells.at(3)));
    r.draft_passes = static_cast<std::size_t>(parse_double(cells.at(4)));
    rows.push_back(r);
  }
  return rows;
}

const char* kSmallConfig =
    "seed = 11\n"
    "o = 16\n"
    "M = 4\n"
    "B = 4\n"
    "H = 12\n"
    "hidden = 8\n"
    "conf.hidden = 8\n"
    "epochs = 2\n"
    "conf.epochs = 5\n"
    "dataset.count = 20\n"
    "dataset.length = 60\n";

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::current_path() / "acceptance_work";
  fs::create_directories(work);
  std::ostringstream sink;

  // 1. Gradient correctness.
  {
    const auto start = Clock::now();
    const auto results = run_grad_suite(0, kGradSeeds);
    const double secs = seconds_since(start);
    bool ok = secs < 30.0;
    double worst = 0.0;
    std::string worst_name;
    for (const auto& r : results) {
      ok = ok && r.passed() && r.seeds >= 5;
      if (!(r.max_rel_error <= worst)) {
        worst = r.max_rel_error;
        worst_name = r.name;
      }
    }
    report(1, ok,
           std::to_string(results.size()) + " ops, worst " + worst_name + " " + fmt(worst, 3) + " < 1e-4, " +
               fmt(secs, 3) + " s");
  }

  // 7. Regularizer identities.
  {
    const auto start = Clock::now();
    const auto checks = theory::run_theory_suite(0, 100);
    const double secs = seconds_since(start);
    bool ok = secs < 5.0;
    std::string detail;
    for (const auto& c : checks) {
      ok = ok && c.passed();
      detail += c.name + " " + fmt(c.max_residual, 2) + "; ";
    }
    report(7, ok, detail + fmt(secs, 3) + " s");
  }

  // Full default training: feeds criteria 2 to 6 and 9.
  const fs::path cfg_path = work / "default.cfg";
  std::ofstream(cfg_path) << "# defaults\n";
  const fs::path ckpt = work / "default.ckpt";
  TrainArgs train;
  train.config = cfg_path;
  train.out = ckpt;
  const auto train_start = Clock::now();
  const int train_code = cmd_train(train, sink, std::cerr);
  const double train_secs = seconds_since(train_start);
  if (train_code != kExitOk) {
    for (int id : {2, 3, 4, 5, 6, 9}) report(id, false, "default training failed");
  } else {
    const ModelBundle bundle = load_checkpoint(ckpt);
    const RunConfig cfg = RunConfig::from_map(bundle.config);
    const auto dataset = make_sinusoids(cfg.dataset(), cfg.seed());
    const std::size_t o = cfg.dims().context;
    const std::size_t H = cfg.horizon();
    const std::size_t M = cfg.dims().chunk;

    // 2. Epsilon 1 equals pure AR.
    {
      bool ok = true;
      Rng rng(mix_seed(cfg.seed(), 0xE1));
      for (std::size_t i = 0; i < 20; ++i) {
        const auto& seq = dataset.validation[i % dataset.validation.size()];
        const std::size_t len = 1 + static_cast<std::size_t>(rng() % o);
        const std::span<const double> ctx(seq.data(), len);
        GenerationConfig g;
        g.epsilon = 1.0;
        g.horizon = H;
        g.seed = rng();
        const auto a = generate_nara(bundle, ctx, g);
        const auto b = generate_pure_ar(bundle.ar, ctx, H, g.seed);
        ok = ok && a.sequential_rounds == H &&
             same_bytes(a.generated, b.generated);
      }
      report(2, ok, "20 contexts, H = " + std::to_string(H) + ", bit-identical, rounds == H");
    }

    // 3. Epsilon 0 work bound.
    {
      bool ok = true;
      std::size_t rounds = 0, ar_rounds = 0;
      double acceptance = 1.0;
      for (std::size_t s = 0; s < dataset.validation.size(); ++s) {
        const std::span<const double> ctx(dataset.validation[s].data(), o);
        GenerationConfig g;
        g.epsilon = 0.0;
        g.horizon = H;
        g.seed = s;
        const auto t = generate_nara(bundle, ctx, g);
        g.epsilon = 1.0;
        const auto full = generate_nara(bundle, ctx, g);
        ok = ok && t.sequential_rounds == (H + M - 1) / M && t.acceptance_ratio() == 1.0 &&
             full.sequential_rounds >= 10 * t.sequential_rounds;
        rounds = t.sequential_rounds;
        ar_rounds = full.sequential_rounds;
        acceptance = std::min(acceptance, t.acceptance_ratio());
      }
      report(3, ok,
             "rounds " + std::to_string(rounds) + " vs " + std::to_string(ar_rounds) + " at epsilon 1, acceptance " +
                 fmt(100.0 * acceptance) + "%");
    }

    // 5. Prior convergence.
    {
      std::istringstream log(slurp(fs::path(ckpt.string() + ".log.csv")));
      std::string line;
      std::getline(log, line);
      std::vector<double> l1;
      while (std::getline(log, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() >= 4 && !cells[3].empty()) l1.push_back(parse_double(cells[3]));
      }
      const bool ok = l1.size() >= 2 && l1.back() < 0.5 * l1.front() && train_secs < 600.0;
      report(5, ok,
             "prior l1 epoch 1 " + (l1.empty() ? std::string("?") : fmt(l1.front())) + " -> final " +
                 (l1.empty() ? std::string("?") : fmt(l1.back())) + " (needs < " +
                 (l1.empty() ? std::string("?") : fmt(0.5 * l1.front())) + "), training " + fmt(train_secs, 4) +
                 " s");
    }

    // 4 and 6. Sweeps at three pinned seeds.
    {
      bool monotone = true;
      std::string mono_detail;
      int interior_wins = 0;
      std::string quality_detail;
      for (std::uint64_t seed : {0u, 1u, 2u}) {
        SweepArgs sw;
        sw.checkpoint = ckpt;
        sw.out = work / ("sweep_seed" + std::to_string(seed) + ".csv");
        sw.plot = work / ("sweep_seed" + std::to_string(seed) + ".svg");
        sw.seed = seed;
        if (cmd_sweep(sw, sink, std::cerr) != kExitOk) {
          monotone = false;
          quality_detail += "seed " + std::to_string(seed) + " sweep failed; ";
          continue;
        }
        const auto rows = read_rows(sw.out);
        bool ok = rows.size() == 11 && rows.front().acceptance_ratio_pct == 100.0 &&
                  rows.back().acceptance_ratio_pct == 0.0;
        for (std::size_t i = 1; i < rows.size(); ++i) {
          ok = ok && rows[i].acceptance_ratio_pct <= rows[i - 1].acceptance_ratio_pct;
        }
        monotone = monotone && ok;
        if (seed == 0) {
          for (const auto& r : rows) mono_detail += fmt(r.acceptance_ratio_pct, 3) + " ";
        }
        double best = INFINITY, best_eps = 0.0;
        for (const auto& r : rows) {
          if (r.epsilon > 0.25 && r.epsilon < 0.75 && r.mean_l1 < best) {
            best = r.mean_l1;
            best_eps = r.epsilon;
          }
        }
        const double at_zero = rows.empty() ? INFINITY : rows.front().mean_l1;
        if (best <= at_zero) ++interior_wins;
        quality_detail += "seed " + std::to_string(seed) + ": min " + fmt(best) + " at eps " + fmt(best_eps, 2) +
                          " vs eps 0 " + fmt(at_zero) + "; ";
      }
      report(4, monotone, "acceptance % over grid (seed 0): " + mono_detail);
      report(6, interior_wins >= 1, quality_detail + std::to_string(interior_wins) + "/3 seeds hold");
    }

    // 9. Confidence training freezes the AR model and the prior predictor.
    {
      ModelBundle b = load_checkpoint(ckpt);
      b.conf = ModelBundle::initialize(b.dims, cfg.seed()).conf;
      const auto theta = raw_bytes(std::as_const(b.ar).tensors());
      const auto w = raw_bytes(std::as_const(b.prior).tensors());
      ConfidenceTrainingConfig conf = cfg.training().confidence;
      conf.fit.seed = mix_seed(cfg.seed(), 0xC0F);
      const auto result = train_confidence(b, dataset.train, dataset.validation, conf);
      const bool frozen = same_bytes(theta, raw_bytes(std::as_const(b.ar).tensors())) &&
                          same_bytes(w, raw_bytes(std::as_const(b.prior).tensors()));
      const double bce = result.log.val_bce.empty() ? INFINITY : result.log.val_bce.back();
      report(9, frozen && bce < std::log(2.0),
             std::string(frozen ? "theta and W unchanged" : "parameters changed") + ", validation BCE " + fmt(bce) +
                 " < ln 2 = " + fmt(std::log(2.0)));
    }
  }

  // 8. Reproducibility of train and sweep.
  {
    const fs::path cfg = work / "small.cfg";
    std::ofstream(cfg) << kSmallConfig;
    bool ok = true;
    std::string ckpts[2], logs[2], sweeps[2];
    for (int run = 0; run < 2; ++run) {
      TrainArgs t;
      t.config = cfg;
      t.out = work / ("small_" + std::to_string(run) + ".ckpt");
      ok = ok && cmd_train(t, sink, std::cerr) == kExitOk;
      SweepArgs sw;
      sw.checkpoint = t.out;
      sw.out = work / ("small_sweep_" + std::to_string(run) + ".csv");
      ok = ok && cmd_sweep(sw, sink, std::cerr) == kExitOk;
      ckpts[run] = slurp(t.out);
      logs[run] = slurp(fs::path(t.out.string() + ".log.csv"));
      sweeps[run] = without_wall_ms(slurp(sw.out));
    }
    ok = ok && !ckpts[0].empty() && ckpts[0] == ckpts[1] && logs[0] == logs[1] && sweeps[0] == sweeps[1];
    report(8, ok, "checkpoints (" + std::to_string(ckpts[0].size()) + " bytes), logs and sweep CSVs identical");
  }

  int failures = 0;
  for (const auto& [id, line] : lines) {
    std::cout << line << '\n';
    failures += line.rfind("FAIL", 0) == 0;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
