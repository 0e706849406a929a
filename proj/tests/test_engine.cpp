#include <doctest.h>

#include <cmath>

#include "nara/engine.hpp"
#include "nara/sweep.hpp"
#include "support.hpp"

using namespace nara;

TEST_CASE("epsilon 1 is bit-identical to pure AR") {
  const auto b = test::small_bundle(40);
  Rng rng(41);
  for (int i = 0; i < 20; ++i) {
    const auto ctx = test::random_values(5 + i, rng);
    GenerationConfig cfg;
    cfg.epsilon = 1.0;
    cfg.horizon = 23;
    cfg.seed = 100 + i;
    const auto nara_trace = generate_nara(b, ctx, cfg);
    const auto ar_trace = generate_pure_ar(b.ar, ctx, 23, 100 + i);
    CHECK(nara_trace.generated == ar_trace.generated);
    CHECK(nara_trace.sequential_rounds == 23);
    CHECK(nara_trace.draft_passes == 0);
    CHECK(nara_trace.acceptance_ratio() == 0.0);
  }
}

TEST_CASE("epsilon 0 uses one round per chunk") {
  const auto b = test::small_bundle(42, 12, 4);
  Rng rng(43);
  for (std::size_t horizon : {1u, 4u, 10u, 17u}) {
    GenerationConfig cfg;
    cfg.epsilon = 0.0;
    cfg.horizon = horizon;
    const auto t = generate_nara(b, test::random_values(12, rng), cfg);
    CHECK(t.generated.size() == horizon);
    CHECK(t.sequential_rounds == (horizon + 3) / 4);
    CHECK(t.draft_passes == (horizon + 3) / 4);
    CHECK(t.acceptance_ratio() == 1.0);
  }
}

TEST_CASE("horizon 0 yields nothing") {
  const auto b = test::small_bundle(44);
  GenerationConfig cfg;
  cfg.horizon = 0;
  const auto t = generate_nara(b, std::vector<double>{0.1}, cfg);
  CHECK(t.generated.empty());
  CHECK(t.sequential_rounds == 0);
  CHECK_THROWS_AS(generate_nara(b, std::vector<double>{}, cfg), Error);
  cfg.epsilon = 1.5;
  CHECK_THROWS_AS(generate_nara(b, std::vector<double>{0.1}, cfg), Error);
}

TEST_CASE("counters add up and accepted values come from the recorded draft heads") {
  const auto b = test::small_bundle(45, 10, 5);
  Rng rng(46);
  for (double eps : {0.2, 0.5, 0.8}) {
    GenerationConfig cfg;
    cfg.epsilon = eps;
    cfg.horizon = 37;
    cfg.seed = 9;
    cfg.record_chunks = true;
    const auto ctx = test::random_values(10, rng);
    const auto t = generate_nara(b, ctx, cfg);
    CHECK(t.generated.size() == 37);
    CHECK(t.accepted_total + t.resampled_total == 37);
    CHECK(t.sequential_rounds == t.draft_passes + t.resampled_total);

    // Replay every chunk: the accepted prefix must equal a fresh draft pass
    // over the context state and the preceding priors.
    std::vector<double> history = ctx;
    std::size_t offset = 0;
    for (const auto& chunk : t.chunks) {
      const auto state = warmup(b.ar, history);
      CHECK(chunk.start_position == state.position);
      const auto accepted = chunk.mask.accepted();
      if (accepted > 0) {
        const auto heads =
            draft_pass(b.ar, state, std::span<const double>(chunk.priors.values).first(accepted));
        CHECK(heads == chunk.heads);
        for (std::size_t k = 0; k < accepted; ++k) {
          Rng r = substream(9, static_cast<std::uint64_t>(state.position) + k + 1, DrawPurpose::draft);
          CHECK(t.generated[offset + k] == gaussian_sample(heads[k], standard_normal(r)));
        }
      }
      const std::size_t emitted = accepted + (accepted < chunk.scores.values.size() ? 1 : 0);
      history.insert(history.end(), t.generated.begin() + static_cast<std::ptrdiff_t>(offset),
                     t.generated.begin() + static_cast<std::ptrdiff_t>(offset + emitted));
      offset += emitted;
    }
    CHECK(offset == 37);
  }
}

TEST_CASE("generation is reproducible for a fixed seed") {
  const auto b = test::small_bundle(47);
  GenerationConfig cfg;
  cfg.epsilon = 0.4;
  cfg.horizon = 30;
  cfg.seed = 77;
  const std::vector<double> ctx{0.1, -0.2, 0.3};
  const auto a = generate_nara(b, ctx, cfg);
  const auto c = generate_nara(b, ctx, cfg);
  CHECK(a.generated == c.generated);
  CHECK(a.sequential_rounds == c.sequential_rounds);
}

TEST_CASE("sweep rows: endpoints, monotone acceptance and serial/parallel identity") {
  const auto b = test::small_bundle(48, 12, 4);
  Rng rng(49);
  std::vector<std::vector<double>> seqs;
  for (int i = 0; i < 6; ++i) seqs.push_back(test::random_values(40, rng));
  SweepOptions opt;
  opt.grid = parse_grid("0.0:1.0:0.1");
  opt.horizon = 20;
  opt.seed = 3;
  opt.execution = Execution::serial;
  const auto serial = run_sweep(b, seqs, opt);
  opt.execution = Execution::parallel;
  const auto parallel = run_sweep(b, seqs, opt);
  REQUIRE(serial.size() == 11);
  CHECK(serial.front().acceptance_ratio_pct == 100.0);
  CHECK(serial.front().sequential_rounds == 5 * seqs.size());
  CHECK(serial.back().acceptance_ratio_pct == 0.0);
  CHECK(serial.back().sequential_rounds == 20 * seqs.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    if (i > 0) CHECK(serial[i].acceptance_ratio_pct <= serial[i - 1].acceptance_ratio_pct);
    CHECK(serial[i].mean_l1 == parallel[i].mean_l1);
    CHECK(serial[i].sequential_rounds == parallel[i].sequential_rounds);
  }

  auto untrained = b;
  untrained.conf_trained = false;
  CHECK_THROWS_WITH_AS(run_sweep(untrained, seqs, opt), "confidence predictor untrained", Error);
}

TEST_CASE("grid parsing") {
  const auto g = parse_grid("0.0:1.0:0.1");
  REQUIRE(g.size() == 11);
  CHECK(g[3] == 0.3);
  CHECK(g[10] == 1.0);
  CHECK(parse_grid("0.2,0.5") == std::vector<double>{0.2, 0.5});
  CHECK_THROWS_AS(parse_grid("0:1"), Error);
  CHECK_THROWS_AS(parse_grid("0:2:0.5"), Error);
  CHECK_THROWS_AS(parse_grid("abc"), Error);
}
