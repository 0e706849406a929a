#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "nara/checkpoint.hpp"
#include "nara/commands.hpp"
#include "nara/config.hpp"
#include "nara/sweep.hpp"
#include "support.hpp"

using namespace nara;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("nara_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

const char* kSmallConfig =
    "# tiny run\n"
    "seed = 4\n"
    "o = 12\n"
    "M = 4\n"
    "B = 4\n"
    "H = 8\n"
    "hidden = 6\n"
    "conf.hidden = 5\n"
    "epochs = 1\n"
    "batch = 8\n"
    "conf.epochs = 2\n"
    "conf.windows = 4\n"
    "calibration = running_mean\n"
    "dataset.count = 10\n"
    "dataset.length = 30\n";

ModelBundle configured_bundle(std::uint64_t seed) {
  auto b = test::small_bundle(seed, 12, 4);
  b.config = RunConfig::parse(kSmallConfig).values();
  b.standardization = {0.25, 1.5};
  return b;
}

// Drops the trailing wall_ms column of every CSV row.
std::string without_wall_ms(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
  return out;
}

}  // namespace

TEST_CASE("config parsing, defaults and unknown keys") {
  const auto cfg = RunConfig::parse(kSmallConfig);
  CHECK(cfg.seed() == 4);
  CHECK(cfg.dims().context == 12);
  CHECK(cfg.get("lr") == "0.001");
  CHECK(cfg.calibration() == CalibrationMode::running_mean);
  CHECK(RunConfig().get_size("epochs") == 30);
  CHECK_THROWS_WITH_AS(RunConfig::parse("bogus = 1\n"), "unknown config key 'bogus'", Error);
  CHECK_THROWS_AS(RunConfig::parse("seed 1\n"), Error);
  CHECK_THROWS_AS(RunConfig::parse("lr = fast\n"), Error);
  CHECK_THROWS_AS(RunConfig::parse("B = 30\n"), Error);
  CHECK_THROWS_AS(RunConfig::load("/nonexistent/nara.cfg"), Error);
  for (const auto& k : config_keys()) CHECK(RunConfig().get(std::string(k.name)) == k.default_value);
}

TEST_CASE("checkpoint round trip is byte identical") {
  auto b = configured_bundle(70);
  std::ostringstream first;
  save_checkpoint(b, first);
  CHECK(first.str().rfind(std::string(kCheckpointMagic) + "\n", 0) == 0);
  std::istringstream in(first.str());
  const auto loaded = load_checkpoint(in);
  CHECK(loaded.ar == b.ar);
  CHECK(loaded.prior == b.prior);
  CHECK(loaded.conf == b.conf);
  CHECK(loaded.standardization == b.standardization);
  CHECK(loaded.calibration.quantile_table() == b.calibration.quantile_table());
  CHECK(loaded.calibration.threshold(0.3) == b.calibration.threshold(0.3));
  CHECK(loaded.config == b.config);
  std::ostringstream second;
  save_checkpoint(loaded, second);
  CHECK(first.str() == second.str());

  std::string text = first.str();
  std::istringstream wrong_version("NARA-CKPT v2" + text.substr(kCheckpointMagic.size()));
  CHECK_THROWS_AS(load_checkpoint(wrong_version), Error);
  const auto pos = text.find("param prior.bias");
  REQUIRE(pos != std::string::npos);
  std::istringstream missing(text.substr(0, pos) + "end\n");
  CHECK_THROWS_AS(load_checkpoint(missing), Error);
  std::istringstream renamed(text.substr(0, pos) + "param prior.bogus" + text.substr(pos + 16));
  CHECK_THROWS_AS(load_checkpoint(renamed), Error);
}

TEST_CASE("context file reading") {
  TempDir dir;
  write_file(dir.path / "ok.txt", "0.5\n\n -1.25 \n3\n");
  CHECK(read_context_file(dir.path / "ok.txt") == std::vector<double>{0.5, -1.25, 3.0});
  write_file(dir.path / "bad.txt", "0.5\nabc\n");
  CHECK_THROWS_AS(read_context_file(dir.path / "bad.txt"), Error);
  write_file(dir.path / "empty.txt", "\n");
  CHECK_THROWS_AS(read_context_file(dir.path / "empty.txt"), Error);
  write_file(dir.path / "nan.txt", "nan\n");
  CHECK_THROWS_AS(read_context_file(dir.path / "nan.txt"), Error);
}

TEST_CASE("command exit codes") {
  TempDir dir;
  std::ostringstream out, err;

  TrainArgs train;
  train.config = dir.path / "missing.cfg";
  train.out = dir.path / "m.ckpt";
  CHECK(cmd_train(train, out, err) == kExitUsage);
  CHECK(err.str().find("config not found") != std::string::npos);

  write_file(dir.path / "bad.cfg", "nonsense = 3\n");
  train.config = dir.path / "bad.cfg";
  CHECK(cmd_train(train, out, err) == kExitUsage);

  const auto ckpt = dir.path / "m.ckpt";
  save_checkpoint(configured_bundle(71), ckpt);
  write_file(dir.path / "ctx.txt", "0.1\n0.2\n0.3\n");

  GenerateArgs gen;
  gen.checkpoint = ckpt;
  gen.context_file = dir.path / "ctx.txt";
  gen.horizon = 0;
  std::ostringstream gen_out;
  CHECK(cmd_generate(gen, gen_out, err) == kExitOk);
  CHECK(gen_out.str().empty());

  gen.horizon = 6;
  std::ostringstream a, b;
  CHECK(cmd_generate(gen, a, err) == kExitOk);
  CHECK(cmd_generate(gen, b, err) == kExitOk);
  CHECK(a.str() == b.str());
  std::size_t lines = 0;
  for (char c : a.str()) lines += c == '\n';
  CHECK(lines == 6);

  gen.epsilon = 1.5;
  CHECK(cmd_generate(gen, out, err) == kExitUsage);
  gen.epsilon = 0.5;
  gen.context_file = dir.path / "nope.txt";
  CHECK(cmd_generate(gen, out, err) == kExitUsage);

  write_file(dir.path / "junk.ckpt", "NARA-CKPT v0\n");
  gen.checkpoint = dir.path / "junk.ckpt";
  gen.context_file = dir.path / "ctx.txt";
  CHECK(cmd_generate(gen, out, err) == kExitUsage);

  auto untrained = configured_bundle(72);
  untrained.conf_trained = false;
  save_checkpoint(untrained, dir.path / "u.ckpt");
  gen.checkpoint = dir.path / "u.ckpt";
  std::ostringstream uerr;
  CHECK(cmd_generate(gen, out, uerr) == kExitUsage);
  CHECK(uerr.str().find("confidence predictor untrained") != std::string::npos);
  SweepArgs sw;
  sw.checkpoint = dir.path / "u.ckpt";
  sw.out = dir.path / "s.csv";
  CHECK(cmd_sweep(sw, out, err) == kExitUsage);

  CheckArgs check;
  check.what = "theory";
  std::ostringstream check_out;
  CHECK(cmd_check(check, check_out, err) == kExitOk);
  CHECK(check_out.str().find("FAIL") == std::string::npos);
  check.what = "grad";
  check.inject_fault = "joint_loss";
  std::ostringstream fault_out, fault_err;
  CHECK(cmd_check(check, fault_out, fault_err) == kExitFailure);
  CHECK(fault_out.str().find("FAIL joint_loss") != std::string::npos);
  CHECK(fault_err.str().find("worst offender: joint_loss") != std::string::npos);
  check.inject_fault = "no_such_op";
  CHECK(cmd_check(check, out, err) != kExitOk);
  check.what = "other";
  check.inject_fault.clear();
  CHECK(cmd_check(check, out, err) == kExitUsage);
}

TEST_CASE("seed precedence: flag over environment over stored") {
  TempDir dir;
  const auto ckpt = dir.path / "m.ckpt";
  save_checkpoint(configured_bundle(73), ckpt);
  write_file(dir.path / "ctx.txt", "0.1\n0.2\n");
  GenerateArgs gen;
  gen.checkpoint = ckpt;
  gen.context_file = dir.path / "ctx.txt";
  gen.horizon = 5;
  gen.epsilon = 1.0;
  std::ostringstream err;
  auto run = [&] {
    std::ostringstream o;
    REQUIRE(cmd_generate(gen, o, err) == kExitOk);
    return o.str();
  };
  ::unsetenv("NARA_SEED");
  const std::string stored = run();
  gen.seed = 4;
  CHECK(run() == stored);
  gen.seed = 5;
  const std::string flag5 = run();
  CHECK(flag5 != stored);
  gen.seed.reset();
  ::setenv("NARA_SEED", "5", 1);
  CHECK(run() == flag5);
  gen.seed = 4;
  CHECK(run() == stored);
  ::unsetenv("NARA_SEED");
}

TEST_CASE("sweep command: CSV format, plot, serial and parallel agree") {
  TempDir dir;
  const auto ckpt = dir.path / "m.ckpt";
  save_checkpoint(configured_bundle(74), ckpt);
  SweepArgs sw;
  sw.checkpoint = ckpt;
  sw.out = dir.path / "par.csv";
  sw.plot = dir.path / "plot.svg";
  sw.grid = "0.0:1.0:0.25";
  std::ostringstream out, err;
  REQUIRE(cmd_sweep(sw, out, err) == kExitOk);
  const std::string par = slurp(sw.out);
  CHECK(par.rfind(std::string(kSweepHeader) + "\n", 0) == 0);
  CHECK(par.find("\n0,100,") != std::string::npos);
  CHECK(par.find("\n1,0,") != std::string::npos);
  CHECK(slurp(*sw.plot).find("<svg") != std::string::npos);
  sw.serial = true;
  sw.out = dir.path / "ser.csv";
  sw.plot.reset();
  REQUIRE(cmd_sweep(sw, out, err) == kExitOk);
  CHECK(without_wall_ms(slurp(sw.out)) == without_wall_ms(par));
  sw.grid = "0:1";
  CHECK(cmd_sweep(sw, out, err) == kExitUsage);
}

TEST_CASE("training from a config writes a loadable checkpoint and a log") {
  TempDir dir;
  write_file(dir.path / "run.cfg", kSmallConfig);
  TrainArgs train;
  train.config = dir.path / "run.cfg";
  train.out = dir.path / "m.ckpt";
  std::ostringstream out, err;
  REQUIRE(cmd_train(train, out, err) == kExitOk);
  const auto b = load_checkpoint(train.out);
  CHECK(b.ar_trained);
  CHECK(b.conf_trained);
  CHECK(b.config.at("seed") == "4");
  const auto log = slurp(dir.path / "m.ckpt.log.csv");
  CHECK(log.rfind("epoch,train_nll,val_nll,prior_l1,conf_bce\n", 0) == 0);
}
