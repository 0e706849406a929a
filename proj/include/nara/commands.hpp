#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nara {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct TrainArgs {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::filesystem::path> log;  // epoch CSV; defaults to <out>.log.csv
  std::optional<std::uint64_t> seed;
};

struct GenerateArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path context_file;
  double epsilon = 0.5;
  std::optional<std::size_t> horizon;
  std::optional<std::uint64_t> seed;
};

struct SweepArgs {
  std::filesystem::path checkpoint;
  std::string grid = "0.0:1.0:0.1";
  std::filesystem::path out;
  std::optional<std::filesystem::path> plot;
  std::optional<std::size_t> horizon;
  std::optional<std::uint64_t> seed;
  bool serial = false;
};

struct CheckArgs {
  std::string what;  // grad | theory
  std::uint64_t seed = 0;
  std::string inject_fault;
};

// Each command reports to `out` (results) and `err` (diagnostics) and
// returns a process exit code.
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);
int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err);
int cmd_check(const CheckArgs& args, std::ostream& out, std::ostream& err);

/// One value per line; blank lines are skipped, anything else must parse.
std::vector<double> read_context_file(const std::filesystem::path& path);

}  // namespace nara
