#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nara/bundle.hpp"
#include "nara/dataset.hpp"
#include "nara/trainer.hpp"

namespace nara {

struct ConfigKey {
  std::string_view name;
  std::string_view default_value;
  std::string_view description;
};

/// Every accepted key with its default, in documentation order.
const std::vector<ConfigKey>& config_keys();

/// Flat `key = value` run configuration. Lines starting with '#' and blank
/// lines are ignored; unknown keys are rejected.
class RunConfig {
 public:
  RunConfig();

  static RunConfig parse(std::string_view text);
  /// Throws "config not found" when the file does not exist.
  static RunConfig load(const std::filesystem::path& path);
  static RunConfig from_map(const std::map<std::string, std::string>& values);

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  /// Applies NARA_SEED when set.
  void apply_environment();

  std::uint64_t seed() const { return get_u64("seed"); }
  std::size_t horizon() const { return get_size("H"); }
  ModelDims dims() const;
  SinusoidParams dataset() const;
  TrainingConfig training() const;
  CalibrationMode calibration() const;
  double kappa() const { return get_double("kappa"); }

  /// Parses every typed key once; throws on the first bad value.
  void validate() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Reads NARA_SEED; empty when unset.
std::optional<std::uint64_t> seed_from_environment();

}  // namespace nara
