#include "nara/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "nara/format.hpp"

namespace nara {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"seed", "0", "seed for data generation, initialization and training"},
      {"o", "200", "context window length fed to the prior and confidence predictors"},
      {"M", "20", "chunk size (priors per draft)"},
      {"B", "20", "maximum training chunk length (must not exceed M)"},
      {"H", "100", "generation horizon used by sweep"},
      {"hidden", "51", "LSTM hidden size"},
      {"layers", "2", "number of LSTM layers"},
      {"lr", "0.001", "Adam learning rate for the joint objective"},
      {"epochs", "30", "joint training epochs"},
      {"batch", "16", "training positions per Adam step"},
      {"drafts", "1", "AR rollouts per training position"},
      {"positions", "4", "training positions drawn per sequence per epoch"},
      {"kappa", "2.5", "scale of the running-mean threshold rule"},
      {"calibration", "quantile", "threshold calibration: quantile or running_mean"},
      {"threads", "0", "OpenMP threads (0 = runtime default)"},
      {"conf.hidden", "64", "confidence predictor hidden width"},
      {"conf.epochs", "150", "confidence predictor epochs"},
      {"conf.batch", "32", "confidence predictor batch size"},
      {"conf.lr", "0.001", "confidence predictor learning rate"},
      {"conf.windows", "8", "confidence training windows per sequence"},
      {"dataset.count", "120", "number of generated sinusoids"},
      {"dataset.length", "400", "samples per sinusoid"},
      {"dataset.amp_min", "0.5", "minimum amplitude"},
      {"dataset.amp_max", "1.5", "maximum amplitude"},
      {"dataset.freq_min", "0.01", "minimum frequency (cycles per step)"},
      {"dataset.freq_max", "0.05", "maximum frequency (cycles per step)"},
      {"dataset.noise", "0.02", "additive Gaussian noise std"},
      {"dataset.val_fraction", "0.2", "fraction of sequences held out for validation"},
  };
  return keys;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

bool known_key(const std::string& key) {
  for (const auto& k : config_keys()) {
    if (k.name == key) return true;
  }
  return false;
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) values_.emplace(std::string(k.name), std::string(k.default_value));
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string content = trim(line);
    if (content.empty() || content[0] == '#') continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw Error("config line " + std::to_string(lineno) + ": expected key = value");
    }
    cfg.set(trim(std::string_view(content).substr(0, eq)), trim(std::string_view(content).substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("config not found: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

RunConfig RunConfig::from_map(const std::map<std::string, std::string>& values) {
  RunConfig cfg;
  for (const auto& [k, v] : values) cfg.set(k, v);
  cfg.validate();
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!known_key(key)) throw Error("unknown config key '" + key + "'");
  if (value.empty()) throw Error("config key '" + key + "' has an empty value");
  values_[key] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw Error("unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::get_double(const std::string& key) const {
  try {
    return parse_double(get(key));
  } catch (const Error&) {
    throw Error("config key '" + key + "' is not a number: " + get(key));
  }
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const std::string& text = get(key);
  std::uint64_t value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error("config key '" + key + "' is not a non-negative integer: " + text);
  }
  return value;
}

std::size_t RunConfig::get_size(const std::string& key) const { return static_cast<std::size_t>(get_u64(key)); }

void RunConfig::apply_environment() {
  if (auto seed = seed_from_environment()) values_["seed"] = std::to_string(*seed);
}

ModelDims RunConfig::dims() const {
  ModelDims d;
  d.context = get_size("o");
  d.chunk = get_size("M");
  d.hidden = get_size("hidden");
  d.layers = get_size("layers");
  d.conf_hidden = get_size("conf.hidden");
  return d;
}

SinusoidParams RunConfig::dataset() const {
  SinusoidParams p;
  p.count = get_size("dataset.count");
  p.length = get_size("dataset.length");
  p.amp_min = get_double("dataset.amp_min");
  p.amp_max = get_double("dataset.amp_max");
  p.freq_min = get_double("dataset.freq_min");
  p.freq_max = get_double("dataset.freq_max");
  p.noise = get_double("dataset.noise");
  p.val_fraction = get_double("dataset.val_fraction");
  return p;
}

TrainingConfig RunConfig::training() const {
  TrainingConfig t;
  t.lr = get_double("lr");
  t.batch = get_size("batch");
  t.max_chunk = get_size("B");
  t.epochs = get_size("epochs");
  t.drafts = get_size("drafts");
  t.positions_per_sequence = get_size("positions");
  t.seed = seed();
  t.confidence.windows_per_sequence = get_size("conf.windows");
  t.confidence.fit.epochs = get_size("conf.epochs");
  t.confidence.fit.batch = get_size("conf.batch");
  t.confidence.fit.lr = get_double("conf.lr");
  return t;
}

CalibrationMode RunConfig::calibration() const { return parse_calibration_mode(get("calibration")); }

void RunConfig::validate() const {
  seed();
  const ModelDims d = dims();
  if (d.context == 0 || d.chunk == 0 || d.hidden == 0 || d.layers == 0 || d.conf_hidden == 0) {
    throw Error("o, M, hidden, layers and conf.hidden must be >= 1");
  }
  if (horizon() == 0) throw Error("H must be >= 1");
  const TrainingConfig t = training();
  t.validate();
  if (t.max_chunk > d.chunk) throw Error("B must not exceed M");
  if (!(t.confidence.fit.lr > 0.0)) throw Error("conf.lr must be positive");
  dataset().validate();
  calibration();
  if (!(kappa() > 0.0)) throw Error("kappa must be positive");
  get_size("threads");
}

std::optional<std::uint64_t> seed_from_environment() {
  const char* env = std::getenv("NARA_SEED");
  if (env == nullptr || *env == '\0') return std::nullopt;
  std::uint64_t value = 0;
  const std::string_view text(env);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error("NARA_SEED is not a non-negative integer");
  }
  return value;
}

}  // namespace nara
