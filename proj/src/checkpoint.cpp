#include "nara/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "nara/format.hpp"

namespace nara {

namespace {

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

std::vector<NamedTensor> named_tensors(ModelBundle& b) {
  std::vector<NamedTensor> out;
  auto append = [&](std::vector<Tensor*> ts, std::vector<std::string> names) {
    for (std::size_t i = 0; i < ts.size(); ++i) out.push_back({names[i], ts[i]});
  };
  append(b.ar.tensors(), b.ar.tensor_names());
  append(b.prior.tensors(), b.prior.tensor_names());
  append(b.conf.tensors(), b.conf.tensor_names());
  return out;
}

void write_values(std::ostream& out, std::span<const double> values, std::size_t row) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << format_double(values[i]);
    out << ((i + 1) % row == 0 || i + 1 == values.size() ? '\n' : ' ');
  }
}

void write_param(std::ostream& out, const std::string& name, const std::vector<std::size_t>& shape,
                 std::span<const double> values) {
  out << "param " << name << ' ' << shape.size();
  for (auto d : shape) out << ' ' << d;
  out << '\n';
  write_values(out, values, shape.empty() ? 1 : shape.back());
}

std::uint64_t parse_u64(const std::string& text) {
  std::uint64_t value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error("checkpoint: malformed integer '" + text + "'");
  }
  return value;
}

bool parse_flag(const std::string& text) {
  if (text == "1") return true;
  if (text == "0") return false;
  throw Error("checkpoint: malformed flag '" + text + "'");
}

}  // namespace

void save_checkpoint(const ModelBundle& bundle, std::ostream& out) {
  const auto& cal = bundle.calibration;
  out << kCheckpointMagic << '\n';
  out << "meta dims.context " << bundle.dims.context << '\n';
  out << "meta dims.chunk " << bundle.dims.chunk << '\n';
  out << "meta dims.hidden " << bundle.dims.hidden << '\n';
  out << "meta dims.layers " << bundle.dims.layers << '\n';
  out << "meta dims.conf_hidden " << bundle.dims.conf_hidden << '\n';
  out << "meta standardization.mean " << format_double(bundle.standardization.mean) << '\n';
  out << "meta standardization.scale " << format_double(bundle.standardization.scale) << '\n';
  out << "meta trained.ar " << (bundle.ar_trained ? 1 : 0) << '\n';
  out << "meta trained.prior " << (bundle.prior_trained ? 1 : 0) << '\n';
  out << "meta trained.conf " << (bundle.conf_trained ? 1 : 0) << '\n';
  out << "meta calibration.mode " << to_string(cal.mode()) << '\n';
  out << "meta calibration.kappa " << format_double(cal.kappa()) << '\n';
  out << "meta calibration.count " << cal.count() << '\n';
  out << "meta calibration.mean " << format_double(cal.running_mean()) << '\n';
  for (const auto& [key, value] : bundle.config) {
    if (key.empty() || value.empty() || key.find_first_of(" \t\n") != std::string::npos ||
        value.find('\n') != std::string::npos) {
      throw Error("checkpoint: config entry cannot be stored: '" + key + "'");
    }
    out << "meta config." << key << ' ' << value << '\n';
  }
  auto& mutable_bundle = const_cast<ModelBundle&>(bundle);
  for (const auto& nt : named_tensors(mutable_bundle)) {
    write_param(out, nt.name, nt.tensor->shape(), nt.tensor->values());
  }
  if (!cal.quantile_table().empty()) {
    write_param(out, "calibration.quantiles", {cal.quantile_table().size()}, cal.quantile_table());
  }
  out << "end\n";
  if (!out) throw Error("checkpoint: write failed");
}

void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("checkpoint: cannot open " + path.string() + " for writing");
  save_checkpoint(bundle, out);
}

ModelBundle load_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("checkpoint: empty input");
  if (line != kCheckpointMagic) {
    throw Error("checkpoint: version mismatch (expected '" + std::string(kCheckpointMagic) + "', got '" + line +
                "')");
  }

  std::map<std::string, std::string> meta;
  std::map<std::string, std::string> config;
  std::map<std::string, Tensor> params;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string kind;
    fields >> kind;
    if (kind == "end") {
      ended = true;
      break;
    }
    if (kind == "meta") {
      std::string key;
      fields >> key;
      const auto rest = line.find(' ', 5);
      if (key.empty() || rest == std::string::npos) throw Error("checkpoint: malformed meta line");
      const std::string value = line.substr(rest + 1);
      if (key.rfind("config.", 0) == 0) {
        config[key.substr(7)] = value;
      } else {
        meta[key] = value;
      }
      continue;
    }
    if (kind != "param") throw Error("checkpoint: unexpected line '" + line + "'");
    std::string name;
    std::size_t rank = 0;
    fields >> name >> rank;
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) fields >> d;
    if (!fields || name.empty()) throw Error("checkpoint: malformed param header '" + line + "'");
    Tensor t(shape);
    std::string token;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!(in >> token)) throw Error("checkpoint: truncated values for " + name);
      t[i] = parse_double(token);
    }
    std::getline(in, line);
    if (!params.emplace(name, std::move(t)).second) throw Error("checkpoint: duplicate tensor " + name);
  }
  if (!ended) throw Error("checkpoint: missing end marker");

  auto take = [&](const std::string& key) {
    const auto it = meta.find(key);
    if (it == meta.end()) throw Error("checkpoint: missing meta " + key);
    return it->second;
  };

  ModelBundle b;
  b.dims.context = parse_u64(take("dims.context"));
  b.dims.chunk = parse_u64(take("dims.chunk"));
  b.dims.hidden = parse_u64(take("dims.hidden"));
  b.dims.layers = parse_u64(take("dims.layers"));
  b.dims.conf_hidden = parse_u64(take("dims.conf_hidden"));
  b.ar = ArParams::zeros(b.dims.hidden, b.dims.layers);
  b.prior = PriorParams::zeros(b.dims.context, b.dims.chunk);
  b.conf = ConfParams::zeros(b.dims.context, b.dims.chunk, b.dims.conf_hidden);
  b.standardization.mean = parse_double(take("standardization.mean"));
  b.standardization.scale = parse_double(take("standardization.scale"));
  b.ar_trained = parse_flag(take("trained.ar"));
  b.prior_trained = parse_flag(take("trained.prior"));
  b.conf_trained = parse_flag(take("trained.conf"));
  b.config = std::move(config);

  for (const auto& nt : named_tensors(b)) {
    const auto it = params.find(nt.name);
    if (it == params.end()) throw Error("checkpoint: missing tensor " + nt.name);
    if (!it->second.same_shape(*nt.tensor)) throw Error("checkpoint: shape mismatch for " + nt.name);
    *nt.tensor = std::move(it->second);
    params.erase(it);
  }
  std::vector<double> table;
  if (const auto it = params.find("calibration.quantiles"); it != params.end()) {
    if (it->second.rank() != 1) throw Error("checkpoint: calibration.quantiles must be rank 1");
    table.assign(it->second.values().begin(), it->second.values().end());
    params.erase(it);
  }
  if (!params.empty()) throw Error("checkpoint: unknown tensor " + params.begin()->first);
  b.calibration = ThresholdCalibration::restore(parse_calibration_mode(take("calibration.mode")),
                                                parse_double(take("calibration.kappa")),
                                                parse_u64(take("calibration.count")),
                                                parse_double(take("calibration.mean")), std::move(table));
  return b;
}

ModelBundle load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("checkpoint not found: " + path.string());
  return load_checkpoint(in);
}

}  // namespace nara
