#include "nara/bundle.hpp"

namespace nara {

std::vector<double> Standardization::apply(std::span<const double> xs) const {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(apply(x));
  return out;
}

std::vector<double> Standardization::invert(std::span<const double> zs) const {
  std::vector<double> out;
  out.reserve(zs.size());
  for (double z : zs) out.push_back(invert(z));
  return out;
}

ModelBundle ModelBundle::initialize(const ModelDims& dims, std::uint64_t seed) {
  if (dims.context == 0 || dims.chunk == 0) throw Error("context length and chunk size must be >= 1");
  Rng rng(seed);
  ModelBundle b;
  b.dims = dims;
  b.ar = ArParams::random(dims.hidden, dims.layers, rng);
  b.prior = PriorParams::random(dims.context, dims.chunk, rng);
  b.conf = ConfParams::random(dims.context, dims.chunk, dims.conf_hidden, rng);
  return b;
}

}  // namespace nara
