#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "nara/bundle.hpp"

namespace nara {

inline constexpr std::string_view kCheckpointMagic = "NARA-CKPT v1";

/// Line-oriented text checkpoint: a version line, `meta <key> <value>` lines,
/// then `param <name> <rank> <dims...>` blocks whose values follow row-major
/// with 17 significant digits, and a closing `end`. Writing a loaded
/// checkpoint reproduces the input byte for byte.
void save_checkpoint(const ModelBundle& bundle, std::ostream& out);
void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path);

/// Throws on a version mismatch, unknown or missing tensors and shape errors.
ModelBundle load_checkpoint(std::istream& in);
ModelBundle load_checkpoint(const std::filesystem::path& path);

}  // namespace nara
