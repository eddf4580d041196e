#pragma once

#include <filesystem>

#include "lagdyn/parameters.hpp"

namespace lagdyn {

inline constexpr int kCheckpointFormatVersion = 1;

/// JSON checkpoint: {"format_version", "shape": {...}, "tensors": [{"name",
/// "shape": [rows, cols], "data": [...]}]}. Values are written with
/// shortest round-trip formatting, so a reload is value-exact.
void save_checkpoint_json(ParameterBundle& bundle, const std::filesystem::path& path);
ParameterBundle load_checkpoint_json(const std::filesystem::path& path);

/// Binary checkpoint: magic "LGDYNCKP", u32 version, the shape as six i64,
/// u32 tensor count, then per tensor u32 name length, name bytes, two i64
/// dims and raw little-endian doubles. Bit-exact.
void save_checkpoint_binary(ParameterBundle& bundle, const std::filesystem::path& path);
ParameterBundle load_checkpoint_binary(const std::filesystem::path& path);

/// Dispatch on extension: ".json" is JSON, anything else binary.
void save_checkpoint(ParameterBundle& bundle, const std::filesystem::path& path);
ParameterBundle load_checkpoint(const std::filesystem::path& path);

}  // namespace lagdyn
