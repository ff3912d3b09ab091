#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "fqs/forecaster.hpp"

namespace fqs {

inline constexpr std::string_view kModelMagic = "FQS1";
inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Binary container: magic, format version, a JSON header (config, statistics,
/// layout, training log), the raw little-endian parameter doubles, and a
/// trailing FNV-1a checksum over everything before it.
std::string save_model(const ModelState& model);

/// Throws Error(Version) for an unknown format version and Error(Format) for a
/// truncated or otherwise corrupt stream.
ModelState load_model(std::string_view bytes);

/// JSON object with every ModelConfig field.
std::string model_config_to_json(const ModelConfig& config);

/// Applies the keys present in a JSON object on top of `base`. Unknown keys
/// and ill-typed values raise Error(Config).
ModelConfig model_config_from_json(std::string_view text, ModelConfig base = {});

}  // namespace fqs
