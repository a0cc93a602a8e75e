#pragma once

#include <filesystem>

#include "fedsense/nn.hpp"

namespace fedsense {

// Binary model format: 16-byte header (magic "FSNN", u32 version, u32 layer
// count, u32 reserved, all little-endian), then every parameter as a
// little-endian float32 in serialization order (per layer: weights
// row-major, then biases). This is also the simulated packet payload.
inline constexpr long long kModelHeaderBytes = 16;
inline constexpr long long kModelPacketBytes =
    kParameterCount * 4LL + kModelHeaderBytes;

void write_model_binary(const std::filesystem::path& path, const ModelParams& model);
ModelParams read_model_binary(const std::filesystem::path& path);

/// Debug-friendly JSON dump (full double precision), written to path.
void write_model_json(const std::filesystem::path& path, const ModelParams& model);

}  // namespace fedsense
