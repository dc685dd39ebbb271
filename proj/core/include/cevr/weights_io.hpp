#pragma once

#include <filesystem>

#include "cevr/model.hpp"

namespace cevr {

// Single-file weight container; byte layout documented in
// docs/weights_format.md:
//   "CEVRWT01" | u64 LE manifest length | JSON manifest | f32 LE tensors
void save_weights(const ModelWeights& weights, const std::filesystem::path& path);

// Validates the magic, the config hash and every tensor name/shape against
// the architecture the manifest's config describes.
ModelWeights load_weights(const std::filesystem::path& path);

}  // namespace cevr
