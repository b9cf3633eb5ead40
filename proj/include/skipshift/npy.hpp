#pragma once

#include <filesystem>

#include "skipshift/shift_metric.hpp"

namespace skipshift {

/// Writes a 2-D little-endian float32 .npy array of shape (rows, dims).
void write_npy(const std::filesystem::path& path, const FeatureMatrix& features);

/// Reads a 2-D C-order .npy array of dtype <f4 or <f8 (the latter is
/// narrowed to float).
FeatureMatrix read_npy(const std::filesystem::path& path);

}  // namespace skipshift
