#pragma once

#include <array>
#include <cstdint>

#include "skipshift/image.hpp"

namespace skipshift {

/// Renders a 1600x1200 blood-smear-like field: light pink background with
/// smooth shading and sensor noise, erythrocyte discs (one carrying a
/// parasite spot) and dark debris blobs. Used in place of a real microscopy
/// frame when none is supplied.
RgbImage render_stand_in_source(std::uint64_t seed = 0);

/// Template regions matching render_stand_in_source: background, 3 cells,
/// 3 artifacts.
std::array<Rect, 7> stand_in_regions();

}  // namespace skipshift
