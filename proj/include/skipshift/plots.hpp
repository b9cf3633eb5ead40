#pragma once

#include <string>
#include <vector>

#include "skipshift/shift_probe.hpp"
#include "skipshift/shiftlab.hpp"
#include "skipshift/trainer.hpp"

namespace skipshift {

/// Heat map of fold-mean IoU: one row per spec, columns "original" plus the
/// factors of `kind`. Gaps are drawn hatched.
std::string iou_heatmap_svg(const IoUMatrix& matrix, ShiftKind kind);

/// Violins of the per-dimension distances per tap (all folds pooled) with
/// the fold-averaged layer means drawn as a line.
std::string layer_shift_svg(const std::vector<LayerShiftReport>& fold_reports, const std::string& title);

/// Gaussian kernel density of `values` on `grid` (Silverman bandwidth, with
/// a floor so that constant samples still draw).
std::vector<double> kernel_density(const std::vector<double>& values, const std::vector<double>& grid);

}  // namespace skipshift
