#pragma once

#include <vector>

#include "qtomo/image.hpp"
#include "qtomo/projector.hpp"

namespace qtomo {

/// Spatial-domain Ram-Lak kernel sampled on the padded grid, transformed to a
/// real frequency response of length `padded`.
std::vector<double> ramp_filter(int padded);

/// Smallest power of two >= 2 * bins (at least 64).
int padded_length(int bins);

/// Ramp-filtered backprojection over the sinogram's own angle list, with
/// linear interpolation between detector samples and scale pi / (2 A).
FloatImage fbp(const Sinogram& sino);

/// Clamps to [0, levels] and rounds half away from zero.
Image threshold_round(const FloatImage& image, int levels);

}  // namespace qtomo
