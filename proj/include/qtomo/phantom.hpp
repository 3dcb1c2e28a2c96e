#pragma once

#include <cstdint>
#include <vector>

#include "qtomo/image.hpp"

namespace qtomo {

/// One filled ellipse, in pixel units relative to the grid center with y up.
struct EllipseSpec {
  double center_x = 0.0;
  double center_y = 0.0;
  double semi_a = 1.0;
  double semi_b = 1.0;
  double rotation_deg = 0.0;
  int value = 1;
};

/// Rasterizes ellipses by pixel-center membership. Later ellipses overwrite
/// earlier ones, so nested specs express Shepp-Logan style structure.
/// The image's level bound is the largest ellipse value (at least 1).
Image gen_ellipse_phantom(int size, const std::vector<EllipseSpec>& ellipses);

/// Uniform random levels in [0, levels] with a ceil(size/5) zero frame.
Image gen_random_phantom(int size, int levels, std::uint64_t seed);

/// Zero-pads by t pixels on every side.
Image pad(const Image& image, int t);

/// Binarized Shepp-Logan outline: skull ellipse with the two dark inner
/// ellipses cut out, scaled to sit inside the inscribed detector circle.
std::vector<EllipseSpec> shepp_logan_binary(int size);

}  // namespace qtomo
