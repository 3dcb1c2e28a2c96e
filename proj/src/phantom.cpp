#include "qtomo/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qtomo/error.hpp"
#include "qtomo/rng.hpp"

namespace qtomo {

Image gen_ellipse_phantom(int size, const std::vector<EllipseSpec>& ellipses) {
  if (size < 4) throw InvalidArgument("phantom size must be >= 4");
  int levels = 1;
  for (const auto& e : ellipses) {
    if (!(e.semi_a > 0.0) || !(e.semi_b > 0.0)) {
      throw InvalidArgument("ellipse semi-axes must be positive");
    }
    if (e.value < 0) throw InvalidArgument("ellipse value must be non-negative");
    levels = std::max(levels, e.value);
  }
  Image img(size, size, levels);
  const double half = (size - 1) / 2.0;
  for (const auto& e : ellipses) {
    const double phi = e.rotation_deg * std::numbers::pi / 180.0;
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    for (int i = 0; i < size; ++i) {
      const double dy = (half - i) - e.center_y;
      for (int j = 0; j < size; ++j) {
        const double dx = (j - half) - e.center_x;
        const double u = (dx * c + dy * s) / e.semi_a;
        const double v = (-dx * s + dy * c) / e.semi_b;
        if (u * u + v * v <= 1.0) img.set(i, j, e.value);
      }
    }
  }
  return img;
}

Image gen_random_phantom(int size, int levels, std::uint64_t seed) {
  if (levels < 1) throw InvalidArgument("random phantom levels must be >= 1");
  if (size < 1) throw InvalidArgument("random phantom size must be >= 1");
  Image img(size, size, levels);
  const int margin = (size + 4) / 5;
  Rng rng(seed);
  for (int i = margin; i < size - margin; ++i) {
    for (int j = margin; j < size - margin; ++j) {
      img.set(i, j, static_cast<int>(rng.below(static_cast<std::uint64_t>(levels) + 1)));
    }
  }
  return img;
}

Image pad(const Image& image, int t) {
  if (t < 0) throw InvalidArgument("padding must be non-negative");
  Image out(image.width() + 2 * t, image.height() + 2 * t, image.levels());
  for (int i = 0; i < image.height(); ++i) {
    for (int j = 0; j < image.width(); ++j) out.set(i + t, j + t, image.at(i, j));
  }
  return out;
}

std::vector<EllipseSpec> shepp_logan_binary(int size) {
  // Shepp-Logan axes are given on [-1, 1]; map that square onto the disk that
  // keeps every pixel shadow on the detector.
  const double r = size / 2.0 - std::numbers::sqrt2 / 2.0 - 0.5;
  return {
      {0.0, 0.0, 0.69 * r, 0.92 * r, 0.0, 1},
      {0.22 * r, 0.0, 0.11 * r, 0.31 * r, -18.0, 0},
      {-0.22 * r, 0.0, 0.16 * r, 0.41 * r, 18.0, 0},
  };
}

}  // namespace qtomo
