#include "qtomo/projector.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qtomo/error.hpp"
#include "qtomo/parallel.hpp"

namespace qtomo {

Geometry Geometry::uniform(int image_size, int angle_count, double range_deg) {
  if (angle_count < 1) throw InvalidArgument("angle count must be >= 1");
  Geometry g;
  g.image_size = image_size;
  g.detector_bins = image_size;
  g.angles_deg.reserve(static_cast<std::size_t>(angle_count));
  for (int k = 0; k < angle_count; ++k) g.angles_deg.push_back(range_deg * k / angle_count);
  g.validate();
  return g;
}

Geometry Geometry::with_angles(int image_size, std::vector<double> angles_deg) {
  Geometry g{image_size, image_size, std::move(angles_deg)};
  g.validate();
  return g;
}

void Geometry::validate() const {
  if (image_size < 1) throw InvalidArgument("geometry image size must be >= 1");
  if (detector_bins != image_size) {
    throw InvalidArgument("detector bins must equal the image side length");
  }
  if (angles_deg.empty()) throw InvalidArgument("geometry needs at least one angle");
  for (std::size_t k = 0; k < angles_deg.size(); ++k) {
    const double a = angles_deg[k];
    if (!(a >= 0.0 && a < 360.0)) {
      throw InvalidArgument("angle " + std::to_string(a) + " outside [0, 360)");
    }
    if (k > 0 && !(a > angles_deg[k - 1])) {
      throw InvalidArgument("angles must be strictly increasing");
    }
  }
}

std::pair<double, double> cos_sin_deg(double degrees) {
  const double reduced = std::fmod(degrees, 360.0);
  const double quarter = reduced / 90.0;
  if (quarter == std::floor(quarter)) {
    switch (static_cast<int>(quarter + 4) % 4) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, 1.0};
      case 2: return {-1.0, 0.0};
      default: return {0.0, -1.0};
    }
  }
  const double rad = reduced * std::numbers::pi / 180.0;
  return {std::cos(rad), std::sin(rad)};
}

namespace {

// CDF of the unit-area shadow of a unit square: the convolution of boxes of
// widths wide >= narrow, i.e. a trapezoid of half-support (wide+narrow)/2 and
// half-plateau (wide-narrow)/2. Evaluated at offset u from the pixel center.
class ShadowCdf {
 public:
  ShadowCdf(double c, double s)
      : wide_(std::max(std::abs(c), std::abs(s))),
        narrow_(std::min(std::abs(c), std::abs(s))),
        half_support_((wide_ + narrow_) / 2.0),
        half_plateau_((wide_ - narrow_) / 2.0) {}

  double half_support() const { return half_support_; }

  double operator()(double u) const {
    if (u <= -half_support_) return 0.0;
    if (u >= half_support_) return 1.0;
    if (narrow_ == 0.0) return (u + half_plateau_) / wide_;
    if (u <= -half_plateau_) {
      const double d = u + half_support_;
      return d * d / (2.0 * wide_ * narrow_);
    }
    if (u < half_plateau_) return narrow_ / (2.0 * wide_) + (u + half_plateau_) / wide_;
    const double d = half_support_ - u;
    return 1.0 - d * d / (2.0 * wide_ * narrow_);
  }

 private:
  double wide_;
  double narrow_;
  double half_support_;
  double half_plateau_;
};

struct AngleFrame {
  double c;
  double s;
  ShadowCdf cdf;
  explicit AngleFrame(double theta_deg)
      : c(cos_sin_deg(theta_deg).first), s(cos_sin_deg(theta_deg).second), cdf(c, s) {}
};

// Coefficients below this are round-off from a shadow edge landing on a bin
// boundary.
constexpr double kCoeffFloor = 1e-15;

Footprint footprint(const AngleFrame& f, int row, int col, const Geometry& g) {
  const int n = g.image_size;
  const int bins = g.detector_bins;
  const double half = (n - 1) / 2.0;
  const double x = col - half;
  const double y = half - row;
  const double t0 = x * f.c + y * f.s;
  const double origin = bins / 2.0;
  const double h = f.cdf.half_support();
  const int first = static_cast<int>(std::floor(t0 - h + origin));
  const int last = static_cast<int>(std::ceil(t0 + h + origin)) - 1;

  Footprint fp;
  for (int b = first; b <= last; ++b) {
    const double lo = b - origin - t0;
    const double coeff = f.cdf(lo + 1.0) - f.cdf(lo);
    if (coeff <= kCoeffFloor) continue;
    if (b < 0 || b >= bins) {
      fp.clipped = true;
      continue;
    }
    fp.weights.push_back({b, std::min(coeff, 1.0)});
  }
  return fp;
}

void check_pixel(int row, int col, const Geometry& g) {
  if (row < 0 || col < 0 || row >= g.image_size || col >= g.image_size) {
    throw InvalidArgument("pixel (" + std::to_string(row) + ", " + std::to_string(col) +
                          ") outside the " + std::to_string(g.image_size) + " grid");
  }
}

void check_image(const Image& image, const Geometry& g) {
  if (image.width() != g.image_size || image.height() != g.image_size) {
    throw InvalidArgument("image is " + std::to_string(image.width()) + "x" +
                          std::to_string(image.height()) + " but geometry expects " +
                          std::to_string(g.image_size));
  }
}

}  // namespace

Footprint footprint_coeffs(double theta_deg, int row, int col, const Geometry& geometry) {
  check_pixel(row, col, geometry);
  return footprint(AngleFrame(theta_deg), row, col, geometry);
}

Sinogram::Sinogram(Geometry g) : geometry(std::move(g)), values(geometry.cell_count(), 0.0) {}

Sinogram radon(const Image& image, const Geometry& geometry) {
  geometry.validate();
  check_image(image, geometry);
  Sinogram sino(geometry);
  const int n = geometry.image_size;
  std::vector<char> clipped(geometry.angles_deg.size(), 0);
  parallel_for(geometry.angles_deg.size(), [&](std::size_t a) {
    const AngleFrame frame(geometry.angles_deg[a]);
    double* row = sino.values.data() + a * static_cast<std::size_t>(geometry.detector_bins);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const int v = image.at(i, j);
        if (v == 0) continue;
        const Footprint fp = footprint(frame, i, j, geometry);
        if (fp.clipped) clipped[a] = 1;
        for (const auto& w : fp.weights) row[w.bin] += w.coeff * v;
      }
    }
  });
  sino.clipped = std::any_of(clipped.begin(), clipped.end(), [](char c) { return c != 0; });
  return sino;
}

ProjectionOperator::ProjectionOperator(const Geometry& geometry) : geometry_(geometry) {
  geometry_.validate();
  const int n = geometry_.image_size;
  const auto bins = static_cast<std::size_t>(geometry_.detector_bins);
  const std::size_t angles = geometry_.angles_deg.size();

  // Per angle: entries bucketed by bin, pixels visited in ascending order.
  std::vector<std::vector<std::vector<Entry>>> per_angle(angles);
  std::vector<char> clipped(angles, 0);
  parallel_for(angles, [&](std::size_t a) {
    const AngleFrame frame(geometry_.angles_deg[a]);
    auto& buckets = per_angle[a];
    buckets.assign(bins, {});
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const Footprint fp = footprint(frame, i, j, geometry_);
        if (fp.clipped) clipped[a] = 1;
        for (const auto& w : fp.weights) buckets[w.bin].push_back({i * n + j, w.coeff});
      }
    }
  });

  offsets_.reserve(angles * bins + 1);
  offsets_.push_back(0);
  for (std::size_t a = 0; a < angles; ++a) {
    for (std::size_t b = 0; b < bins; ++b) {
      const auto& bucket = per_angle[a][b];
      entries_.insert(entries_.end(), bucket.begin(), bucket.end());
      offsets_.push_back(entries_.size());
    }
    per_angle[a].clear();
    per_angle[a].shrink_to_fit();
  }
  clipped_ = std::any_of(clipped.begin(), clipped.end(), [](char c) { return c != 0; });
}

Sinogram apply_operator(const ProjectionOperator& op, const Image& image) {
  check_image(image, op.geometry());
  Sinogram sino(op.geometry());
  const auto& px = image.pixels();
  bool clipped = false;
  for (std::size_t cell = 0; cell < op.ray_count(); ++cell) {
    double acc = 0.0;
    for (const auto& e : op.ray(cell)) {
      const int v = px[static_cast<std::size_t>(e.pixel)];
      if (v != 0) acc += e.coeff * v;
    }
    sino.values[cell] = acc;
  }
  if (op.clipped()) {
    // The operator knows some pixel shadow left the detector; report it only
    // when such a pixel is actually non-zero, matching radon().
    const Geometry& g = op.geometry();
    for (std::size_t a = 0; a < g.angles_deg.size() && !clipped; ++a) {
      const AngleFrame frame(g.angles_deg[a]);
      for (int i = 0; i < g.image_size && !clipped; ++i) {
        for (int j = 0; j < g.image_size && !clipped; ++j) {
          if (image.at(i, j) != 0 && footprint(frame, i, j, g).clipped) clipped = true;
        }
      }
    }
  }
  sino.clipped = clipped;
  return sino;
}

std::vector<double> project_values(const ProjectionOperator& op, std::span<const double> pixels) {
  const auto n = static_cast<std::size_t>(op.geometry().image_size);
  if (pixels.size() != n * n) throw InvalidArgument("pixel vector does not match operator");
  std::vector<double> out(op.ray_count(), 0.0);
  for (std::size_t cell = 0; cell < op.ray_count(); ++cell) {
    double acc = 0.0;
    for (const auto& e : op.ray(cell)) acc += e.coeff * pixels[static_cast<std::size_t>(e.pixel)];
    out[cell] = acc;
  }
  return out;
}

}  // namespace qtomo
