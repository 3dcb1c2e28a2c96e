#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "qtomo/image.hpp"

namespace qtomo {

/// Parallel-beam acquisition geometry.
///
/// Pixel (i, j) of an N x N image is centered at x = j - (N-1)/2,
/// y = (N-1)/2 - i. The detector coordinate is t = x cos(theta) + y sin(theta)
/// and bin s covers [s - S/2, s + 1 - S/2).
struct Geometry {
  int image_size = 0;
  int detector_bins = 0;
  std::vector<double> angles_deg;

  /// angle_count angles evenly spaced over [0, range_deg).
  static Geometry uniform(int image_size, int angle_count, double range_deg = 180.0);
  /// Same detector with an explicit angle list.
  static Geometry with_angles(int image_size, std::vector<double> angles_deg);

  int angle_count() const { return static_cast<int>(angles_deg.size()); }
  std::size_t cell_count() const {
    return angles_deg.size() * static_cast<std::size_t>(detector_bins);
  }
  /// Throws InvalidArgument on a malformed geometry.
  void validate() const;
  bool operator==(const Geometry&) const = default;
};

/// cos/sin of an angle in degrees, exact at multiples of 90.
std::pair<double, double> cos_sin_deg(double degrees);

struct BinWeight {
  int bin;
  double coeff;
};

struct Footprint {
  std::vector<BinWeight> weights;
  /// Part of the pixel's shadow fell outside the detector.
  bool clipped = false;
};

/// Exact overlap area between the unit pixel square's shadow and each
/// detector bin, from the closed-form trapezoid of the projected square.
Footprint footprint_coeffs(double theta_deg, int row, int col, const Geometry& geometry);

/// A x S projections, row-major by angle.
struct Sinogram {
  Geometry geometry;
  std::vector<double> values;
  bool clipped = false;

  Sinogram() = default;
  explicit Sinogram(Geometry g);

  int angle_count() const { return geometry.angle_count(); }
  int bins() const { return geometry.detector_bins; }
  double at(int a, int s) const { return values[cell(a, s)]; }
  double& at(int a, int s) { return values[cell(a, s)]; }
  std::size_t cell(int a, int s) const {
    return static_cast<std::size_t>(a) * static_cast<std::size_t>(geometry.detector_bins) +
           static_cast<std::size_t>(s);
  }
};

/// Sparse system matrix: one row per sinogram cell (angle-major, then bin),
/// entries sorted by pixel index. Immutable after construction.
class ProjectionOperator {
 public:
  struct Entry {
    int pixel;
    double coeff;
  };

  explicit ProjectionOperator(const Geometry& geometry);

  const Geometry& geometry() const { return geometry_; }
  std::size_t ray_count() const { return offsets_.size() - 1; }
  std::size_t nnz() const { return entries_.size(); }
  bool clipped() const { return clipped_; }

  std::span<const Entry> ray(std::size_t cell) const {
    return {entries_.data() + offsets_[cell], entries_.data() + offsets_[cell + 1]};
  }
  std::span<const Entry> ray(int a, int s) const {
    return ray(static_cast<std::size_t>(a) * static_cast<std::size_t>(geometry_.detector_bins) +
               static_cast<std::size_t>(s));
  }

 private:
  Geometry geometry_;
  std::vector<std::size_t> offsets_;
  std::vector<Entry> entries_;
  bool clipped_ = false;
};

/// Forward projection P(theta, s) = sum_ij c * I_ij.
Sinogram radon(const Image& image, const Geometry& geometry);

/// Same result as radon(), bit for bit, from precomputed coefficients.
Sinogram apply_operator(const ProjectionOperator& op, const Image& image);

/// Forward projection of real-valued pixels through an operator.
std::vector<double> project_values(const ProjectionOperator& op, std::span<const double> pixels);

}  // namespace qtomo
