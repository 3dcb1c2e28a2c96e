#pragma once

#include <cstddef>
#include <vector>

namespace qtomo {

/// Integer-valued pixel grid, row-major; pixel (i, j) is row i, column j.
/// Every value lies in [0, levels].
class Image {
 public:
  Image() = default;
  Image(int width, int height, int levels);

  int width() const { return width_; }
  int height() const { return height_; }
  int levels() const { return levels_; }
  std::size_t size() const { return pixels_.size(); }

  int at(int i, int j) const { return pixels_[index(i, j)]; }
  /// Throws InvalidArgument when value is outside [0, levels].
  void set(int i, int j, int value);

  const std::vector<int>& pixels() const { return pixels_; }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(j);
  }

  /// Builds an image from raw row-major values, validating the range.
  static Image from_pixels(int width, int height, int levels, std::vector<int> pixels);

  long long sum() const;
  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int levels_ = 1;
  std::vector<int> pixels_;
};

/// Real-valued grid produced by classical reconstruction.
class FloatImage {
 public:
  FloatImage() = default;
  FloatImage(int width, int height) :
      width_(width), height_(height),
      values_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int i, int j) const { return values_[index(i, j)]; }
  double& at(int i, int j) { return values_[index(i, j)]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(j);
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

}  // namespace qtomo
