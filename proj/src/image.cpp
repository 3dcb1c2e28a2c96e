#include "qtomo/image.hpp"

#include <numeric>
#include <string>

#include "qtomo/error.hpp"

namespace qtomo {

namespace {

void check_value(int value, int levels, std::size_t index) {
  if (value < 0 || value > levels) {
    throw InvalidArgument("pixel " + std::to_string(index) + " value " + std::to_string(value) +
                          " outside [0, " + std::to_string(levels) + "]");
  }
}

}  // namespace

Image::Image(int width, int height, int levels)
    : width_(width), height_(height), levels_(levels) {
  if (width < 0 || height < 0) throw InvalidArgument("image dimensions must be non-negative");
  if (levels < 1) throw InvalidArgument("image levels must be >= 1");
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

void Image::set(int i, int j, int value) {
  const std::size_t k = index(i, j);
  check_value(value, levels_, k);
  pixels_[k] = value;
}

Image Image::from_pixels(int width, int height, int levels, std::vector<int> pixels) {
  Image img(width, height, levels);
  if (pixels.size() != img.pixels_.size()) {
    throw InvalidArgument("pixel count " + std::to_string(pixels.size()) + " does not match " +
                          std::to_string(width) + "x" + std::to_string(height));
  }
  for (std::size_t k = 0; k < pixels.size(); ++k) check_value(pixels[k], levels, k);
  img.pixels_ = std::move(pixels);
  return img;
}

long long Image::sum() const {
  return std::accumulate(pixels_.begin(), pixels_.end(), 0LL);
}

}  // namespace qtomo
