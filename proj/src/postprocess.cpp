#include "qtomo/postprocess.hpp"

#include <deque>

#include "qtomo/error.hpp"

namespace qtomo {

CleanupParams CleanupParams::defaults_for(int size) {
  const int area = size * size;
  const int t = (area + 99) / 100;
  return {t, t, Connectivity::Four};
}

void CleanupParams::validate() const {
  if (hole_max < 0 || speck_max < 0) throw InvalidArgument("cleanup thresholds must be >= 0");
  if (connectivity != Connectivity::Four && connectivity != Connectivity::Eight) {
    throw InvalidArgument("connectivity must be 4 or 8");
  }
}

std::vector<int> label_components(const Image& image, int value, Connectivity connectivity,
                                  int* count) {
  const int h = image.height();
  const int w = image.width();
  std::vector<int> labels(image.size(), -1);
  static constexpr int kDi[8] = {-1, 1, 0, 0, -1, -1, 1, 1};
  static constexpr int kDj[8] = {0, 0, -1, 1, -1, 1, -1, 1};
  const int neighbours = connectivity == Connectivity::Eight ? 8 : 4;
  int next = 0;
  std::deque<std::pair<int, int>> queue;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      if (image.at(i, j) != value || labels[image.index(i, j)] >= 0) continue;
      labels[image.index(i, j)] = next;
      queue.emplace_back(i, j);
      while (!queue.empty()) {
        const auto [ci, cj] = queue.front();
        queue.pop_front();
        for (int d = 0; d < neighbours; ++d) {
          const int ni = ci + kDi[d];
          const int nj = cj + kDj[d];
          if (ni < 0 || nj < 0 || ni >= h || nj >= w) continue;
          if (image.at(ni, nj) != value || labels[image.index(ni, nj)] >= 0) continue;
          labels[image.index(ni, nj)] = next;
          queue.emplace_back(ni, nj);
        }
      }
      ++next;
    }
  }
  if (count) *count = next;
  return labels;
}

Image clean_binary(const Image& image, const CleanupParams& params) {
  params.validate();
  for (int v : image.pixels()) {
    if (v != 0 && v != 1) throw InvalidArgument("clean_binary needs a binary image");
  }
  const int h = image.height();
  const int w = image.width();
  std::vector<int> pixels = image.pixels();

  int count = 0;
  auto labels = label_components(image, 1, params.connectivity, &count);
  std::vector<int> sizes(static_cast<std::size_t>(count), 0);
  for (int l : labels) {
    if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
  }
  for (std::size_t p = 0; p < pixels.size(); ++p) {
    if (labels[p] >= 0 && sizes[static_cast<std::size_t>(labels[p])] < params.speck_max) pixels[p] = 0;
  }

  const Image despeckled = Image::from_pixels(w, h, 1, pixels);
  const Connectivity background =
      params.connectivity == Connectivity::Four ? Connectivity::Eight : Connectivity::Four;
  labels = label_components(despeckled, 0, background, &count);
  sizes.assign(static_cast<std::size_t>(count), 0);
  std::vector<char> border(static_cast<std::size_t>(count), 0);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const int l = labels[despeckled.index(i, j)];
      if (l < 0) continue;
      ++sizes[static_cast<std::size_t>(l)];
      if (i == 0 || j == 0 || i == h - 1 || j == w - 1) border[static_cast<std::size_t>(l)] = 1;
    }
  }
  for (std::size_t p = 0; p < pixels.size(); ++p) {
    const int l = labels[p];
    if (l >= 0 && !border[static_cast<std::size_t>(l)] &&
        sizes[static_cast<std::size_t>(l)] < params.hole_max) {
      pixels[p] = 1;
    }
  }
  return Image::from_pixels(w, h, 1, std::move(pixels));
}

Image cleanup(const Image& image, const CleanupParams& params) {
  if (image.levels() != 1) return image;
  return clean_binary(image, params);
}

}  // namespace qtomo
