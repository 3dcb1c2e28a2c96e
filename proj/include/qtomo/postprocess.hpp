#pragma once

#include <vector>

#include "qtomo/image.hpp"

namespace qtomo {

enum class Connectivity { Four = 4, Eight = 8 };

struct CleanupParams {
  /// Background components strictly smaller than this are filled.
  int hole_max = 0;
  /// Foreground components strictly smaller than this are removed.
  int speck_max = 0;
  /// Foreground connectivity; background uses the other one.
  Connectivity connectivity = Connectivity::Four;

  /// hole_max = speck_max = ceil(N^2 / 100).
  static CleanupParams defaults_for(int size);
  void validate() const;
};

/// Component labels (0-based, in raster order of first pixel) for pixels
/// equal to `value`; -1 elsewhere.
std::vector<int> label_components(const Image& image, int value, Connectivity connectivity,
                                  int* count = nullptr);

/// Removes small foreground specks, then fills small enclosed holes.
/// Throws InvalidArgument unless the image is binary.
Image clean_binary(const Image& image, const CleanupParams& params);

/// clean_binary for L = 1 images; multi-level images come back unchanged.
Image cleanup(const Image& image, const CleanupParams& params);

}  // namespace qtomo
