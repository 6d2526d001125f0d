#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sdf2net/image.hpp"

namespace sdf2net {

/// Windowed training/evaluation sample: a window x window x 6 complex block
/// centered on a pixel, plus that pixel's class id.
struct Patch {
  ComplexTensor data;  // [window, window, 6]
  size_t center_row = 0, center_col = 0;
  int label = 0;  // 1..num_classes
};

struct PixelCoord {
  uint32_t row = 0, col = 0;
  bool operator==(const PixelCoord&) const = default;
};

/// Stratified train/test partition of the labeled pixels. Per class c the
/// train side holds max(1, round(ratio * |labeled_c|)) pixels; coordinate
/// lists are sorted by (row, col).
struct SplitSpec {
  double ratio = 0.0;
  uint64_t seed = 0;
  std::vector<std::vector<PixelCoord>> train_by_class;  // index 0 = class 1
  std::vector<std::vector<PixelCoord>> test_by_class;
};

/// Per-channel standardization: the real and imaginary planes of each of the
/// six channels are independently shifted to mean 0 and scaled to population
/// standard deviation 1; a plane whose std is below 1e-12 becomes all zeros.
/// Returns a new image.
CoherencyImage normalize_channels(const CoherencyImage& image);

/// window x window x 6 block centered at (row, col); positions beyond the
/// image border are mirror-reflected about the edge, excluding the edge pixel
/// itself (offset d beyond the border maps to distance d inside).
ComplexTensor extract_patch(const CoherencyImage& image, size_t row, size_t col,
                            size_t window);

SplitSpec stratified_split(const LabelMap& map, double ratio, uint64_t seed);

/// Materializes one Patch per split coordinate; within each side the order is
/// ascending class id, then ascending (row, col).
std::pair<std::vector<Patch>, std::vector<Patch>> build_dataset(
    const CoherencyImage& image, const LabelMap& map, const SplitSpec& split,
    size_t window);

/// Copies patches[first..first+count) into a [count, w, w, 6] batch tensor
/// and their labels into `labels`.
ComplexTensor assemble_batch(std::span<const Patch> patches, size_t first,
                             size_t count, std::vector<int>* labels);

}  // namespace sdf2net
