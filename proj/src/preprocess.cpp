#include "sdf2net/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "sdf2net/rng.hpp"

namespace sdf2net {

namespace {

constexpr double kDegenerateStd = 1e-12;

void standardize_plane(const double* src, double* dst, size_t n) {
  double mean = 0.0;
  for (size_t i = 0; i < n; ++i) mean += src[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = src[i] - mean;
    var += d * d;
  }
  const double sd = std::sqrt(var / static_cast<double>(n));  // population std
  if (sd < kDegenerateStd) {
    std::memset(dst, 0, n * sizeof(double));
    return;
  }
  const double inv = 1.0 / sd;
  for (size_t i = 0; i < n; ++i) dst[i] = (src[i] - mean) * inv;
}

// Mirror reflection about the border, excluding the edge pixel. Folds
// repeatedly so windows wider than the image stay in range.
size_t reflect_index(ptrdiff_t q, size_t n) {
  if (n == 1) return 0;
  const ptrdiff_t sn = static_cast<ptrdiff_t>(n);
  while (q < 0 || q >= sn) {
    if (q < 0) q = -q;
    if (q >= sn) q = 2 * sn - 2 - q;
  }
  return static_cast<size_t>(q);
}

}  // namespace

CoherencyImage normalize_channels(const CoherencyImage& image) {
  CoherencyImage out(image.height, image.width);
  const size_t n = image.pixel_count();
  for (size_t ch = 0; ch < kCoherencyChannels; ++ch) {
    standardize_plane(image.plane_re(ch), out.plane_re(ch), n);
    standardize_plane(image.plane_im(ch), out.plane_im(ch), n);
  }
  return out;
}

ComplexTensor extract_patch(const CoherencyImage& image, size_t row, size_t col,
                            size_t window) {
  if (window < 3 || window % 2 == 0) {
    throw std::invalid_argument("window must be odd and >= 3");
  }
  if (row >= image.height || col >= image.width) {
    throw std::invalid_argument("center out of bounds");
  }
  const ptrdiff_t half = static_cast<ptrdiff_t>(window) / 2;
  ComplexTensor patch({window, window, kCoherencyChannels});
  const size_t w = image.width;
  for (size_t pr = 0; pr < window; ++pr) {
    const size_t sr = reflect_index(static_cast<ptrdiff_t>(row) - half +
                                        static_cast<ptrdiff_t>(pr),
                                    image.height);
    for (size_t pc = 0; pc < window; ++pc) {
      const size_t sc = reflect_index(static_cast<ptrdiff_t>(col) - half +
                                          static_cast<ptrdiff_t>(pc),
                                      image.width);
      const size_t src = sr * w + sc;
      const size_t dst = (pr * window + pc) * kCoherencyChannels;
      for (size_t ch = 0; ch < kCoherencyChannels; ++ch) {
        patch.re[dst + ch] = image.plane_re(ch)[src];
        patch.im[dst + ch] = image.plane_im(ch)[src];
      }
    }
  }
  return patch;
}

SplitSpec stratified_split(const LabelMap& map, double ratio, uint64_t seed) {
  if (ratio <= 0.0 || ratio >= 1.0) {
    throw std::invalid_argument("split ratio must be in (0,1)");
  }
  validate_labels(map);

  std::vector<std::vector<PixelCoord>> by_class(map.num_classes);
  for (size_t r = 0; r < map.height; ++r) {
    for (size_t c = 0; c < map.width; ++c) {
      const uint16_t label = map.at(r, c);
      if (label == 0) continue;
      by_class[label - 1].push_back(
          {static_cast<uint32_t>(r), static_cast<uint32_t>(c)});
    }
  }

  SplitSpec split;
  split.ratio = ratio;
  split.seed = seed;
  split.train_by_class.resize(map.num_classes);
  split.test_by_class.resize(map.num_classes);

  rng::Rng rng(seed);
  const auto by_coord = [](const PixelCoord& a, const PixelCoord& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  };
  for (size_t cls = 0; cls < map.num_classes; ++cls) {
    std::vector<PixelCoord>& pixels = by_class[cls];
    if (pixels.empty()) throw std::runtime_error("empty class");
    const size_t n_train = std::max<size_t>(
        1, static_cast<size_t>(std::llround(ratio * static_cast<double>(pixels.size()))));
    rng.shuffle(pixels);
    split.train_by_class[cls].assign(pixels.begin(), pixels.begin() + n_train);
    split.test_by_class[cls].assign(pixels.begin() + n_train, pixels.end());
    std::sort(split.train_by_class[cls].begin(), split.train_by_class[cls].end(), by_coord);
    std::sort(split.test_by_class[cls].begin(), split.test_by_class[cls].end(), by_coord);
  }
  return split;
}

std::pair<std::vector<Patch>, std::vector<Patch>> build_dataset(
    const CoherencyImage& image, const LabelMap& map, const SplitSpec& split,
    size_t window) {
  if (image.height != map.height || image.width != map.width) {
    throw std::invalid_argument("dimension mismatch");
  }
  const auto build_side =
      [&](const std::vector<std::vector<PixelCoord>>& side) {
        std::vector<Patch> out;
        for (size_t cls = 0; cls < side.size(); ++cls) {
          for (const PixelCoord& px : side[cls]) {
            Patch p;
            p.data = extract_patch(image, px.row, px.col, window);
            p.center_row = px.row;
            p.center_col = px.col;
            p.label = static_cast<int>(cls + 1);
            out.push_back(std::move(p));
          }
        }
        return out;
      };
  return {build_side(split.train_by_class), build_side(split.test_by_class)};
}

ComplexTensor assemble_batch(std::span<const Patch> patches, size_t first,
                             size_t count, std::vector<int>* labels) {
  if (count == 0 || first + count > patches.size()) {
    throw std::invalid_argument("batch range out of bounds");
  }
  const ComplexTensor& proto = patches[first].data;
  const size_t window = proto.dim(0);
  ComplexTensor batch({count, window, window, kCoherencyChannels});
  const size_t stride = proto.numel();
  if (labels) labels->resize(count);
  for (size_t i = 0; i < count; ++i) {
    const Patch& p = patches[first + i];
    std::memcpy(batch.re.data() + i * stride, p.data.re.data(), stride * sizeof(double));
    std::memcpy(batch.im.data() + i * stride, p.data.im.data(), stride * sizeof(double));
    if (labels) (*labels)[i] = p.label;
  }
  return batch;
}

}  // namespace sdf2net
