#pragma once

#include <cstdint>
#include <vector>

#include "sdf2net/tensor.hpp"

namespace sdf2net {

// Fixed channel order of the coherency upper triangle.
enum CoherencyChannel : size_t { kT11 = 0, kT12, kT13, kT22, kT23, kT33 };

inline constexpr size_t kCoherencyChannels = 6;
inline constexpr const char* kChannelNames[kCoherencyChannels] = {
    "T11", "T12", "T13", "T22", "T23", "T33"};
inline constexpr bool kChannelIsDiagonal[kCoherencyChannels] = {
    true, false, false, true, false, true};

/// H x W grid of the six complex upper-triangle entries of the 3x3 Hermitian
/// coherency matrix, stored as a [6, H, W] tensor in the order T11, T12, T13,
/// T22, T23, T33.
struct CoherencyImage {
  size_t height = 0, width = 0;
  ComplexTensor data;

  CoherencyImage() = default;
  CoherencyImage(size_t h, size_t w)
      : height(h), width(w), data({kCoherencyChannels, h, w}) {}

  size_t pixel_count() const { return height * width; }

  size_t plane_offset(size_t ch) const { return ch * height * width; }
  double* plane_re(size_t ch) { return data.re.data() + plane_offset(ch); }
  double* plane_im(size_t ch) { return data.im.data() + plane_offset(ch); }
  const double* plane_re(size_t ch) const { return data.re.data() + plane_offset(ch); }
  const double* plane_im(size_t ch) const { return data.im.data() + plane_offset(ch); }

  std::complex<double> at(size_t ch, size_t r, size_t c) const {
    return data.at({ch, r, c});
  }
  void set(size_t ch, size_t r, size_t c, std::complex<double> v) {
    data.set({ch, r, c}, v);
  }
};

/// Enforces the Hermitian PSD pixel invariants:
///  - imaginary parts of T11/T22/T33 are exactly zero,
///  - diagonal powers are nonnegative,
///  - |Tij|^2 <= Tii*Tjj within relative tolerance 1e-4 (Cauchy-Schwarz).
/// Throws std::runtime_error naming the first violated invariant.
void validate_coherency(const CoherencyImage& img);

/// H x W grid of integer class labels; 0 means unlabeled, classes run
/// 1..num_classes.
struct LabelMap {
  size_t height = 0, width = 0;
  uint16_t num_classes = 0;
  std::vector<uint16_t> labels;

  LabelMap() = default;
  LabelMap(size_t h, size_t w, uint16_t n)
      : height(h), width(w), num_classes(n), labels(h * w, 0) {}

  uint16_t at(size_t r, size_t c) const { return labels[r * width + c]; }
  void set(size_t r, size_t c, uint16_t v) { labels[r * width + c] = v; }
  size_t pixel_count() const { return height * width; }
};

/// Throws if any label exceeds num_classes.
void validate_labels(const LabelMap& map);

}  // namespace sdf2net
