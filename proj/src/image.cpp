#include "sdf2net/image.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sdf2net {

namespace {

void check_cauchy_schwarz(const CoherencyImage& img, size_t off_ch,
                          size_t diag_a, size_t diag_b) {
  const size_t n = img.pixel_count();
  const double* or_ = img.plane_re(off_ch);
  const double* oi = img.plane_im(off_ch);
  const double* a = img.plane_re(diag_a);
  const double* b = img.plane_re(diag_b);
  for (size_t i = 0; i < n; ++i) {
    const double lhs = or_[i] * or_[i] + oi[i] * oi[i];
    const double rhs = a[i] * b[i];
    if (lhs > rhs + 1e-4 * std::max(lhs, rhs)) {
      throw std::runtime_error(
          std::string("coherency invariant violation: |") +
          kChannelNames[off_ch] + "|^2 > " + kChannelNames[diag_a] + "*" +
          kChannelNames[diag_b] + " at pixel " + std::to_string(i));
    }
  }
}

}  // namespace

void validate_coherency(const CoherencyImage& img) {
  const size_t n = img.pixel_count();
  for (size_t ch : {kT11, kT22, kT33}) {
    const double* im = img.plane_im(ch);
    const double* re = img.plane_re(ch);
    for (size_t i = 0; i < n; ++i) {
      if (im[i] != 0.0) {
        throw std::runtime_error(
            std::string("coherency invariant violation: imag(") +
            kChannelNames[ch] + ") != 0");
      }
      if (re[i] < 0.0) {
        throw std::runtime_error(
            std::string("coherency invariant violation: ") +
            kChannelNames[ch] + " < 0");
      }
    }
  }
  check_cauchy_schwarz(img, kT12, kT11, kT22);
  check_cauchy_schwarz(img, kT13, kT11, kT33);
  check_cauchy_schwarz(img, kT23, kT22, kT33);
}

void validate_labels(const LabelMap& map) {
  for (uint16_t v : map.labels) {
    if (v > map.num_classes) throw std::runtime_error("label out of range");
  }
}

}  // namespace sdf2net
