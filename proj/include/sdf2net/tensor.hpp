#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace sdf2net {

/// Dense N-dimensional complex array. Real and imaginary parts are stored as
/// separate row-major 64-bit planes; every operation in the library treats a
/// (re, im) pair as the single complex value re + i*im.
struct ComplexTensor {
  std::vector<size_t> shape;
  std::vector<double> re, im;

  ComplexTensor() = default;

  explicit ComplexTensor(std::vector<size_t> s) : shape(std::move(s)) {
    size_t n = 1;
    for (size_t d : shape) n *= d;
    re.assign(n, 0.0);
    im.assign(n, 0.0);
  }

  size_t numel() const { return re.size(); }

  size_t rank() const { return shape.size(); }

  size_t dim(size_t i) const { return shape[i]; }

  size_t offset(std::initializer_list<size_t> idx) const {
    size_t off = 0, k = 0;
    for (size_t i : idx) off = off * shape[k++] + i;
    return off;
  }

  std::complex<double> at(std::initializer_list<size_t> idx) const {
    const size_t o = offset(idx);
    return {re[o], im[o]};
  }

  void set(std::initializer_list<size_t> idx, std::complex<double> v) {
    const size_t o = offset(idx);
    re[o] = v.real();
    im[o] = v.imag();
  }

  void zero() {
    std::fill(re.begin(), re.end(), 0.0);
    std::fill(im.begin(), im.end(), 0.0);
  }

  void fill(std::complex<double> v) {
    std::fill(re.begin(), re.end(), v.real());
    std::fill(im.begin(), im.end(), v.imag());
  }

  /// Same data, new shape. The element count must not change.
  ComplexTensor reshaped(std::vector<size_t> s) const {
    size_t n = 1;
    for (size_t d : s) n *= d;
    if (n != numel()) throw std::invalid_argument("reshape: element count mismatch");
    ComplexTensor out;
    out.shape = std::move(s);
    out.re = re;
    out.im = im;
    return out;
  }

  void set_shape(std::vector<size_t> s) {
    size_t n = 1;
    for (size_t d : s) n *= d;
    if (n != numel()) throw std::invalid_argument("reshape: element count mismatch");
    shape = std::move(s);
  }

  bool same_shape(const ComplexTensor& o) const { return shape == o.shape; }
};

inline double max_abs_diff(const ComplexTensor& a, const ComplexTensor& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.numel(); ++i) {
    m = std::max(m, std::abs(a.re[i] - b.re[i]));
    m = std::max(m, std::abs(a.im[i] - b.im[i]));
  }
  return m;
}

}  // namespace sdf2net
