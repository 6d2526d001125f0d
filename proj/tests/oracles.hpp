#pragma once

// Independent reference implementations used as test oracles. Everything in
// this header is written the slow, obvious way (scalar loops, std::complex,
// materialized padded arrays) and must stay independent of the fast paths in
// src/ that it checks.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <vector>

#include "sdf2net/image.hpp"
#include "sdf2net/tensor.hpp"

namespace oracle {

using Complex = std::complex<double>;

inline Complex tensor_at(const sdf2net::ComplexTensor& t, size_t flat) {
  return {t.re[flat], t.im[flat]};
}

/// Six-nested-loop complex 3-D convolution ("same" zero padding, stride 1,
/// cross-correlation orientation), the brute-force counterpart of
/// complex_conv3d. x is [B,H,W,D,Ci], w is [kh,kw,kd,Ci,Co], bias [Co].
inline sdf2net::ComplexTensor conv3d_reference(const sdf2net::ComplexTensor& x,
                                               const sdf2net::ComplexTensor& w,
                                               const sdf2net::ComplexTensor& bias) {
  const size_t batch = x.dim(0), h = x.dim(1), wd = x.dim(2), d = x.dim(3),
               ci = x.dim(4);
  const size_t kh = w.dim(0), kw = w.dim(1), kd = w.dim(2), co = w.dim(4);
  const ptrdiff_t ph = (kh - 1) / 2, pw = (kw - 1) / 2, pd = (kd - 1) / 2;

  sdf2net::ComplexTensor y({batch, h, wd, d, co});
  for (size_t b = 0; b < batch; ++b) {
    for (size_t oy = 0; oy < h; ++oy) {
      for (size_t ox = 0; ox < wd; ++ox) {
        for (size_t oz = 0; oz < d; ++oz) {
          for (size_t c = 0; c < co; ++c) {
            Complex acc = tensor_at(bias, c);
            for (size_t i = 0; i < kh; ++i) {
              for (size_t j = 0; j < kw; ++j) {
                for (size_t k = 0; k < kd; ++k) {
                  const ptrdiff_t sy = static_cast<ptrdiff_t>(oy + i) - ph;
                  const ptrdiff_t sx = static_cast<ptrdiff_t>(ox + j) - pw;
                  const ptrdiff_t sz = static_cast<ptrdiff_t>(oz + k) - pd;
                  if (sy < 0 || sy >= static_cast<ptrdiff_t>(h) || sx < 0 ||
                      sx >= static_cast<ptrdiff_t>(wd) || sz < 0 ||
                      sz >= static_cast<ptrdiff_t>(d)) {
                    continue;
                  }
                  for (size_t q = 0; q < ci; ++q) {
                    const size_t xi =
                        (((b * h + sy) * wd + sx) * d + sz) * ci + q;
                    const size_t wi = (((i * kw + j) * kd + k) * ci + q) * co + c;
                    acc += tensor_at(x, xi) * tensor_at(w, wi);
                  }
                }
              }
            }
            y.set({b, oy, ox, oz, c}, acc);
          }
        }
      }
    }
  }
  return y;
}

/// Naive triple-loop complex matmul with bias, counterpart of dense().
inline sdf2net::ComplexTensor dense_reference(const sdf2net::ComplexTensor& x,
                                              const sdf2net::ComplexTensor& w,
                                              const sdf2net::ComplexTensor& bias) {
  const size_t batch = x.dim(0), f = x.dim(1), o = w.dim(1);
  sdf2net::ComplexTensor y({batch, o});
  for (size_t b = 0; b < batch; ++b) {
    for (size_t j = 0; j < o; ++j) {
      Complex acc = tensor_at(bias, j);
      for (size_t i = 0; i < f; ++i) {
        acc += tensor_at(x, b * f + i) * tensor_at(w, i * o + j);
      }
      y.set({b, j}, acc);
    }
  }
  return y;
}

/// Scalar reference of the SE block on a [B,...,C] tensor: squeeze the mean
/// channel magnitude over all spatial positions, excite through the two-layer
/// bottleneck with sigmoid gates, rescale.
inline sdf2net::ComplexTensor se_reference(const sdf2net::ComplexTensor& u,
                                           const std::vector<double>& w1,  // [C/r, C]
                                           const std::vector<double>& w2,  // [C, C/r]
                                           size_t reduction) {
  const size_t c = u.shape.back();
  const size_t batch = u.dim(0);
  const size_t spatial = u.numel() / (batch * c);
  const size_t cr = c / reduction;

  sdf2net::ComplexTensor y(u.shape);
  for (size_t b = 0; b < batch; ++b) {
    std::vector<double> z(c, 0.0);
    for (size_t p = 0; p < spatial; ++p) {
      for (size_t ch = 0; ch < c; ++ch) {
        z[ch] += std::abs(tensor_at(u, (b * spatial + p) * c + ch));
      }
    }
    for (double& v : z) v /= static_cast<double>(spatial);

    std::vector<double> hidden(cr, 0.0);
    for (size_t j = 0; j < cr; ++j) {
      double acc = 0.0;
      for (size_t ch = 0; ch < c; ++ch) acc += w1[j * c + ch] * z[ch];
      hidden[j] = std::max(0.0, acc);
    }
    for (size_t ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (size_t j = 0; j < cr; ++j) acc += w2[ch * cr + j] * hidden[j];
      const double gate = 1.0 / (1.0 + std::exp(-acc));
      for (size_t p = 0; p < spatial; ++p) {
        const size_t i = (b * spatial + p) * c + ch;
        y.re[i] = gate * u.re[i];
        y.im[i] = gate * u.im[i];
      }
    }
  }
  return y;
}

/// Unstabilized magnitude softmax in extended precision.
inline std::vector<double> magnitude_softmax_reference(
    const sdf2net::ComplexTensor& logits) {
  const size_t batch = logits.dim(0), n = logits.dim(1);
  std::vector<double> out(batch * n);
  for (size_t b = 0; b < batch; ++b) {
    long double sum = 0.0L;
    std::vector<long double> e(n);
    for (size_t l = 0; l < n; ++l) {
      const size_t i = b * n + l;
      const long double mag =
          sqrtl(static_cast<long double>(logits.re[i]) * logits.re[i] +
                static_cast<long double>(logits.im[i]) * logits.im[i]);
      e[l] = expl(mag);
      sum += e[l];
    }
    for (size_t l = 0; l < n; ++l) {
      out[b * n + l] = static_cast<double>(e[l] / sum);
    }
  }
  return out;
}

/// Sort-based 3x3 median with mirror borders, counterpart of
/// median_filter_classmap.
inline sdf2net::LabelMap median_reference(const sdf2net::LabelMap& map) {
  const auto reflect = [](ptrdiff_t q, size_t n) -> size_t {
    if (n == 1) return 0;
    if (q < 0) q = -q;
    if (q >= static_cast<ptrdiff_t>(n)) q = 2 * static_cast<ptrdiff_t>(n) - 2 - q;
    return static_cast<size_t>(q);
  };
  sdf2net::LabelMap out(map.height, map.width, map.num_classes);
  for (size_t r = 0; r < map.height; ++r) {
    for (size_t c = 0; c < map.width; ++c) {
      std::vector<uint16_t> v;
      for (ptrdiff_t dr = -1; dr <= 1; ++dr) {
        for (ptrdiff_t dc = -1; dc <= 1; ++dc) {
          v.push_back(map.at(reflect(static_cast<ptrdiff_t>(r) + dr, map.height),
                             reflect(static_cast<ptrdiff_t>(c) + dc, map.width)));
        }
      }
      std::sort(v.begin(), v.end());
      out.set(r, c, v[4]);
    }
  }
  return out;
}

struct ScalarMetrics {
  double oa, aa, kappa;
};

/// Direct scalar implementation of overall/average accuracy and kappa from a
/// row-major confusion matrix (rows = predicted).
inline ScalarMetrics metrics_reference(const std::vector<uint64_t>& m, size_t n) {
  double total = 0, trace = 0;
  std::vector<double> row(n, 0.0), col(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      const double v = static_cast<double>(m[i * n + j]);
      total += v;
      row[i] += v;
      col[j] += v;
      if (i == j) trace += v;
    }
  }
  const double po = trace / total;
  double aa = 0.0;
  for (size_t i = 0; i < n; ++i) aa += row[i] > 0 ? m[i * n + i] / row[i] : 0.0;
  aa /= static_cast<double>(n);
  double pe = 0.0;
  for (size_t i = 0; i < n; ++i) pe += (row[i] / total) * (col[i] / total);
  return {po, aa, (po - pe) / (1.0 - pe)};
}

/// Materialized mirror-padded image plane oracle for patch extraction: builds
/// the explicitly padded array, then reads the window as a plain crop.
inline sdf2net::ComplexTensor padded_patch_reference(
    const sdf2net::CoherencyImage& img, size_t row, size_t col, size_t window) {
  const ptrdiff_t half = static_cast<ptrdiff_t>(window) / 2;
  const size_t ph = img.height + 2 * half, pw = img.width + 2 * half;
  const auto reflect = [](ptrdiff_t q, size_t n) -> size_t {
    if (n == 1) return 0;
    while (q < 0 || q >= static_cast<ptrdiff_t>(n)) {
      if (q < 0) q = -q;
      if (q >= static_cast<ptrdiff_t>(n)) q = 2 * static_cast<ptrdiff_t>(n) - 2 - q;
    }
    return static_cast<size_t>(q);
  };
  // full padded copy
  std::vector<Complex> padded(sdf2net::kCoherencyChannels * ph * pw);
  for (size_t ch = 0; ch < sdf2net::kCoherencyChannels; ++ch) {
    for (size_t r = 0; r < ph; ++r) {
      for (size_t c = 0; c < pw; ++c) {
        const size_t sr = reflect(static_cast<ptrdiff_t>(r) - half, img.height);
        const size_t sc = reflect(static_cast<ptrdiff_t>(c) - half, img.width);
        padded[(ch * ph + r) * pw + c] = img.at(ch, sr, sc);
      }
    }
  }
  sdf2net::ComplexTensor patch({window, window, sdf2net::kCoherencyChannels});
  for (size_t pr = 0; pr < window; ++pr) {
    for (size_t pc = 0; pc < window; ++pc) {
      for (size_t ch = 0; ch < sdf2net::kCoherencyChannels; ++ch) {
        patch.set({pr, pc, ch}, padded[(ch * ph + (row + pr)) * pw + (col + pc)]);
      }
    }
  }
  return patch;
}

}  // namespace oracle
