#include "sdf2net/layers.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "sdf2net/linalg.hpp"

namespace sdf2net {

namespace {

constexpr double kMagnitudeFloor = 1e-12;  // |z| clamp in backward passes
constexpr double kLogFloor = 1e-12;        // log argument clamp
// im2col chunk budget per plane; bounds peak memory, not correctness.
constexpr size_t kColBudgetBytes = 32u << 20;

struct ConvDims {
  size_t batch, h, w, d, c_in, c_out;
  size_t kh, kw, kd;
  size_t positions;  // h*w*d
  size_t patch;      // kh*kw*kd*c_in (im2col row width)
};

ConvDims conv_dims(const ComplexTensor& x, const ComplexTensor& w) {
  if (x.rank() != 5 || w.rank() != 5) {
    throw std::invalid_argument("shape error: conv expects x[B,H,W,D,C], w[kh,kw,kd,Cin,Cout]");
  }
  ConvDims dm;
  dm.batch = x.dim(0);
  dm.h = x.dim(1);
  dm.w = x.dim(2);
  dm.d = x.dim(3);
  dm.c_in = x.dim(4);
  dm.kh = w.dim(0);
  dm.kw = w.dim(1);
  dm.kd = w.dim(2);
  dm.c_out = w.dim(4);
  if (w.dim(3) != dm.c_in) throw std::invalid_argument("shape error: channel mismatch");
  if (dm.kh % 2 == 0 || dm.kw % 2 == 0 || dm.kd % 2 == 0) {
    throw std::invalid_argument("shape error: kernel dims must be odd");
  }
  dm.positions = dm.h * dm.w * dm.d;
  dm.patch = dm.kh * dm.kw * dm.kd * dm.c_in;
  return dm;
}

// Gathers one sample's zero-padded neighborhoods into an interleaved col
// row [re_0..re_{K-1} | im_0..im_{K-1}] of width 2K. The interleaved layout
// turns each complex product into two plain dgemms with stacked weight
// factors instead of four (or three plus temps):
//   Re(Y) = [Xr | Xi] [Wr; -Wi],  Im(Y) = [Xr | Xi] [Wi; Wr].
void im2col_interleaved(const double* x_re, const double* x_im, double* col,
                        const ConvDims& dm) {
  const size_t ph = (dm.kh - 1) / 2, pw = (dm.kw - 1) / 2, pd = (dm.kd - 1) / 2;
  const size_t c = dm.c_in;
  const size_t patch = dm.patch;
  for (size_t h = 0; h < dm.h; ++h) {
    for (size_t w = 0; w < dm.w; ++w) {
      for (size_t d = 0; d < dm.d; ++d) {
        double* row = col + ((h * dm.w + w) * dm.d + d) * 2 * patch;
        size_t q = 0;
        for (size_t ih = 0; ih < dm.kh; ++ih) {
          const ptrdiff_t sh = static_cast<ptrdiff_t>(h + ih) - static_cast<ptrdiff_t>(ph);
          for (size_t iw = 0; iw < dm.kw; ++iw) {
            const ptrdiff_t sw = static_cast<ptrdiff_t>(w + iw) - static_cast<ptrdiff_t>(pw);
            for (size_t id = 0; id < dm.kd; ++id, q += c) {
              const ptrdiff_t sd = static_cast<ptrdiff_t>(d + id) - static_cast<ptrdiff_t>(pd);
              if (sh < 0 || sh >= static_cast<ptrdiff_t>(dm.h) || sw < 0 ||
                  sw >= static_cast<ptrdiff_t>(dm.w) || sd < 0 ||
                  sd >= static_cast<ptrdiff_t>(dm.d)) {
                std::memset(row + q, 0, c * sizeof(double));
                std::memset(row + patch + q, 0, c * sizeof(double));
              } else {
                const size_t src = ((static_cast<size_t>(sh) * dm.w +
                                     static_cast<size_t>(sw)) * dm.d +
                                    static_cast<size_t>(sd)) * c;
                std::memcpy(row + q, x_re + src, c * sizeof(double));
                std::memcpy(row + patch + q, x_im + src, c * sizeof(double));
              }
            }
          }
        }
      }
    }
  }
}

// Planar adjoint of the neighborhood gather: scatters [positions x patch]
// gradients back onto one sample plane.
void col2im_plane(const double* col, double* gx, const ConvDims& dm) {
  const size_t ph = (dm.kh - 1) / 2, pw = (dm.kw - 1) / 2, pd = (dm.kd - 1) / 2;
  const size_t c = dm.c_in;
  for (size_t h = 0; h < dm.h; ++h) {
    for (size_t w = 0; w < dm.w; ++w) {
      for (size_t d = 0; d < dm.d; ++d) {
        const double* row = col + ((h * dm.w + w) * dm.d + d) * dm.patch;
        size_t q = 0;
        for (size_t ih = 0; ih < dm.kh; ++ih) {
          const ptrdiff_t sh = static_cast<ptrdiff_t>(h + ih) - static_cast<ptrdiff_t>(ph);
          for (size_t iw = 0; iw < dm.kw; ++iw) {
            const ptrdiff_t sw = static_cast<ptrdiff_t>(w + iw) - static_cast<ptrdiff_t>(pw);
            for (size_t id = 0; id < dm.kd; ++id, q += c) {
              const ptrdiff_t sd = static_cast<ptrdiff_t>(d + id) - static_cast<ptrdiff_t>(pd);
              if (sh < 0 || sh >= static_cast<ptrdiff_t>(dm.h) || sw < 0 ||
                  sw >= static_cast<ptrdiff_t>(dm.w) || sd < 0 ||
                  sd >= static_cast<ptrdiff_t>(dm.d)) {
                continue;
              }
              double* dst = gx + ((static_cast<size_t>(sh) * dm.w +
                                   static_cast<size_t>(sw)) * dm.d +
                                  static_cast<size_t>(sd)) * c;
              for (size_t ci = 0; ci < c; ++ci) dst[ci] += row[q + ci];
            }
          }
        }
      }
    }
  }
}

size_t conv_chunk_size(const ConvDims& dm) {
  const size_t per_sample = dm.positions * 2 * dm.patch * sizeof(double);
  return std::max<size_t>(1, std::min(dm.batch, kColBudgetBytes / std::max<size_t>(per_sample, 1)));
}

// im2col/col2im scratch, reused across calls; every element read is written
// first (padding cells by memset, the rest by copy or GEMM output).
std::vector<double>& conv_scratch(int slot, size_t n) {
  thread_local std::vector<double> buffers[4];
  if (buffers[slot].size() < n) buffers[slot].resize(n);
  return buffers[slot];
}

ComplexTensor conv_forward(const ComplexTensor& x, const ComplexTensor& w,
                           const ComplexTensor& bias) {
  const ConvDims dm = conv_dims(x, w);
  if (bias.numel() != dm.c_out) throw std::invalid_argument("shape error: bias size");

  ComplexTensor y({dm.batch, dm.h, dm.w, dm.d, dm.c_out});
  const size_t chunk = conv_chunk_size(dm);
  const size_t k2 = 2 * dm.patch, co = dm.c_out;
  std::vector<double>& col = conv_scratch(0, chunk * dm.positions * k2);

  // stacked weight factors: wb1 = [Wr; -Wi], wb2 = [Wi; Wr], both [2K x Co]
  std::vector<double>& wb1 = conv_scratch(1, k2 * co);
  std::vector<double>& wb2 = conv_scratch(2, k2 * co);
  const size_t wn = dm.patch * co;
  for (size_t i = 0; i < wn; ++i) {
    wb1[i] = w.re[i];
    wb1[wn + i] = -w.im[i];
    wb2[i] = w.im[i];
    wb2[wn + i] = w.re[i];
  }

  const size_t x_stride = dm.positions * dm.c_in;
  const size_t y_stride = dm.positions * co;
  for (size_t b0 = 0; b0 < dm.batch; b0 += chunk) {
    const size_t cb = std::min(chunk, dm.batch - b0);
    for (size_t s = 0; s < cb; ++s) {
      im2col_interleaved(x.re.data() + (b0 + s) * x_stride,
                         x.im.data() + (b0 + s) * x_stride,
                         col.data() + s * dm.positions * k2, dm);
    }
    linalg::dgemm(false, false, cb * dm.positions, co, k2, 1.0, col.data(), k2,
                  wb1.data(), co, 0.0, y.re.data() + b0 * y_stride, co);
    linalg::dgemm(false, false, cb * dm.positions, co, k2, 1.0, col.data(), k2,
                  wb2.data(), co, 0.0, y.im.data() + b0 * y_stride, co);
  }

  double* yr = y.re.data();
  double* yi = y.im.data();
  const size_t rows = dm.batch * dm.positions;
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < co; ++c) {
      yr[r * co + c] += bias.re[c];
      yi[r * co + c] += bias.im[c];
    }
  }
  return y;
}

void conv_backward(const ComplexTensor& x, const ComplexTensor& w,
                   const ComplexTensor& g, ComplexTensor* dw, ComplexTensor* db,
                   ComplexTensor* dx) {
  const ConvDims dm = conv_dims(x, w);
  const size_t co = dm.c_out, k = dm.patch, k2 = 2 * k, co2 = 2 * co;

  if (db) {
    const size_t rows = dm.batch * dm.positions;
    for (size_t r = 0; r < rows; ++r) {
      for (size_t c = 0; c < co; ++c) {
        db->re[c] += g.re[r * co + c];
        db->im[c] += g.im[r * co + c];
      }
    }
  }
  if (!dw && !dx) return;

  const size_t chunk = conv_chunk_size(dm);
  std::vector<double>& col = conv_scratch(0, dw ? chunk * dm.positions * k2 : 0);
  std::vector<double>& g_int = conv_scratch(1, chunk * dm.positions * co2);
  std::vector<double>& gcol_re = conv_scratch(2, dx ? chunk * dm.positions * k : 0);
  std::vector<double>& gcol_im = conv_scratch(3, dx ? chunk * dm.positions * k : 0);

  // transposed weight stacks for dX: gcol_re = [Gr|Gi][Wr^T; Wi^T],
  // gcol_im = [Gr|Gi][-Wi^T; Wr^T]
  std::vector<double> wt1, wt2, dblock;
  if (dx) {
    wt1.resize(co2 * k);
    wt2.resize(co2 * k);
    for (size_t q = 0; q < k; ++q) {
      for (size_t c = 0; c < co; ++c) {
        wt1[c * k + q] = w.re[q * co + c];
        wt1[(co + c) * k + q] = w.im[q * co + c];
        wt2[c * k + q] = -w.im[q * co + c];
        wt2[(co + c) * k + q] = w.re[q * co + c];
      }
    }
  }
  if (dw) dblock.resize(k2 * co2);

  const size_t x_stride = dm.positions * dm.c_in;
  const size_t g_stride = dm.positions * co;
  for (size_t b0 = 0; b0 < dm.batch; b0 += chunk) {
    const size_t cb = std::min(chunk, dm.batch - b0);
    const size_t rows = cb * dm.positions;
    // g rows interleaved as [gr | gi]
    const double* gr = g.re.data() + b0 * g_stride;
    const double* gi = g.im.data() + b0 * g_stride;
    for (size_t r = 0; r < rows; ++r) {
      std::memcpy(g_int.data() + r * co2, gr + r * co, co * sizeof(double));
      std::memcpy(g_int.data() + r * co2 + co, gi + r * co, co * sizeof(double));
    }
    if (dw) {
      for (size_t s = 0; s < cb; ++s) {
        im2col_interleaved(x.re.data() + (b0 + s) * x_stride,
                           x.im.data() + (b0 + s) * x_stride,
                           col.data() + s * dm.positions * k2, dm);
      }
      // one product holds all four real blocks:
      // D = col^T g_int = [Xr^T Gr, Xr^T Gi; Xi^T Gr, Xi^T Gi]
      linalg::dgemm(true, false, k2, co2, rows, 1.0, col.data(), k2,
                    g_int.data(), co2, 0.0, dblock.data(), co2);
      for (size_t q = 0; q < k; ++q) {
        for (size_t c = 0; c < co; ++c) {
          dw->re[q * co + c] += dblock[q * co2 + c] + dblock[(k + q) * co2 + co + c];
          dw->im[q * co + c] += dblock[q * co2 + co + c] - dblock[(k + q) * co2 + c];
        }
      }
    }
    if (dx) {
      linalg::dgemm(false, false, rows, k, co2, 1.0, g_int.data(), co2,
                    wt1.data(), k, 0.0, gcol_re.data(), k);
      linalg::dgemm(false, false, rows, k, co2, 1.0, g_int.data(), co2,
                    wt2.data(), k, 0.0, gcol_im.data(), k);
      for (size_t s = 0; s < cb; ++s) {
        col2im_plane(gcol_re.data() + s * dm.positions * k,
                     dx->re.data() + (b0 + s) * x_stride, dm);
        col2im_plane(gcol_im.data() + s * dm.positions * k,
                     dx->im.data() + (b0 + s) * x_stride, dm);
      }
    }
  }
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double magnitude(double re, double im) { return std::sqrt(re * re + im * im); }

}  // namespace

// ---------------------------------------------------------------------------
// Functional ops
// ---------------------------------------------------------------------------

ComplexTensor complex_conv3d(const ComplexTensor& x, const ComplexTensor& w,
                             const ComplexTensor& bias) {
  return conv_forward(x, w, bias);
}

ComplexTensor crelu(const ComplexTensor& x) {
  ComplexTensor y(x.shape);
  for (size_t i = 0; i < x.numel(); ++i) {
    y.re[i] = x.re[i] > 0.0 ? x.re[i] : 0.0;
    y.im[i] = x.im[i] > 0.0 ? x.im[i] : 0.0;
  }
  return y;
}

ComplexTensor concat_channels(const std::vector<const ComplexTensor*>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat: no inputs");
  const ComplexTensor& first = *xs[0];
  const size_t rank = first.rank();
  size_t total_c = 0;
  for (const ComplexTensor* t : xs) {
    if (t->rank() != rank) throw std::invalid_argument("concat: rank mismatch");
    for (size_t i = 0; i + 1 < rank; ++i) {
      if (t->dim(i) != first.dim(i)) throw std::invalid_argument("concat: dim mismatch");
    }
    total_c += t->dim(rank - 1);
  }
  std::vector<size_t> out_shape = first.shape;
  out_shape[rank - 1] = total_c;
  ComplexTensor out(out_shape);

  size_t outer = 1;
  for (size_t i = 0; i + 1 < rank; ++i) outer *= first.dim(i);
  size_t c_off = 0;
  for (const ComplexTensor* t : xs) {
    const size_t c = t->dim(rank - 1);
    for (size_t o = 0; o < outer; ++o) {
      std::memcpy(out.re.data() + o * total_c + c_off, t->re.data() + o * c, c * sizeof(double));
      std::memcpy(out.im.data() + o * total_c + c_off, t->im.data() + o * c, c * sizeof(double));
    }
    c_off += c;
  }
  return out;
}

ComplexTensor slice_channels(const ComplexTensor& x, size_t begin, size_t count) {
  const size_t rank = x.rank();
  const size_t c = x.dim(rank - 1);
  if (begin + count > c) throw std::invalid_argument("slice: out of range");
  std::vector<size_t> out_shape = x.shape;
  out_shape[rank - 1] = count;
  ComplexTensor out(out_shape);
  size_t outer = 1;
  for (size_t i = 0; i + 1 < rank; ++i) outer *= x.dim(i);
  for (size_t o = 0; o < outer; ++o) {
    std::memcpy(out.re.data() + o * count, x.re.data() + o * c + begin, count * sizeof(double));
    std::memcpy(out.im.data() + o * count, x.im.data() + o * c + begin, count * sizeof(double));
  }
  return out;
}

ComplexTensor dense(const ComplexTensor& x, const ComplexTensor& w,
                    const ComplexTensor& bias) {
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0)) {
    throw std::invalid_argument("shape error: dense expects x[B,F], w[F,O]");
  }
  const size_t batch = x.dim(0), fan_in = x.dim(1), fan_out = w.dim(1);
  if (bias.numel() != fan_out) throw std::invalid_argument("shape error: bias size");
  ComplexTensor y({batch, fan_out});
  linalg::cgemm(linalg::Op::kNone, linalg::Op::kNone, batch, fan_out, fan_in,
                x.re.data(), x.im.data(), w.re.data(), w.im.data(), 0.0,
                y.re.data(), y.im.data());
  for (size_t b = 0; b < batch; ++b) {
    for (size_t o = 0; o < fan_out; ++o) {
      y.re[b * fan_out + o] += bias.re[o];
      y.im[b * fan_out + o] += bias.im[o];
    }
  }
  return y;
}

ComplexTensor dropout(const ComplexTensor& x, double rate, uint64_t seed,
                      bool training) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must be in [0,1)");
  if (!training || rate == 0.0) return x;
  rng::Rng rng(seed);
  ComplexTensor y(x.shape);
  const double scale = 1.0 / (1.0 - rate);
  for (size_t i = 0; i < x.numel(); ++i) {
    if (rng.uniform() >= rate) {
      y.re[i] = x.re[i] * scale;
      y.im[i] = x.im[i] * scale;
    }
  }
  return y;
}

std::vector<double> magnitude_softmax(const ComplexTensor& logits) {
  if (logits.rank() != 2) throw std::invalid_argument("shape error: logits must be [B,L]");
  const size_t batch = logits.dim(0), n = logits.dim(1);
  std::vector<double> probs(batch * n);
  std::vector<double> mag(n);
  for (size_t b = 0; b < batch; ++b) {
    double mx = 0.0;
    for (size_t l = 0; l < n; ++l) {
      const size_t i = b * n + l;
      mag[l] = magnitude(logits.re[i], logits.im[i]);
      mx = std::max(mx, mag[l]);
    }
    double sum = 0.0;
    for (size_t l = 0; l < n; ++l) {
      probs[b * n + l] = std::exp(mag[l] - mx);
      sum += probs[b * n + l];
    }
    for (size_t l = 0; l < n; ++l) probs[b * n + l] /= sum;
  }
  return probs;
}

double cross_entropy(const std::vector<double>& pred,
                     const std::vector<double>& onehot, size_t batch,
                     size_t num_classes) {
  double total = 0.0;
  for (size_t b = 0; b < batch; ++b) {
    for (size_t l = 0; l < num_classes; ++l) {
      const size_t i = b * num_classes + l;
      if (onehot[i] != 0.0) {
        total -= onehot[i] * std::log(std::max(pred[i], kLogFloor));
      }
    }
  }
  return total / static_cast<double>(batch);
}

double magnitude_softmax_ce(const ComplexTensor& logits,
                            const std::vector<int>& labels,
                            ComplexTensor* d_logits,
                            std::vector<double>* probs_out) {
  const size_t batch = logits.dim(0), n = logits.dim(1);
  if (labels.size() != batch) throw std::invalid_argument("shape error: labels size");
  std::vector<double> probs = magnitude_softmax(logits);

  double loss = 0.0;
  for (size_t b = 0; b < batch; ++b) {
    const int label = labels[b];
    if (label < 1 || static_cast<size_t>(label) > n) {
      throw std::invalid_argument("label out of range");
    }
    loss -= std::log(std::max(probs[b * n + (label - 1)], kLogFloor));
  }
  loss /= static_cast<double>(batch);

  if (d_logits) {
    *d_logits = ComplexTensor(logits.shape);
    const double inv_b = 1.0 / static_cast<double>(batch);
    for (size_t b = 0; b < batch; ++b) {
      for (size_t l = 0; l < n; ++l) {
        const size_t i = b * n + l;
        const double d_mag =
            (probs[i] - (static_cast<size_t>(labels[b] - 1) == l ? 1.0 : 0.0)) * inv_b;
        const double mag = std::max(magnitude(logits.re[i], logits.im[i]), kMagnitudeFloor);
        d_logits->re[i] = d_mag * logits.re[i] / mag;
        d_logits->im[i] = d_mag * logits.im[i] / mag;
      }
    }
  }
  if (probs_out) *probs_out = std::move(probs);
  return loss;
}

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

void glorot_init(Param& p, size_t fan_in, size_t fan_out, rng::Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  if (!p.real_only) limit /= std::sqrt(2.0);
  for (size_t i = 0; i < p.value.numel(); ++i) {
    p.value.re[i] = rng.uniform(-limit, limit);
    if (!p.real_only) p.value.im[i] = rng.uniform(-limit, limit);
  }
}

Conv3dLayer::Conv3dLayer(std::string name, size_t kernel, size_t c_in, size_t c_out)
    : w(name + ".weight", {kernel, kernel, kernel, c_in, c_out}),
      b(name + ".bias", {c_out}),
      kernel_(kernel),
      c_in_(c_in),
      c_out_(c_out) {}

void Conv3dLayer::init(rng::Rng& rng) {
  const size_t k3 = kernel_ * kernel_ * kernel_;
  glorot_init(w, k3 * c_in_, k3 * c_out_, rng);
  // biases start at zero
}

ComplexTensor Conv3dLayer::forward(ComplexTensor x) {
  ComplexTensor y = conv_forward(x, w.value, b.value);
  x_cache_ = std::move(x);
  return y;
}

ComplexTensor Conv3dLayer::backward(const ComplexTensor& g_out) {
  ComplexTensor gx;
  if (need_input_grad) gx = ComplexTensor(x_cache_.shape);
  conv_backward(x_cache_, w.value, g_out, &w.grad, &b.grad,
                need_input_grad ? &gx : nullptr);
  return gx;
}

ComplexTensor CReluLayer::forward(ComplexTensor x) {
  shape_ = x.shape;
  pass_re_.resize(x.numel());
  pass_im_.resize(x.numel());
  for (size_t i = 0; i < x.numel(); ++i) {
    pass_re_[i] = x.re[i] > 0.0;
    pass_im_[i] = x.im[i] > 0.0;
    if (!pass_re_[i]) x.re[i] = 0.0;
    if (!pass_im_[i]) x.im[i] = 0.0;
  }
  return x;
}

ComplexTensor CReluLayer::backward(const ComplexTensor& g_out) const {
  ComplexTensor gx(shape_);
  for (size_t i = 0; i < gx.numel(); ++i) {
    gx.re[i] = pass_re_[i] ? g_out.re[i] : 0.0;
    gx.im[i] = pass_im_[i] ? g_out.im[i] : 0.0;
  }
  return gx;
}

SeBlock::SeBlock(std::string name, size_t channels, size_t reduction)
    : w1(name + ".w1", {channels / reduction, channels}, /*real=*/true),
      w2(name + ".w2", {channels, channels / reduction}, /*real=*/true),
      channels_(channels),
      reduction_(reduction) {
  if (reduction == 0 || channels % reduction != 0) {
    throw std::invalid_argument("bad reduction");
  }
}

void SeBlock::init(rng::Rng& rng) {
  glorot_init(w1, channels_, channels_ / reduction_, rng);
  glorot_init(w2, channels_ / reduction_, channels_, rng);
}

ComplexTensor SeBlock::forward(ComplexTensor u_in) {
  u_cache_ = std::move(u_in);
  const ComplexTensor& u = u_cache_;
  const size_t rank = u.rank();
  if (u.dim(rank - 1) != channels_) throw std::invalid_argument("shape error: SE channels");
  batch_ = u.dim(0);
  spatial_ = u.numel() / (batch_ * channels_);
  const size_t c = channels_, cr = channels_ / reduction_;

  // squeeze: mean channel magnitude over all spatial positions
  z_.assign(batch_ * c, 0.0);
  for (size_t b = 0; b < batch_; ++b) {
    for (size_t p = 0; p < spatial_; ++p) {
      const size_t base = (b * spatial_ + p) * c;
      for (size_t ch = 0; ch < c; ++ch) {
        z_[b * c + ch] += magnitude(u.re[base + ch], u.im[base + ch]);
      }
    }
    for (size_t ch = 0; ch < c; ++ch) z_[b * c + ch] /= static_cast<double>(spatial_);
  }

  // excitation: s = sigmoid(w2 relu(w1 z))
  h_.assign(batch_ * cr, 0.0);
  s_.assign(batch_ * c, 0.0);
  for (size_t b = 0; b < batch_; ++b) {
    for (size_t j = 0; j < cr; ++j) {
      double acc = 0.0;
      for (size_t ch = 0; ch < c; ++ch) acc += w1.value.re[j * c + ch] * z_[b * c + ch];
      h_[b * cr + j] = acc > 0.0 ? acc : 0.0;
    }
    for (size_t ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (size_t j = 0; j < cr; ++j) acc += w2.value.re[ch * cr + j] * h_[b * cr + j];
      s_[b * c + ch] = sigmoid(acc);
    }
  }

  ComplexTensor y(u.shape);
  for (size_t b = 0; b < batch_; ++b) {
    for (size_t p = 0; p < spatial_; ++p) {
      const size_t base = (b * spatial_ + p) * c;
      for (size_t ch = 0; ch < c; ++ch) {
        y.re[base + ch] = s_[b * c + ch] * u.re[base + ch];
        y.im[base + ch] = s_[b * c + ch] * u.im[base + ch];
      }
    }
  }
  return y;
}

ComplexTensor SeBlock::backward(const ComplexTensor& g_out) {
  const size_t c = channels_, cr = channels_ / reduction_;
  const ComplexTensor& u = u_cache_;
  ComplexTensor gu(u.shape);

  std::vector<double> ds(c), da(c), dh(cr), dz(c);
  for (size_t b = 0; b < batch_; ++b) {
    // through the gate product
    std::fill(ds.begin(), ds.end(), 0.0);
    for (size_t p = 0; p < spatial_; ++p) {
      const size_t base = (b * spatial_ + p) * c;
      for (size_t ch = 0; ch < c; ++ch) {
        ds[ch] += g_out.re[base + ch] * u.re[base + ch] +
                  g_out.im[base + ch] * u.im[base + ch];
      }
    }
    // sigmoid, w2, relu, w1
    for (size_t ch = 0; ch < c; ++ch) {
      const double s = s_[b * c + ch];
      da[ch] = ds[ch] * s * (1.0 - s);
    }
    for (size_t j = 0; j < cr; ++j) {
      double acc = 0.0;
      for (size_t ch = 0; ch < c; ++ch) {
        acc += da[ch] * w2.value.re[ch * cr + j];
        w2.grad.re[ch * cr + j] += da[ch] * h_[b * cr + j];
      }
      dh[j] = h_[b * cr + j] > 0.0 ? acc : 0.0;
    }
    for (size_t ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (size_t j = 0; j < cr; ++j) {
        acc += dh[j] * w1.value.re[j * c + ch];
        w1.grad.re[j * c + ch] += dh[j] * z_[b * c + ch];
      }
      dz[ch] = acc;
    }
    // direct path plus the squeeze path through |u|
    const double inv_spatial = 1.0 / static_cast<double>(spatial_);
    for (size_t p = 0; p < spatial_; ++p) {
      const size_t base = (b * spatial_ + p) * c;
      for (size_t ch = 0; ch < c; ++ch) {
        const size_t i = base + ch;
        const double s = s_[b * c + ch];
        const double mag = std::max(magnitude(u.re[i], u.im[i]), kMagnitudeFloor);
        const double k = dz[ch] * inv_spatial / mag;
        gu.re[i] = s * g_out.re[i] + k * u.re[i];
        gu.im[i] = s * g_out.im[i] + k * u.im[i];
      }
    }
  }
  return gu;
}

DenseLayer::DenseLayer(std::string name, size_t fan_in, size_t fan_out)
    : w(name + ".weight", {fan_in, fan_out}),
      b(name + ".bias", {fan_out}),
      fan_in_(fan_in),
      fan_out_(fan_out) {}

void DenseLayer::init(rng::Rng& rng) { glorot_init(w, fan_in_, fan_out_, rng); }

ComplexTensor DenseLayer::forward(ComplexTensor x) {
  ComplexTensor y = dense(x, w.value, b.value);
  x_cache_ = std::move(x);
  return y;
}

ComplexTensor DenseLayer::backward(const ComplexTensor& g_out) {
  const size_t batch = x_cache_.dim(0);
  // dW += x^H g
  linalg::cgemm(linalg::Op::kHerm, linalg::Op::kNone, fan_in_, fan_out_, batch,
                x_cache_.re.data(), x_cache_.im.data(), g_out.re.data(),
                g_out.im.data(), 1.0, w.grad.re.data(), w.grad.im.data());
  for (size_t bi = 0; bi < batch; ++bi) {
    for (size_t o = 0; o < fan_out_; ++o) {
      b.grad.re[o] += g_out.re[bi * fan_out_ + o];
      b.grad.im[o] += g_out.im[bi * fan_out_ + o];
    }
  }
  ComplexTensor gx({batch, fan_in_});
  // dx = g W^H
  linalg::cgemm(linalg::Op::kNone, linalg::Op::kHerm, batch, fan_in_, fan_out_,
                g_out.re.data(), g_out.im.data(), w.value.re.data(),
                w.value.im.data(), 0.0, gx.re.data(), gx.im.data());
  return gx;
}

ComplexTensor DropoutLayer::forward(ComplexTensor x, bool training,
                                    rng::Rng* rng) {
  if (!training || rate_ == 0.0 || rng == nullptr) {
    identity_ = true;
    return x;
  }
  identity_ = false;
  mask_.resize(x.numel());
  const double scale = 1.0 / (1.0 - rate_);
  for (size_t i = 0; i < x.numel(); ++i) {
    mask_[i] = rng->uniform() >= rate_ ? scale : 0.0;
    x.re[i] *= mask_[i];
    x.im[i] *= mask_[i];
  }
  return x;
}

ComplexTensor DropoutLayer::backward(const ComplexTensor& g_out) const {
  if (identity_) return g_out;
  ComplexTensor gx(g_out.shape);
  for (size_t i = 0; i < gx.numel(); ++i) {
    gx.re[i] = g_out.re[i] * mask_[i];
    gx.im[i] = g_out.im[i] * mask_[i];
  }
  return gx;
}

}  // namespace sdf2net
