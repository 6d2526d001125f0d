#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdf2net/rng.hpp"
#include "sdf2net/tensor.hpp"

namespace sdf2net {

/// Named trainable tensor with its gradient and Adam moments. A complex
/// parameter is optimized as two independent real coordinate planes;
/// real-only parameters (the SE matrices) keep a zero imaginary plane that
/// never receives gradient and never moves.
struct Param {
  std::string name;
  ComplexTensor value, grad, m, v;
  bool real_only = false;

  Param() = default;
  Param(std::string n, std::vector<size_t> shape, bool real = false)
      : name(std::move(n)),
        value(shape),
        grad(shape),
        m(shape),
        v(std::move(shape)),
        real_only(real) {}

  void zero_grad() { grad.zero(); }

  /// Trainable real coordinates (one plane for real-only, two otherwise).
  size_t coordinate_count() const {
    return value.numel() * (real_only ? 1 : 2);
  }
};

// ---------------------------------------------------------------------------
// Functional ops. These are the building blocks the layer classes wrap; the
// stateless ones are used directly by tests and evaluation code.
// ---------------------------------------------------------------------------

/// Complex 3-D convolution ("same" zero padding, stride 1, cross-correlation
/// orientation). x is [B,H,W,D,Cin], w is [kh,kw,kd,Cin,Cout] with odd kernel
/// dims, bias is [Cout]. Real and imaginary outputs combine the four real
/// convolutions of the complex product:
///   Re(Y) = Re(X)*Re(K) - Im(X)*Im(K) + Re(b)
///   Im(Y) = Re(X)*Im(K) + Im(X)*Re(K) + Im(b)
ComplexTensor complex_conv3d(const ComplexTensor& x, const ComplexTensor& w,
                             const ComplexTensor& bias);

/// ReLU applied to the real and imaginary parts independently.
ComplexTensor crelu(const ComplexTensor& x);

/// Stack inputs along the trailing channel axis; all other dims must match.
ComplexTensor concat_channels(const std::vector<const ComplexTensor*>& xs);

/// y = x W + b with complex multiply-accumulate. x is [B,F], w [F,O], b [O].
ComplexTensor dense(const ComplexTensor& x, const ComplexTensor& w,
                    const ComplexTensor& bias);

/// Inverted dropout. In training mode one Bernoulli(1-rate) draw per complex
/// element zeroes (re, im) together and survivors scale by 1/(1-rate);
/// inference mode is the identity.
ComplexTensor dropout(const ComplexTensor& x, double rate, uint64_t seed,
                      bool training);

/// Row-wise softmax of the complex moduli |z|, stabilized by subtracting the
/// row max. logits is [B,L]; returns row-major B x L probabilities.
std::vector<double> magnitude_softmax(const ComplexTensor& logits);

/// Mean over the batch of -sum_l y_l log(max(p_l, 1e-12)). pred and onehot
/// are row-major B x L.
double cross_entropy(const std::vector<double>& pred,
                     const std::vector<double>& onehot, size_t batch,
                     size_t num_classes);

/// Fused magnitude-softmax + cross-entropy head used by training. labels are
/// 1-based class ids. Fills d_logits (gradients w.r.t. the complex logits,
/// |z| clamped at 1e-12 in the backward) when non-null; returns the loss.
double magnitude_softmax_ce(const ComplexTensor& logits,
                            const std::vector<int>& labels,
                            ComplexTensor* d_logits,
                            std::vector<double>* probs_out = nullptr);

// ---------------------------------------------------------------------------
// Layer classes: forward caches whatever backward needs; backward returns the
// input gradient and accumulates parameter gradients. Gradients follow the
// split real/imaginary convention (independent d/dRe and d/dIm of a real
// scalar loss).
// ---------------------------------------------------------------------------

class Conv3dLayer {
 public:
  Conv3dLayer(std::string name, size_t kernel, size_t c_in, size_t c_out);

  void init(rng::Rng& rng);
  /// Takes the input by value; callers that still need it pass a copy,
  /// chained calls move. The layer keeps it for the backward pass.
  ComplexTensor forward(ComplexTensor x);
  ComplexTensor backward(const ComplexTensor& g_out);

  Param w;  // [k,k,k,Cin,Cout]
  Param b;  // [Cout]
  // The first layer of a branch feeds from the input batch, whose gradient
  // nobody consumes; skipping it saves a third of that layer's backward.
  bool need_input_grad = true;

 private:
  size_t kernel_, c_in_, c_out_;
  ComplexTensor x_cache_;
};

class CReluLayer {
 public:
  ComplexTensor forward(ComplexTensor x);  // in place
  ComplexTensor backward(const ComplexTensor& g_out) const;

 private:
  std::vector<uint8_t> pass_re_, pass_im_;  // 1 where the input was > 0
  std::vector<size_t> shape_;
};

/// Squeeze-and-excitation adapted to complex 3-D features: the squeeze is the
/// mean of the channel magnitude |u| over all spatial positions, yielding a
/// real per-channel descriptor z; the excitation s = sigmoid(W2 relu(W1 z))
/// produces real gates in (0,1) that scale the complex channels.
class SeBlock {
 public:
  SeBlock(std::string name, size_t channels, size_t reduction);

  void init(rng::Rng& rng);
  ComplexTensor forward(ComplexTensor u);
  ComplexTensor backward(const ComplexTensor& g_out);

  Param w1;  // [C/r, C], real
  Param w2;  // [C, C/r], real
  size_t channels() const { return channels_; }
  /// Squeeze vector of the last forward (batch-major, B x C); for tests.
  const std::vector<double>& last_squeeze() const { return z_; }

 private:
  size_t channels_, reduction_;
  ComplexTensor u_cache_;
  std::vector<double> z_, h_, s_;  // B x C, B x C/r, B x C
  size_t batch_ = 0, spatial_ = 0;
};

class DenseLayer {
 public:
  DenseLayer(std::string name, size_t fan_in, size_t fan_out);

  void init(rng::Rng& rng);
  ComplexTensor forward(ComplexTensor x);
  ComplexTensor backward(const ComplexTensor& g_out);

  Param w;  // [F,O]
  Param b;  // [O]

 private:
  size_t fan_in_, fan_out_;
  ComplexTensor x_cache_;
};

class DropoutLayer {
 public:
  explicit DropoutLayer(double rate) : rate_(rate) {}

  ComplexTensor forward(ComplexTensor x, bool training, rng::Rng* rng);  // in place
  ComplexTensor backward(const ComplexTensor& g_out) const;

  double rate() const { return rate_; }

 private:
  double rate_;
  bool identity_ = true;
  std::vector<double> mask_;  // 0 or 1/(1-rate) per complex element
};

/// Gradient of the concat: slice the channel block belonging to input i.
ComplexTensor slice_channels(const ComplexTensor& x, size_t begin, size_t count);

/// Glorot-uniform initialization. Complex tensors draw re and im i.i.d. from
/// U(+-sqrt(6/(fan_in+fan_out))/sqrt(2)) so the complex variance matches the
/// real-valued Glorot rule; real-only tensors use the plain bound.
void glorot_init(Param& p, size_t fan_in, size_t fan_out, rng::Rng& rng);

}  // namespace sdf2net
