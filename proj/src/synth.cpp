#include "sdf2net/synth.hpp"

#include <cmath>
#include <stdexcept>

#include "sdf2net/rng.hpp"

namespace sdf2net {

namespace {

using Complex = std::complex<double>;

// Lower Cholesky factor of a 3x3 Hermitian matrix; throws when a pivot is
// not strictly positive (not positive definite).
std::array<Complex, 9> cholesky3(const std::array<Complex, 9>& a) {
  std::array<Complex, 9> l{};
  for (size_t i = 0; i < 3; ++i) {
    for (size_t j = 0; j <= i; ++j) {
      Complex sum = a[i * 3 + j];
      for (size_t k = 0; k < j; ++k) sum -= l[i * 3 + k] * std::conj(l[j * 3 + k]);
      if (i == j) {
        const double d = sum.real();
        if (!(d > 0.0)) throw std::runtime_error("covariance not positive definite");
        l[i * 3 + i] = std::sqrt(d);
      } else {
        l[i * 3 + j] = sum / l[j * 3 + j].real();
      }
    }
  }
  return l;
}

}  // namespace

ClassModel ClassModel::diagonal(double p1, double p2, double p3, int looks) {
  ClassModel m;
  m.sigma = {Complex(p1), Complex(0), Complex(0),
             Complex(0), Complex(p2), Complex(0),
             Complex(0), Complex(0), Complex(p3)};
  m.looks = looks;
  return m;
}

void validate_class_model(const ClassModel& model) {
  if (model.looks < 3) throw std::invalid_argument("looks must be >= 3");
  for (size_t i = 0; i < 3; ++i) {
    for (size_t j = 0; j < 3; ++j) {
      const Complex d = model.sigma[i * 3 + j] - std::conj(model.sigma[j * 3 + i]);
      if (std::abs(d) > 1e-12) throw std::invalid_argument("covariance not Hermitian");
    }
  }
  cholesky3(model.sigma);  // throws when not PD
}

std::array<Complex, 6> sample_coherency(const ClassModel& model, uint64_t seed) {
  const std::array<Complex, 9> l = cholesky3(model.sigma);
  rng::Rng rng(seed);

  double t11 = 0.0, t22 = 0.0, t33 = 0.0;
  Complex t12(0), t13(0), t23(0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int look = 0; look < model.looks; ++look) {
    Complex g[3];
    for (Complex& gi : g) {
      const double re = rng.normal(), im = rng.normal();
      gi = Complex(re * inv_sqrt2, im * inv_sqrt2);  // E|g|^2 = 1
    }
    Complex k[3];
    for (size_t i = 0; i < 3; ++i) {
      k[i] = l[i * 3 + 0] * g[0] + l[i * 3 + 1] * g[1] + l[i * 3 + 2] * g[2];
    }
    t11 += std::norm(k[0]);
    t22 += std::norm(k[1]);
    t33 += std::norm(k[2]);
    t12 += k[0] * std::conj(k[1]);
    t13 += k[0] * std::conj(k[2]);
    t23 += k[1] * std::conj(k[2]);
  }
  const double inv_n = 1.0 / static_cast<double>(model.looks);
  return {Complex(t11 * inv_n), t12 * inv_n, t13 * inv_n,
          Complex(t22 * inv_n), t23 * inv_n, Complex(t33 * inv_n)};
}

std::pair<CoherencyImage, LabelMap> generate_scene(
    const std::vector<ClassModel>& classes, SceneLayout layout, size_t height,
    size_t width, uint64_t seed) {
  const size_t k = classes.size();
  if (k < 2) throw std::invalid_argument("need at least 2 classes");
  if (height < k || width < k) throw std::runtime_error("scene too small");
  for (const ClassModel& m : classes) validate_class_model(m);

  LabelMap map(height, width, static_cast<uint16_t>(k));
  const size_t tile = std::max<size_t>(8, width / 8);
  for (size_t r = 0; r < height; ++r) {
    for (size_t c = 0; c < width; ++c) {
      size_t cls;
      if (layout == SceneLayout::kStripes) {
        cls = c * k / width;  // equal-width vertical stripes
      } else {
        cls = (r / tile + c / tile) % k;
      }
      map.set(r, c, static_cast<uint16_t>(cls + 1));
    }
  }

  CoherencyImage image(height, width);
  const uint64_t scene_seed = rng::derive(seed, rng::stream::kScene);
  for (size_t px = 0; px < height * width; ++px) {
    const ClassModel& model = classes[map.labels[px] - 1];
    const std::array<Complex, 6> t =
        sample_coherency(model, rng::derive(scene_seed, px));
    for (size_t ch = 0; ch < kCoherencyChannels; ++ch) {
      image.plane_re(ch)[px] = t[ch].real();
      image.plane_im(ch)[px] = t[ch].imag();
    }
  }
  return {std::move(image), std::move(map)};
}

std::vector<ClassModel> make_separated_class_models(size_t count, int looks) {
  std::vector<ClassModel> models;
  for (size_t i = 0; i < count; ++i) {
    const double strong = 4.0 * (1.0 + 0.25 * static_cast<double>(i / 3));
    const double weak = 0.1;
    double p[3] = {weak, weak, weak};
    p[i % 3] = strong;
    ClassModel m = ClassModel::diagonal(p[0], p[1], p[2], looks);
    if (i >= 3) {
      // distinguish repeats of the same dominant axis by an off-diagonal
      // coherence; |rho| = 0.3 keeps the matrix diagonally dominant
      const double phase = 2.0 * 3.14159265358979323846 * static_cast<double>(i) /
                           static_cast<double>(count);
      const Complex rho = 0.3 * std::sqrt(p[0] * p[1]) *
                          Complex(std::cos(phase), std::sin(phase));
      m.sigma[0 * 3 + 1] = rho;
      m.sigma[1 * 3 + 0] = std::conj(rho);
    }
    validate_class_model(m);
    models.push_back(m);
  }
  return models;
}

}  // namespace sdf2net
