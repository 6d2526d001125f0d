#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "sdf2net/image.hpp"

namespace sdf2net {

/// Scattering model of one land-cover class: the 3x3 Hermitian
/// positive-definite covariance of the Pauli vector, and the number of looks
/// averaged into each coherency sample.
struct ClassModel {
  std::array<std::complex<double>, 9> sigma;  // row-major 3x3
  int looks = 4;

  static ClassModel diagonal(double p1, double p2, double p3, int looks = 4);
};

/// Throws unless sigma is Hermitian (to 1e-12) and positive definite and
/// looks >= 3.
void validate_class_model(const ClassModel& model);

enum class SceneLayout { kStripes, kCheckerboard };

/// One multi-look coherency draw: looks i.i.d. circular complex Gaussian
/// Pauli vectors k_j with covariance sigma (Cholesky factor times a standard
/// complex normal), averaged as (1/n) sum k_j k_j^H. Returns the upper
/// triangle in channel order (T11, T12, T13, T22, T23, T33); diagonal
/// entries are exactly real by construction.
std::array<std::complex<double>, 6> sample_coherency(const ClassModel& model,
                                                     uint64_t seed);

/// Known-structure synthetic scene: the label map follows the layout
/// (equal-width vertical stripes, or square tiles of side max(8, width/8))
/// and every pixel's coherency is drawn from its class model with a seed
/// derived from the pixel index.
std::pair<CoherencyImage, LabelMap> generate_scene(
    const std::vector<ClassModel>& classes, SceneLayout layout, size_t height,
    size_t width, uint64_t seed);

/// K class models with well-separated covariances (the scattering power
/// rotates across the Pauli components, with a mild off-diagonal coherence
/// added beyond the first three classes).
std::vector<ClassModel> make_separated_class_models(size_t count, int looks = 4);

}  // namespace sdf2net
