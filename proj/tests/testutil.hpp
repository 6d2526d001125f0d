#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "sdf2net/rng.hpp"
#include "sdf2net/synth.hpp"
#include "sdf2net/tensor.hpp"

namespace testutil {

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<uint64_t> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("sdf2net_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

inline sdf2net::ComplexTensor random_tensor(std::vector<size_t> shape,
                                            uint64_t seed, double scale = 1.0) {
  sdf2net::ComplexTensor t(std::move(shape));
  sdf2net::rng::Rng rng(seed);
  for (size_t i = 0; i < t.numel(); ++i) {
    t.re[i] = rng.uniform(-scale, scale);
    t.im[i] = rng.uniform(-scale, scale);
  }
  return t;
}

/// Small random Wishart scene shared by the heavier pipeline tests.
inline std::pair<sdf2net::CoherencyImage, sdf2net::LabelMap> tiny_scene(
    size_t height, size_t width, size_t classes, uint64_t seed,
    sdf2net::SceneLayout layout = sdf2net::SceneLayout::kStripes) {
  const auto models = sdf2net::make_separated_class_models(classes, 4);
  return sdf2net::generate_scene(models, layout, height, width, seed);
}

inline bool file_bytes_equal(const std::filesystem::path& a,
                             const std::filesystem::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  std::string da((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  std::string db((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  return da == db;
}

}  // namespace testutil
