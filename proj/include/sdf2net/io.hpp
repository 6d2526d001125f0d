#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "sdf2net/image.hpp"
#include "sdf2net/model.hpp"

namespace sdf2net::io {

// ---------------------------------------------------------------------------
// T3 coherency directories (PolSARpro layout): config.txt declares Nrow/Ncol;
// T11/T22/T33.bin hold one real plane each and the off-diagonal channels are
// split into *_real.bin / *_imag.bin. Every .bin is row-major 32-bit IEEE-754
// little-endian floats. Values are promoted to doubles in memory.
// ---------------------------------------------------------------------------

CoherencyImage read_t3_directory(const std::filesystem::path& dir);
void write_t3_directory(const CoherencyImage& image,
                        const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Label maps: ASCII header "PLBL 1 <height> <width> <num_classes>\n" followed
// by height*width row-major unsigned 16-bit little-endian labels.
// ---------------------------------------------------------------------------

LabelMap read_label_map(const std::filesystem::path& path);
void write_label_map(const LabelMap& map, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Checkpoints: "CVPS" magic, format version, the model config text block,
// best validation loss, Adam step counter, then per-parameter name, shape,
// value planes and Adam moments as little-endian doubles. Round-trips are
// bit-exact.
// ---------------------------------------------------------------------------

void save_checkpoint(const Network& net, const std::filesystem::path& path);
std::unique_ptr<Network> load_checkpoint(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Rendering (binary PPM, 8-bit RGB).
// ---------------------------------------------------------------------------

struct Rgb {
  uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Pauli composite: R <- T22 (double bounce), G <- T33 (volume),
/// B <- T11 (surface), each channel scaled by clamp(255*x/p99, 0, 255) where
/// p99 is that channel's 99th percentile. An all-zero channel renders black.
void render_pauli_rgb(const CoherencyImage& image,
                      const std::filesystem::path& path);

/// Palette with palette[0] the unlabeled color (black) followed by
/// num_classes distinct class colors.
std::vector<Rgb> default_palette(size_t num_classes);

/// pixel color = palette[label]; the palette must cover num_classes + 1
/// entries.
void render_class_map(const LabelMap& map, const std::vector<Rgb>& palette,
                      const std::filesystem::path& path);

struct PpmImage {
  size_t height = 0, width = 0;
  std::vector<uint8_t> rgb;  // 3 bytes per pixel, row-major

  Rgb at(size_t r, size_t c) const {
    const size_t i = (r * width + c) * 3;
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
};

PpmImage read_ppm(const std::filesystem::path& path);

}  // namespace sdf2net::io
