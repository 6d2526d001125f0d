#include "sdf2net/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sdf2net::io {

namespace fs = std::filesystem;

namespace {

// ------------------------- little-endian primitives -------------------------

template <class T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(const std::string& data, size_t& pos) {
  if (pos + sizeof(T) > data.size()) throw std::runtime_error("truncated file");
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, data.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  pos += sizeof(T);
  return value;
}

std::string read_file(const fs::path& path, const char* missing_error) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error(std::string(missing_error) + ": " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return std::move(ss).str();
}

void write_file(const fs::path& path, const std::string& data) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write file: " + path.string());
  os.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

// ------------------------------- T3 support --------------------------------

// config.txt: a "Nrow"/"Ncol" key either followed by the value on the same
// line or on the next line (the PolSARpro layout); unknown lines are ignored.
void parse_t3_config(const std::string& text, size_t* rows, size_t* cols) {
  std::istringstream is(text);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    lines.push_back(line);
  }
  const auto parse_value = [&](size_t i, const std::string& key) -> long long {
    std::string rest = lines[i].substr(key.size());
    size_t j = i;
    while (true) {
      size_t p = 0;
      while (p < rest.size() && (std::isspace(static_cast<unsigned char>(rest[p])) || rest[p] == '=')) ++p;
      if (p < rest.size() && std::isdigit(static_cast<unsigned char>(rest[p]))) {
        return std::stoll(rest.substr(p));
      }
      if (++j >= lines.size()) break;
      rest = lines[j];
    }
    return -1;
  };
  long long nrow = -1, ncol = -1;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].rfind("Nrow", 0) == 0 && nrow < 0) nrow = parse_value(i, "Nrow");
    if (lines[i].rfind("Ncol", 0) == 0 && ncol < 0) ncol = parse_value(i, "Ncol");
  }
  if (nrow <= 0 || ncol <= 0) throw std::runtime_error("bad header");
  *rows = static_cast<size_t>(nrow);
  *cols = static_cast<size_t>(ncol);
}

std::vector<double> read_f32_plane(const fs::path& path, size_t count) {
  const std::string data = read_file(path, "incomplete T3 directory");
  if (data.size() != count * 4) {
    throw std::runtime_error("shape mismatch: " + path.filename().string());
  }
  std::vector<double> out(count);
  size_t pos = 0;
  for (size_t i = 0; i < count; ++i) {
    out[i] = static_cast<double>(get_le<float>(data, pos));
  }
  return out;
}

void write_f32_plane(const fs::path& path, const double* values, size_t count) {
  std::string data;
  data.reserve(count * 4);
  for (size_t i = 0; i < count; ++i) put_le(data, static_cast<float>(values[i]));
  write_file(path, data);
}

struct T3File {
  const char* name;
  size_t channel;
  bool imag;
};

constexpr T3File kT3Files[] = {
    {"T11.bin", kT11, false},      {"T22.bin", kT22, false},
    {"T33.bin", kT33, false},      {"T12_real.bin", kT12, false},
    {"T12_imag.bin", kT12, true},  {"T13_real.bin", kT13, false},
    {"T13_imag.bin", kT13, true},  {"T23_real.bin", kT23, false},
    {"T23_imag.bin", kT23, true},
};

// ------------------------------ PPM support --------------------------------

void write_ppm(const fs::path& path, size_t height, size_t width,
               const std::vector<uint8_t>& rgb) {
  std::string data = "P6\n" + std::to_string(width) + " " +
                     std::to_string(height) + "\n255\n";
  data.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
  write_file(path, data);
}

// 99th percentile as the ceil(0.99*n)-th smallest value (1-based), so 99 of
// {1..100} maps to full brightness.
double percentile99(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  const size_t k = static_cast<size_t>(
      std::ceil(0.99 * static_cast<double>(n)));
  return values[std::max<size_t>(k, 1) - 1];
}

}  // namespace

// ----------------------------------------------------------------------------
// T3 directories
// ----------------------------------------------------------------------------

CoherencyImage read_t3_directory(const fs::path& dir) {
  const std::string config = read_file(dir / "config.txt", "incomplete T3 directory");
  size_t rows = 0, cols = 0;
  parse_t3_config(config, &rows, &cols);

  CoherencyImage image(rows, cols);
  const size_t n = rows * cols;
  for (const T3File& f : kT3Files) {
    std::vector<double> plane = read_f32_plane(dir / f.name, n);
    double* dst = f.imag ? image.plane_im(f.channel) : image.plane_re(f.channel);
    std::memcpy(dst, plane.data(), n * sizeof(double));
  }

  // Diagonal powers: imaginary parts have no file (they stay zero); float
  // noise up to 1e-6 of the plane max clamps to zero, anything worse is data
  // corruption.
  for (size_t ch : {kT11, kT22, kT33}) {
    double* re = image.plane_re(ch);
    double max_abs = 0.0;
    for (size_t i = 0; i < n; ++i) max_abs = std::max(max_abs, std::abs(re[i]));
    const double floor = -1e-6 * max_abs;
    for (size_t i = 0; i < n; ++i) {
      if (re[i] < floor) {
        throw std::runtime_error(std::string("coherency invariant violation: ") +
                                 kChannelNames[ch] + " < 0");
      }
      if (re[i] < 0.0) re[i] = 0.0;
    }
  }
  validate_coherency(image);
  return image;
}

void write_t3_directory(const CoherencyImage& image, const fs::path& dir) {
  validate_coherency(image);
  fs::create_directories(dir);

  std::ostringstream config;
  config << "Nrow\n" << image.height << "\n---------\n";
  config << "Ncol\n" << image.width << "\n---------\n";
  config << "PolarCase\nmonostatic\n---------\nPolarType\nfull\n";
  write_file(dir / "config.txt", config.str());

  const size_t n = image.pixel_count();
  for (const T3File& f : kT3Files) {
    const double* src = f.imag ? image.plane_im(f.channel) : image.plane_re(f.channel);
    write_f32_plane(dir / f.name, src, n);
  }
}

// ----------------------------------------------------------------------------
// Label maps
// ----------------------------------------------------------------------------

LabelMap read_label_map(const fs::path& path) {
  const std::string data = read_file(path, "cannot open label map");
  const size_t nl = data.find('\n');
  if (nl == std::string::npos) throw std::runtime_error("bad header");
  std::istringstream header(data.substr(0, nl));
  std::string magic;
  int version = 0;
  long long height = 0, width = 0, classes = 0;
  header >> magic >> version >> height >> width >> classes;
  if (!header || magic != "PLBL" || version != 1 || height <= 0 || width <= 0 ||
      classes < 0 || classes > 65535) {
    throw std::runtime_error("bad header");
  }

  LabelMap map(static_cast<size_t>(height), static_cast<size_t>(width),
               static_cast<uint16_t>(classes));
  const size_t n = map.pixel_count();
  if (data.size() - (nl + 1) != n * 2) throw std::runtime_error("shape mismatch");
  size_t pos = nl + 1;
  for (size_t i = 0; i < n; ++i) {
    map.labels[i] = get_le<uint16_t>(data, pos);
    if (map.labels[i] > map.num_classes) throw std::runtime_error("label out of range");
  }
  return map;
}

void write_label_map(const LabelMap& map, const fs::path& path) {
  validate_labels(map);
  std::string data = "PLBL 1 " + std::to_string(map.height) + " " +
                     std::to_string(map.width) + " " +
                     std::to_string(map.num_classes) + "\n";
  data.reserve(data.size() + map.labels.size() * 2);
  for (uint16_t v : map.labels) put_le(data, v);
  write_file(path, data);
}

// ----------------------------------------------------------------------------
// Checkpoints
// ----------------------------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[4] = {'C', 'V', 'P', 'S'};
constexpr uint32_t kCheckpointVersion = 1;

void put_plane(std::string& out, const std::vector<double>& plane) {
  for (double v : plane) put_le(out, v);
}

void get_plane(const std::string& data, size_t& pos, std::vector<double>& plane) {
  for (double& v : plane) v = get_le<double>(data, pos);
}

}  // namespace

void save_checkpoint(const Network& net, const fs::path& path) {
  std::string out;
  out.append(kCheckpointMagic, 4);
  put_le(out, kCheckpointVersion);

  const std::string config = net.config().to_text();
  put_le(out, static_cast<uint64_t>(config.size()));
  out += config;
  put_le(out, net.best_val_loss);
  put_le(out, net.adam_step_count);

  const std::vector<const Param*> params = net.params();
  put_le(out, static_cast<uint64_t>(params.size()));
  for (const Param* p : params) {
    put_le(out, static_cast<uint64_t>(p->name.size()));
    out += p->name;
    put_le(out, static_cast<uint8_t>(p->real_only ? 1 : 0));
    put_le(out, static_cast<uint64_t>(p->value.rank()));
    for (size_t d : p->value.shape) put_le(out, static_cast<uint64_t>(d));
    put_plane(out, p->value.re);
    put_plane(out, p->value.im);
    put_plane(out, p->m.re);
    put_plane(out, p->m.im);
    put_plane(out, p->v.re);
    put_plane(out, p->v.im);
  }
  write_file(path, out);
}

std::unique_ptr<Network> load_checkpoint(const fs::path& path) {
  const std::string data = read_file(path, "cannot open checkpoint");
  if (data.size() < 8 || std::memcmp(data.data(), kCheckpointMagic, 4) != 0) {
    throw std::runtime_error("not a checkpoint");
  }
  size_t pos = 4;
  const uint32_t version = get_le<uint32_t>(data, pos);
  if (version > kCheckpointVersion) throw std::runtime_error("unsupported version");

  const uint64_t config_len = get_le<uint64_t>(data, pos);
  if (pos + config_len > data.size()) throw std::runtime_error("truncated file");
  const ModelConfig config = ModelConfig::from_text(data.substr(pos, config_len));
  pos += config_len;

  auto net = std::make_unique<Network>(config, /*init_seed=*/0);
  net->best_val_loss = get_le<double>(data, pos);
  net->adam_step_count = get_le<uint64_t>(data, pos);

  const uint64_t n_params = get_le<uint64_t>(data, pos);
  std::vector<Param*> params = net->params();
  if (n_params != params.size()) {
    throw std::runtime_error("checkpoint does not match the model layer graph");
  }
  for (Param* p : params) {
    const uint64_t name_len = get_le<uint64_t>(data, pos);
    if (pos + name_len > data.size()) throw std::runtime_error("truncated file");
    const std::string name = data.substr(pos, name_len);
    pos += name_len;
    const bool real_only = get_le<uint8_t>(data, pos) != 0;
    const uint64_t rank = get_le<uint64_t>(data, pos);
    std::vector<size_t> shape(rank);
    for (size_t i = 0; i < rank; ++i) shape[i] = get_le<uint64_t>(data, pos);
    if (name != p->name || real_only != p->real_only || shape != p->value.shape) {
      throw std::runtime_error("checkpoint does not match the model layer graph");
    }
    get_plane(data, pos, p->value.re);
    get_plane(data, pos, p->value.im);
    get_plane(data, pos, p->m.re);
    get_plane(data, pos, p->m.im);
    get_plane(data, pos, p->v.re);
    get_plane(data, pos, p->v.im);
  }
  if (pos != data.size()) throw std::runtime_error("trailing bytes in checkpoint");
  return net;
}

// ----------------------------------------------------------------------------
// Rendering
// ----------------------------------------------------------------------------

void render_pauli_rgb(const CoherencyImage& image, const fs::path& path) {
  const size_t n = image.pixel_count();
  // R <- T22 (double bounce), G <- T33 (volume), B <- T11 (surface)
  const size_t channel_of[3] = {kT22, kT33, kT11};
  std::vector<uint8_t> rgb(n * 3, 0);
  for (size_t c = 0; c < 3; ++c) {
    const double* plane = image.plane_re(channel_of[c]);
    const double p99 = percentile99(std::vector<double>(plane, plane + n));
    if (p99 <= 0.0) continue;  // degenerate channel renders black
    const double scale = 255.0 / p99;
    for (size_t i = 0; i < n; ++i) {
      const double v = std::clamp(scale * plane[i], 0.0, 255.0);
      rgb[i * 3 + c] = static_cast<uint8_t>(std::lround(v));
    }
  }
  write_ppm(path, image.height, image.width, rgb);
}

std::vector<Rgb> default_palette(size_t num_classes) {
  // hand-picked distinct colors first, then a golden-angle hue walk
  static constexpr Rgb kBase[] = {
      {230, 25, 75},  {60, 180, 75},   {255, 225, 25}, {0, 130, 200},
      {245, 130, 48}, {145, 30, 180},  {70, 240, 240}, {240, 50, 230},
      {210, 245, 60}, {250, 190, 212}, {0, 128, 128},  {220, 190, 255},
      {170, 110, 40}, {255, 250, 200}, {128, 0, 0},    {170, 255, 195},
      {128, 128, 0},  {255, 215, 180}, {0, 0, 128},    {128, 128, 128},
  };
  std::vector<Rgb> palette;
  palette.push_back({0, 0, 0});  // unlabeled
  for (size_t i = 0; i < num_classes; ++i) {
    if (i < std::size(kBase)) {
      palette.push_back(kBase[i]);
      continue;
    }
    const double h = std::fmod(137.50776405003785 * static_cast<double>(i), 360.0) / 60.0;
    const double x = 1.0 - std::abs(std::fmod(h, 2.0) - 1.0);
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(h)) {
      case 0: r = 1; g = x; break;
      case 1: r = x; g = 1; break;
      case 2: g = 1; b = x; break;
      case 3: g = x; b = 1; break;
      case 4: r = x; b = 1; break;
      default: r = 1; b = x; break;
    }
    palette.push_back({static_cast<uint8_t>(80 + 175 * r),
                       static_cast<uint8_t>(80 + 175 * g),
                       static_cast<uint8_t>(80 + 175 * b)});
  }
  return palette;
}

void render_class_map(const LabelMap& map, const std::vector<Rgb>& palette,
                      const fs::path& path) {
  if (palette.size() < static_cast<size_t>(map.num_classes) + 1) {
    throw std::runtime_error("palette/classes mismatch");
  }
  validate_labels(map);
  std::vector<uint8_t> rgb(map.pixel_count() * 3);
  for (size_t i = 0; i < map.pixel_count(); ++i) {
    const Rgb color = palette[map.labels[i]];
    rgb[i * 3] = color.r;
    rgb[i * 3 + 1] = color.g;
    rgb[i * 3 + 2] = color.b;
  }
  write_ppm(path, map.height, map.width, rgb);
}

PpmImage read_ppm(const fs::path& path) {
  const std::string data = read_file(path, "cannot open image");
  std::istringstream header(data);
  std::string magic;
  size_t width = 0, height = 0;
  int maxval = 0;
  header >> magic >> width >> height >> maxval;
  if (magic != "P6" || maxval != 255) throw std::runtime_error("not a P6 image");
  const size_t pos = static_cast<size_t>(header.tellg()) + 1;  // single whitespace
  PpmImage img;
  img.height = height;
  img.width = width;
  if (data.size() - pos != height * width * 3) throw std::runtime_error("truncated image");
  img.rgb.assign(data.begin() + static_cast<ptrdiff_t>(pos), data.end());
  return img;
}

}  // namespace sdf2net::io
