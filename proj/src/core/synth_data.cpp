#include "core/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/common.hpp"
#include "core/rng.hpp"

namespace nlr {

void SynthConfig::validate() const {
  if (format != "mnist" && format != "cifar10")
    throw_config("make-data: format must be 'mnist' or 'cifar10', got '" + format + "'");
  if (count == 0) throw_config("make-data: count must be positive");
}

namespace {

// 5x7 glyphs; rows top to bottom, '1' marks ink.
const char* const kDigitFont[10][7] = {
    {"01110", "10001", "10011", "10101", "11001", "10001", "01110"},
    {"00100", "01100", "00100", "00100", "00100", "00100", "01110"},
    {"01110", "10001", "00001", "00010", "00100", "01000", "11111"},
    {"11111", "00010", "00100", "00010", "00001", "10001", "01110"},
    {"00010", "00110", "01010", "10010", "11111", "00010", "00010"},
    {"11111", "10000", "11110", "00001", "00001", "10001", "01110"},
    {"00110", "01000", "10000", "11110", "10001", "10001", "01110"},
    {"11111", "00001", "00010", "00100", "01000", "01000", "01000"},
    {"01110", "10001", "10001", "01110", "10001", "10001", "01110"},
    {"01110", "10001", "10001", "01111", "00001", "00010", "01100"},
};

unsigned char to_byte(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned char>(std::lround(c * 255.0));
}

// One digit image: scaled/sheared/shifted glyph, box-blurred, noisy.
void render_digit(int digit, RngStream& rng, unsigned char* out /* 28x28 */) {
  const double sx = 2.5 + rng.next_double() * 1.2;   // px per glyph column
  const double sy = 2.2 + rng.next_double() * 1.0;   // px per glyph row
  const double shear = (rng.next_double() - 0.5) * 0.35;
  const double cx = 14.0 + (rng.next_double() - 0.5) * 6.0;
  const double cy = 14.0 + (rng.next_double() - 0.5) * 5.0;
  const double ink = 0.65 + rng.next_double() * 0.35;

  double canvas[28][28] = {};
  for (int y = 0; y < 28; ++y)
    for (int x = 0; x < 28; ++x) {
      const double gy = (y - cy) / sy + 3.5;  // glyph space, 7 rows
      const double gx = (x - cx) / sx - shear * (gy - 3.5) + 2.5;
      const int iy = static_cast<int>(std::floor(gy));
      const int ix = static_cast<int>(std::floor(gx));
      if (iy >= 0 && iy < 7 && ix >= 0 && ix < 5 && kDigitFont[digit][iy][ix] == '1')
        canvas[y][x] = ink;
    }

  // 3x3 box blur softens the glyph edges.
  for (int y = 0; y < 28; ++y)
    for (int x = 0; x < 28; ++x) {
      double s = 0.0;
      int cnt = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy >= 0 && yy < 28 && xx >= 0 && xx < 28) {
            s += canvas[yy][xx];
            ++cnt;
          }
        }
      const double blurred = s / cnt;
      const double noisy = blurred + rng.next_normal(0.0, 0.06);
      out[y * 28 + x] = to_byte(noisy);
    }
}

void write_u32_be(std::ofstream& f, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

std::vector<std::string> write_mnist_like(const SynthConfig& cfg, const std::string& dir) {
  const std::string img_path = dir + "/train-images-idx3-ubyte";
  const std::string lab_path = dir + "/train-labels-idx1-ubyte";
  std::ofstream img(img_path, std::ios::binary);
  std::ofstream lab(lab_path, std::ios::binary);
  if (!img || !lab) throw_io("make-data: cannot write into '" + dir + "'");

  write_u32_be(img, 0x00000803u);
  write_u32_be(img, static_cast<std::uint32_t>(cfg.count));
  write_u32_be(img, 28);
  write_u32_be(img, 28);
  write_u32_be(lab, 0x00000801u);
  write_u32_be(lab, static_cast<std::uint32_t>(cfg.count));

  RngStream root(cfg.seed);
  unsigned char pixels[28 * 28];
  for (std::size_t i = 0; i < cfg.count; ++i) {
    RngStream rng = root.split(i);
    const int digit = static_cast<int>(rng.next_below(10));
    render_digit(digit, rng, pixels);
    img.write(reinterpret_cast<const char*>(pixels), sizeof(pixels));
    const unsigned char l = static_cast<unsigned char>(digit);
    lab.write(reinterpret_cast<const char*>(&l), 1);
  }
  if (!img || !lab) throw_io("make-data: write failed in '" + dir + "'");
  return {img_path, lab_path};
}

// 10 distinguishable pattern classes on a 32x32 canvas.
void render_pattern(int cls, RngStream& rng, unsigned char* out /* 3*32*32 channel-major */) {
  static const double kBaseColor[10][3] = {
      {0.9, 0.2, 0.2}, {0.2, 0.8, 0.3}, {0.25, 0.35, 0.9}, {0.9, 0.85, 0.2}, {0.85, 0.25, 0.8},
      {0.2, 0.8, 0.8}, {0.95, 0.55, 0.15}, {0.55, 0.25, 0.85}, {0.9, 0.9, 0.9}, {0.3, 0.6, 0.5},
  };
  const double cx = 16.0 + (rng.next_double() - 0.5) * 10.0;
  const double cy = 16.0 + (rng.next_double() - 0.5) * 10.0;
  const double r = 7.0 + rng.next_double() * 5.0;
  double color[3], bg[3];
  for (int c = 0; c < 3; ++c) {
    color[c] = std::clamp(kBaseColor[cls][c] + (rng.next_double() - 0.5) * 0.24, 0.0, 1.0);
    bg[c] = rng.next_double() * 0.25;
  }

  auto inside = [&](double x, double y) {
    const double dx = x - cx, dy = y - cy;
    switch (cls) {
      case 0: return dx * dx + dy * dy <= r * r;                            // disc
      case 1: return std::abs(dx) <= r * 0.8 && std::abs(dy) <= r * 0.8;    // square
      case 2: return dy >= -r * 0.7 && std::abs(dx) <= (dy + r * 0.7) * 0.6;  // triangle
      case 3: return std::abs(dx) <= r * 0.28 || std::abs(dy) <= r * 0.28;  // plus (clipped below)
      case 4: return std::fmod(std::abs(y), 6.0) < 3.0;                     // horizontal stripes
      case 5: return std::fmod(std::abs(x), 6.0) < 3.0;                     // vertical stripes
      case 6: return std::abs(dx) + std::abs(dy) <= r;                      // diamond
      case 7: {                                                             // ring
        const double d2 = dx * dx + dy * dy;
        return d2 <= r * r && d2 >= (r * 0.55) * (r * 0.55);
      }
      case 8: return (static_cast<int>(std::floor(x / 4)) + static_cast<int>(std::floor(y / 4))) % 2 == 0;  // checker
      case 9: return std::fmod(std::abs(x), 5.0) < 2.0 && std::fmod(std::abs(y), 5.0) < 2.0;  // dot grid
    }
    return false;
  };
  const bool clipped = (cls == 0 || cls == 1 || cls == 2 || cls == 6 || cls == 7);
  const double clip2 = (r + 2.0) * (r + 2.0);

  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      bool on = inside(x, y);
      if (cls == 3) {
        const double dx = x - cx, dy = y - cy;
        on = on && std::abs(dx) <= r && std::abs(dy) <= r;
      }
      if (clipped) {
        const double dx = x - cx, dy = y - cy;
        if (dx * dx + dy * dy > clip2) on = false;
      }
      for (int c = 0; c < 3; ++c) {
        const double v = (on ? color[c] : bg[c]) + rng.next_normal(0.0, 0.05);
        out[c * 1024 + y * 32 + x] = to_byte(v);
      }
    }
}

std::vector<std::string> write_cifar_like(const SynthConfig& cfg, const std::string& dir) {
  const std::string path = dir + "/data_batch_1.bin";
  std::ofstream f(path, std::ios::binary);
  if (!f) throw_io("make-data: cannot write '" + path + "'");

  RngStream root(cfg.seed);
  unsigned char pixels[3072];
  for (std::size_t i = 0; i < cfg.count; ++i) {
    RngStream rng = root.split(i);
    const int cls = static_cast<int>(rng.next_below(10));
    render_pattern(cls, rng, pixels);
    const unsigned char l = static_cast<unsigned char>(cls);
    f.write(reinterpret_cast<const char*>(&l), 1);
    f.write(reinterpret_cast<const char*>(pixels), sizeof(pixels));
  }
  if (!f) throw_io("make-data: write failed for '" + path + "'");
  return {path};
}

}  // namespace

std::vector<std::string> write_synth_dataset(const SynthConfig& config, const std::string& out_dir) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw_io("make-data: cannot create directory '" + out_dir + "': " + ec.message());
  return config.format == "mnist" ? write_mnist_like(config, out_dir)
                                  : write_cifar_like(config, out_dir);
}

}  // namespace nlr
