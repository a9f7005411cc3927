#include "sscr/render.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace sscr {
namespace {

constexpr double kTau = 1.5;  // squared-distance confidence threshold

const std::array<std::array<double, 3>, kNumColors> kPalette = {{
    {0.50, 0.50, 0.50},  // gray
    {0.90, 0.05, 0.05},  // red
    {0.05, 0.10, 0.90},  // blue
    {0.05, 0.80, 0.10},  // green
    {0.60, 0.35, 0.10},  // brown
    {0.55, 0.05, 0.85},  // purple
    {0.05, 0.85, 0.85},  // cyan
    {0.95, 0.90, 0.10},  // yellow
}};

constexpr std::array<double, 3> kBackground = {0.05, 0.05, 0.12};

// 4x4 occupancy masks, row-major. Three clearly distinct silhouettes.
bool glyph_mask(Shape3 shape, int r, int c) {
  switch (shape) {
    case Shape3::Cube:
      return r >= 1 && r <= 2 && c >= 1 && c <= 2;
    case Shape3::Sphere:  // disc: everything but the corners
      return !((r == 0 || r == 3) && (c == 0 || c == 3));
    case Shape3::Cylinder:  // tall bar
      return c >= 1 && c <= 2;
  }
  return false;
}

using Patch = std::array<double, kCellPixels * kCellPixels * 3>;

Patch make_template(const ObjectSpec* spec) {
  Patch p{};
  for (int r = 0; r < kCellPixels; ++r) {
    for (int c = 0; c < kCellPixels; ++c) {
      const bool on = spec != nullptr && glyph_mask(spec->shape, r, c);
      const auto& rgb = on ? kPalette[static_cast<size_t>(spec->color)] : kBackground;
      for (int ch = 0; ch < 3; ++ch) p[static_cast<size_t>((r * kCellPixels + c) * 3 + ch)] = rgb[static_cast<size_t>(ch)];
    }
  }
  return p;
}

const std::vector<Patch>& spec_templates() {
  static const std::vector<Patch> t = [] {
    std::vector<Patch> out;
    out.reserve(kNumObjectSpecs);
    for (int i = 0; i < kNumObjectSpecs; ++i) {
      ObjectSpec s = ObjectSpec::from_index(i);
      out.push_back(make_template(&s));
    }
    return out;
  }();
  return t;
}

const Patch& background_template() {
  static const Patch t = make_template(nullptr);
  return t;
}

Patch cell_patch(const Image& image, int cx, int cy) {
  Patch p{};
  for (int r = 0; r < kCellPixels; ++r) {
    for (int c = 0; c < kCellPixels; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        p[static_cast<size_t>((r * kCellPixels + c) * 3 + ch)] =
            image.at(cy * kCellPixels + r, cx * kCellPixels + c, ch);
      }
    }
  }
  return p;
}

double sq_dist(const Patch& a, const Patch& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

uint8_t to_byte(double v) {
  const double clamped = std::min(1.0, std::max(0.0, v));
  return static_cast<uint8_t>(clamped * 255.0 + 0.5);
}

void put_be32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void append_chunk(std::vector<uint8_t>& out, const char* type, const std::vector<uint8_t>& data) {
  put_be32(out, static_cast<uint32_t>(data.size()));
  const size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_be32(out, static_cast<uint32_t>(crc));
}

std::vector<uint8_t> encode_png(int width, int height, const std::vector<uint8_t>& rgb8) {
  std::vector<uint8_t> raw;
  raw.reserve(static_cast<size_t>(height) * (1 + static_cast<size_t>(width) * 3));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);  // filter type: none
    const size_t row = static_cast<size_t>(y) * static_cast<size_t>(width) * 3;
    raw.insert(raw.end(), rgb8.begin() + static_cast<long>(row),
               rgb8.begin() + static_cast<long>(row + static_cast<size_t>(width) * 3));
  }

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK) {
    throw std::runtime_error("png: zlib compression failed");
  }
  compressed.resize(bound);

  std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<uint8_t> ihdr;
  put_be32(ihdr, static_cast<uint32_t>(width));
  put_be32(ihdr, static_cast<uint32_t>(height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // color type: truecolor
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter
  ihdr.push_back(0);  // interlace
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", compressed);
  append_chunk(out, "IEND", {});
  return out;
}

std::vector<uint8_t> scaled_rgb8(const Image& image, int scale, int* width, int* height) {
  const int side = kImageSize * scale;
  *width = side;
  *height = side;
  std::vector<uint8_t> rgb8(static_cast<size_t>(side) * static_cast<size_t>(side) * 3);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      for (int c = 0; c < 3; ++c) {
        rgb8[static_cast<size_t>((y * side + x) * 3 + c)] = to_byte(image.at(y / scale, x / scale, c));
      }
    }
  }
  return rgb8;
}

void write_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

std::array<double, 3> color_rgb(Color c) { return kPalette[static_cast<size_t>(c)]; }
std::array<double, 3> background_rgb() { return kBackground; }
double detect_confidence_threshold() { return kTau; }

Image render(const Scene& scene) {
  scene.check_valid();
  Image image;
  for (int y = 0; y < kImageSize; ++y) {
    for (int x = 0; x < kImageSize; ++x) {
      for (int c = 0; c < 3; ++c) image.at(y, x, c) = kBackground[static_cast<size_t>(c)];
    }
  }
  for (const Placement& p : scene.placements) {
    const auto& rgb = kPalette[static_cast<size_t>(p.spec.color)];
    for (int r = 0; r < kCellPixels; ++r) {
      for (int c = 0; c < kCellPixels; ++c) {
        if (!glyph_mask(p.spec.shape, r, c)) continue;
        for (int ch = 0; ch < 3; ++ch) {
          image.at(p.y * kCellPixels + r, p.x * kCellPixels + c, ch) = rgb[static_cast<size_t>(ch)];
        }
      }
    }
  }
  return image;
}

Scene detect(const Image& image) {
  struct Hit {
    double dist = std::numeric_limits<double>::infinity();
    int x = 0;
    int y = 0;
  };
  std::array<Hit, kNumObjectSpecs> best{};

  for (int cy = 0; cy < kGridSize; ++cy) {
    for (int cx = 0; cx < kGridSize; ++cx) {
      const Patch patch = cell_patch(image, cx, cy);
      const double bg_dist = sq_dist(patch, background_template());
      int arg = -1;
      double min_dist = bg_dist;
      for (int i = 0; i < kNumObjectSpecs; ++i) {
        const double d = sq_dist(patch, spec_templates()[static_cast<size_t>(i)]);
        if (d < min_dist) {
          min_dist = d;
          arg = i;
        }
      }
      if (arg < 0 || min_dist > kTau) continue;
      Hit& h = best[static_cast<size_t>(arg)];
      if (min_dist < h.dist) h = {min_dist, cx, cy};
    }
  }

  Scene scene;
  for (int cy = 0; cy < kGridSize; ++cy) {
    for (int cx = 0; cx < kGridSize; ++cx) {
      for (int i = 0; i < kNumObjectSpecs; ++i) {
        const Hit& h = best[static_cast<size_t>(i)];
        if (h.dist <= kTau && h.x == cx && h.y == cy) {
          scene.placements.push_back({ObjectSpec::from_index(i), cx, cy});
        }
      }
    }
  }
  return scene;
}

Tensor image_to_tensor(const Image& image) {
  return Tensor::constant({kImageSize, kImageSize, kImageChannels}, image.rgb);
}

Image tensor_to_image(const Tensor& t) {
  const auto& vals = t.values();
  if (vals.size() != static_cast<size_t>(kImageNumel)) {
    throw std::invalid_argument("tensor_to_image: expected " + std::to_string(kImageNumel) +
                                " values, got " + std::to_string(vals.size()));
  }
  Image image;
  for (size_t i = 0; i < vals.size(); ++i) {
    image.rgb[i] = std::min(1.0, std::max(0.0, vals[i]));
  }
  return image;
}

void write_ppm(const Image& image, const std::string& path, int scale) {
  int w = 0;
  int h = 0;
  const std::vector<uint8_t> rgb8 = scaled_rgb8(image, scale, &w, &h);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "P6\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb8.data()), static_cast<std::streamsize>(rgb8.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_png(const Image& image, const std::string& path, int scale) {
  int w = 0;
  int h = 0;
  const std::vector<uint8_t> rgb8 = scaled_rgb8(image, scale, &w, &h);
  write_bytes(path, encode_png(w, h, rgb8));
}

void write_png_grid(const std::vector<std::vector<Image>>& rows, const std::string& path, int scale) {
  if (rows.empty()) throw std::invalid_argument("write_png_grid: no rows");
  size_t cols = 0;
  for (const auto& row : rows) cols = std::max(cols, row.size());
  if (cols == 0) throw std::invalid_argument("write_png_grid: no images");

  const int gutter = 2;
  const int tile = kImageSize * scale;
  const int width = static_cast<int>(cols) * tile + (static_cast<int>(cols) - 1) * gutter;
  const int height = static_cast<int>(rows.size()) * tile + (static_cast<int>(rows.size()) - 1) * gutter;
  std::vector<uint8_t> rgb8(static_cast<size_t>(width) * static_cast<size_t>(height) * 3, 255);

  for (size_t ry = 0; ry < rows.size(); ++ry) {
    for (size_t rx = 0; rx < rows[ry].size(); ++rx) {
      int tw = 0;
      int th = 0;
      const std::vector<uint8_t> tile_rgb = scaled_rgb8(rows[ry][rx], scale, &tw, &th);
      const int ox = static_cast<int>(rx) * (tile + gutter);
      const int oy = static_cast<int>(ry) * (tile + gutter);
      for (int y = 0; y < th; ++y) {
        for (int x = 0; x < tw; ++x) {
          for (int c = 0; c < 3; ++c) {
            rgb8[static_cast<size_t>(((oy + y) * width + ox + x) * 3 + c)] =
                tile_rgb[static_cast<size_t>((y * tw + x) * 3 + c)];
          }
        }
      }
    }
  }
  write_bytes(path, encode_png(width, height, rgb8));
}

}  // namespace sscr
