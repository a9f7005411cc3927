#pragma once

#include <array>
#include <string>
#include <vector>

#include "sscr/scene.hpp"
#include "sscr/tensor.hpp"

namespace sscr {

constexpr int kImageSize = 32;                       // pixels per side
constexpr int kCellPixels = kImageSize / kGridSize;  // 4
constexpr int kImageChannels = 3;
constexpr int kImageNumel = kImageSize * kImageSize * kImageChannels;

// P x P x 3 pixels in [0,1], row-major (y, x, channel).
struct Image {
  std::vector<double> rgb = std::vector<double>(kImageNumel, 0.0);

  double& at(int y, int x, int c) { return rgb[static_cast<size_t>((y * kImageSize + x) * 3 + c)]; }
  double at(int y, int x, int c) const {
    return rgb[static_cast<size_t>((y * kImageSize + x) * 3 + c)];
  }
};

std::array<double, 3> color_rgb(Color c);
std::array<double, 3> background_rgb();

// Deterministic rasterization: one glyph per placed object inside its 4x4
// cell (cube = inset square, sphere = disc, cylinder = vertical bar).
Image render(const Scene& scene);

// Exact synthetic detector. Per cell, nearest glyph template wins if it beats
// the background template and clears a confidence threshold; duplicate-spec
// hits collapse to the closest cell. detect(render(s)) == s for all valid s.
Scene detect(const Image& image);

// Squared distance threshold used by detect (exposed for tests).
double detect_confidence_threshold();

Tensor image_to_tensor(const Image& image);
Image tensor_to_image(const Tensor& t);

void write_ppm(const Image& image, const std::string& path, int scale = 1);
void write_png(const Image& image, const std::string& path, int scale = 1);
// Lays out images left to right with a 2-pixel gutter, rows top to bottom.
void write_png_grid(const std::vector<std::vector<Image>>& rows, const std::string& path,
                    int scale = 1);

}  // namespace sscr
