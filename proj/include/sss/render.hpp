#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sss/grid.hpp"
#include "sss/inference.hpp"
#include "sss/types.hpp"

namespace sss {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Category colors: peak blue, hole yellow, saddle red, ridge purple,
/// valley orange; streamlines green. `none` pixels stay transparent (the
/// grayscale background shows through).
struct RenderPalette {
  Rgb peak{0, 0, 255};
  Rgb hole{255, 255, 0};
  Rgb saddle{255, 0, 0};
  Rgb ridge{128, 0, 128};
  Rgb valley{255, 165, 0};
  Rgb slope_significant{0, 160, 0};
  Rgb streamline{0, 160, 0};

  static RenderPalette standard() { return {}; }

  Rgb category_color(CurvatureCategory cat) const {
    switch (cat) {
      case CurvatureCategory::peak: return peak;
      case CurvatureCategory::hole: return hole;
      case CurvatureCategory::saddle: return saddle;
      case CurvatureCategory::ridge: return ridge;
      case CurvatureCategory::valley: return valley;
      default: return {};
    }
  }
};

/// Encodes 8-bit RGB pixels (row-major, 3 bytes per pixel) as PNG bytes with
/// fixed encoder settings, so identical inputs give identical bytes.
std::vector<std::uint8_t> encode_png_rgb8(const std::vector<std::uint8_t>& rgb,
                                          Index width, Index height);

/// Decodes a PNG produced by encode_png_rgb8 back to RGB8 (test utility).
void decode_png_rgb8(const std::vector<std::uint8_t>& png_bytes,
                     std::vector<std::uint8_t>& rgb, Index& width,
                     Index& height);

/// Grayscale background with classified pixels overlaid in palette colors.
std::vector<std::uint8_t> render_map(const CurvatureResult<double>& result,
                                     const RenderPalette& palette,
                                     const ImageGrid<double>& background);

/// Grayscale background with jointly significant slope pixels overlaid.
std::vector<std::uint8_t> render_map(const SlopeResult<double>& result,
                                     const RenderPalette& palette,
                                     const ImageGrid<double>& background);

/// SVG document: embedded raster background plus one green path per
/// streamline. Deterministic for identical inputs.
std::vector<std::uint8_t> render_streamlines(
    const std::vector<Streamline<double>>& lines,
    const ImageGrid<double>& background,
    const RenderPalette& palette = RenderPalette::standard());

}  // namespace sss
