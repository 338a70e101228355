#include "sss/render.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>

namespace sss {

namespace {

void png_vector_write(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_vector_flush(png_structp) {}

struct PngReadCursor {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

void png_vector_read(png_structp png, png_bytep out, png_size_t length) {
  auto* cursor = static_cast<PngReadCursor*>(png_get_io_ptr(png));
  if (cursor->pos + length > cursor->size)
    png_error(png, "read past end of PNG buffer");
  std::memcpy(out, cursor->data + cursor->pos, length);
  cursor->pos += length;
}

/// Min-max scaled 8-bit grayscale backdrop as RGB triples.
std::vector<std::uint8_t> background_rgb(const ImageGrid<double>& background) {
  const auto& y = background.values();
  const double lo = y.minCoeff();
  const double hi = y.maxCoeff();
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  std::vector<std::uint8_t> rgb(
      static_cast<std::size_t>(y.rows()) * static_cast<std::size_t>(y.cols()) * 3);
  std::size_t k = 0;
  for (Index r = 0; r < y.rows(); ++r)
    for (Index c = 0; c < y.cols(); ++c) {
      const auto g = hi > lo
                         ? static_cast<std::uint8_t>(scale * (y(r, c) - lo) + 0.5)
                         : std::uint8_t(128);
      rgb[k++] = g;
      rgb[k++] = g;
      rgb[k++] = g;
    }
  return rgb;
}

void put_pixel(std::vector<std::uint8_t>& rgb, Index cols, Index r, Index c,
               Rgb color) {
  const std::size_t k =
      (static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
       static_cast<std::size_t>(c)) * 3;
  rgb[k] = color.r;
  rgb[k + 1] = color.g;
  rgb[k + 2] = color.b;
}

void require_region_fits(const InteriorRegion& region,
                         const ImageGrid<double>& background) {
  if (region.margin + region.g_rows > background.rows() ||
      region.margin + region.g_cols > background.cols())
    throw InputError("result region does not fit the background image");
}

const char kBase64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<std::uint8_t>& data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 2 < data.size()) {
    const unsigned n = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out.push_back(kBase64Alphabet[(n >> 18) & 63]);
    out.push_back(kBase64Alphabet[(n >> 12) & 63]);
    out.push_back(kBase64Alphabet[(n >> 6) & 63]);
    out.push_back(kBase64Alphabet[n & 63]);
    i += 3;
  }
  if (i + 1 == data.size()) {
    const unsigned n = data[i] << 16;
    out.push_back(kBase64Alphabet[(n >> 18) & 63]);
    out.push_back(kBase64Alphabet[(n >> 12) & 63]);
    out += "==";
  } else if (i + 2 == data.size()) {
    const unsigned n = (data[i] << 16) | (data[i + 1] << 8);
    out.push_back(kBase64Alphabet[(n >> 18) & 63]);
    out.push_back(kBase64Alphabet[(n >> 12) & 63]);
    out.push_back(kBase64Alphabet[(n >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_png_rgb8(const std::vector<std::uint8_t>& rgb,
                                          Index width, Index height) {
  if (width < 1 || height < 1 ||
      rgb.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3)
    throw InputError("RGB buffer does not match the requested dimensions");

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    throw NumericError("failed to initialize PNG writer");
  }
  std::vector<std::uint8_t> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw NumericError("PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_vector_write, png_vector_flush);
  // fixed settings keep the byte stream reproducible
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (Index r = 0; r < height; ++r)
    png_write_row(png, const_cast<png_bytep>(
                           rgb.data() + static_cast<std::size_t>(r) *
                                            static_cast<std::size_t>(width) * 3));
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
  return out;
}

void decode_png_rgb8(const std::vector<std::uint8_t>& png_bytes,
                     std::vector<std::uint8_t>& rgb, Index& width,
                     Index& height) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    throw NumericError("failed to initialize PNG reader");
  }
  PngReadCursor cursor{png_bytes.data(), png_bytes.size(), 0};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InputError("not a valid PNG byte stream");
  }
  png_set_read_fn(png, &cursor, png_vector_read);
  png_read_png(png, info, PNG_TRANSFORM_PACKING | PNG_TRANSFORM_EXPAND, nullptr);
  width = static_cast<Index>(png_get_image_width(png, info));
  height = static_cast<Index>(png_get_image_height(png, info));
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_RGB ||
      png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InputError("expected an 8-bit RGB PNG");
  }
  png_bytepp rows = png_get_rows(png, info);
  rgb.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (Index r = 0; r < height; ++r)
    std::memcpy(rgb.data() + static_cast<std::size_t>(r) *
                                 static_cast<std::size_t>(width) * 3,
                rows[r], static_cast<std::size_t>(width) * 3);
  png_destroy_read_struct(&png, &info, nullptr);
}

std::vector<std::uint8_t> render_map(const CurvatureResult<double>& result,
                                     const RenderPalette& palette,
                                     const ImageGrid<double>& background) {
  require_region_fits(result.region, background);
  auto rgb = background_rgb(background);
  const auto& region = result.region;
  for (Index i = 0; i < region.g_rows; ++i)
    for (Index j = 0; j < region.g_cols; ++j) {
      const auto cat = result.category_at(i, j);
      if (cat == CurvatureCategory::none) continue;
      put_pixel(rgb, background.cols(), region.margin + i, region.margin + j,
                palette.category_color(cat));
    }
  return encode_png_rgb8(rgb, background.cols(), background.rows());
}

std::vector<std::uint8_t> render_map(const SlopeResult<double>& result,
                                     const RenderPalette& palette,
                                     const ImageGrid<double>& background) {
  require_region_fits(result.region, background);
  auto rgb = background_rgb(background);
  const auto& region = result.region;
  for (Index i = 0; i < region.g_rows; ++i)
    for (Index j = 0; j < region.g_cols; ++j) {
      if (!result.significant(i, j)) continue;
      put_pixel(rgb, background.cols(), region.margin + i, region.margin + j,
                palette.slope_significant);
    }
  return encode_png_rgb8(rgb, background.cols(), background.rows());
}

std::vector<std::uint8_t> render_streamlines(
    const std::vector<Streamline<double>>& lines,
    const ImageGrid<double>& background, const RenderPalette& palette) {
  const Index w = background.cols(), h = background.rows();
  const auto backdrop = encode_png_rgb8(background_rgb(background), w, h);

  std::string svg;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" "
                "xmlns:xlink=\"http://www.w3.org/1999/xlink\" "
                "width=\"%lld\" height=\"%lld\" viewBox=\"0 0 %lld %lld\">\n",
                static_cast<long long>(w), static_cast<long long>(h),
                static_cast<long long>(w), static_cast<long long>(h));
  svg += buf;
  svg += "<image width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" xlink:href=\"data:image/png;base64,";
  svg += base64_encode(backdrop);
  svg += "\"/>\n";

  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", palette.streamline.r,
                palette.streamline.g, palette.streamline.b);
  const std::string stroke = buf;
  for (const auto& line : lines) {
    if (line.points.empty()) continue;
    svg += "<path fill=\"none\" stroke=\"" + stroke +
           "\" stroke-width=\"0.6\" d=\"";
    for (std::size_t p = 0; p < line.points.size(); ++p) {
      // SVG x is the column coordinate, y the row; offset to pixel centers
      std::snprintf(buf, sizeof buf, "%c%.3f %.3f", p == 0 ? 'M' : 'L',
                    line.points[p][1] + 0.5, line.points[p][0] + 0.5);
      svg += buf;
      if (p + 1 < line.points.size()) svg.push_back(' ');
    }
    svg += "\"/>\n";
  }
  svg += "</svg>\n";
  return {svg.begin(), svg.end()};
}

}  // namespace sss
