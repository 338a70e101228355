#include "sss/image_io.hpp"

#include <png.h>

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

namespace sss {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("input not found: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Matrix<double> from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix<double> values(static_cast<Index>(rows.size()),
                        static_cast<Index>(rows.front().size()));
  for (Index r = 0; r < values.rows(); ++r)
    for (Index c = 0; c < values.cols(); ++c)
      values(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return values;
}

double parse_double(std::string_view token, Index row, Index col) {
  std::size_t begin = 0, end = token.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(token[begin])))
    ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(token[end - 1])))
    --end;
  double value = 0;
  const auto* first = token.data() + begin;
  const auto* last = token.data() + end;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last)
    throw InputError("unparsable CSV value '" + std::string(token) +
                     "' at row " + std::to_string(row) + ", col " +
                     std::to_string(col));
  return value;
}

// ---- PGM ----------------------------------------------------------------

struct PgmHeader {
  bool binary = false;
  Index cols = 0, rows = 0;
  long maxval = 0;
  std::size_t data_offset = 0;
};

PgmHeader parse_pgm_header(const std::string& bytes, const std::string& path) {
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() &&
           !std::isspace(static_cast<unsigned char>(bytes[pos])))
      ++pos;
    if (start == pos) throw InputError("truncated PGM header in " + path);
    return bytes.substr(start, pos - start);
  };

  PgmHeader header;
  const std::string magic = next_token();
  if (magic == "P5") header.binary = true;
  else if (magic == "P2") header.binary = false;
  else throw InputError("not a PGM file (magic '" + magic + "'): " + path);
  header.cols = static_cast<Index>(std::stol(next_token()));
  header.rows = static_cast<Index>(std::stol(next_token()));
  header.maxval = std::stol(next_token());
  if (header.cols < 1 || header.rows < 1)
    throw InputError("PGM with empty dimensions: " + path);
  if (header.maxval < 1 || header.maxval > 65535)
    throw InputError("PGM maxval out of range: " + path);
  if (header.binary) ++pos;  // single whitespace byte before raster
  header.data_offset = pos;
  return header;
}

ImageGrid<double> load_pgm(const std::string& path) {
  const std::string bytes = read_file(path);
  const PgmHeader header = parse_pgm_header(bytes, path);
  Matrix<double> values(header.rows, header.cols);

  if (header.binary) {
    const int bpp = header.maxval > 255 ? 2 : 1;
    const std::size_t need =
        static_cast<std::size_t>(header.rows) * header.cols * bpp;
    if (bytes.size() - header.data_offset < need)
      throw InputError("truncated PGM raster: " + path);
    const auto* data =
        reinterpret_cast<const unsigned char*>(bytes.data()) + header.data_offset;
    std::size_t k = 0;
    for (Index r = 0; r < header.rows; ++r)
      for (Index c = 0; c < header.cols; ++c) {
        long v = data[k++];
        if (bpp == 2) v = (v << 8) | data[k++];  // big-endian samples
        values(r, c) = static_cast<double>(v);
      }
  } else {
    std::istringstream in(bytes.substr(header.data_offset));
    for (Index r = 0; r < header.rows; ++r)
      for (Index c = 0; c < header.cols; ++c) {
        long v;
        if (!(in >> v)) throw InputError("truncated PGM raster: " + path);
        values(r, c) = static_cast<double>(v);
      }
  }
  return ImageGrid<double>(std::move(values));
}

// ---- PNG ----------------------------------------------------------------

ImageGrid<double> load_png(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw InputError("input not found: " + path);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw InputError("failed to initialize PNG reader");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw InputError("not a valid PNG file: " + path);
  }
  png_init_io(png, fp);
  png_read_png(png, info,
               PNG_TRANSFORM_PACKING | PNG_TRANSFORM_EXPAND |
                   PNG_TRANSFORM_STRIP_ALPHA,
               nullptr);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  const int channels = png_get_channels(png, info);
  png_bytepp row_pointers = png_get_rows(png, info);

  Matrix<double> values(static_cast<Index>(height), static_cast<Index>(width));
  auto sample = [&](png_bytep row, png_uint_32 x, int ch) -> double {
    if (bit_depth == 16) {
      const std::size_t k = (static_cast<std::size_t>(x) * channels + ch) * 2;
      return static_cast<double>((row[k] << 8) | row[k + 1]);
    }
    return static_cast<double>(row[static_cast<std::size_t>(x) * channels + ch]);
  };
  for (png_uint_32 y = 0; y < height; ++y) {
    png_bytep row = row_pointers[y];
    for (png_uint_32 x = 0; x < width; ++x) {
      double v;
      if (color_type == PNG_COLOR_TYPE_GRAY || channels == 1) {
        v = sample(row, x, 0);
      } else {
        // Rec. 601 luminance on the native integer scale
        v = 0.299 * sample(row, x, 0) + 0.587 * sample(row, x, 1) +
            0.114 * sample(row, x, 2);
      }
      values(static_cast<Index>(y), static_cast<Index>(x)) = v;
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return ImageGrid<double>(std::move(values));
}

}  // namespace

std::optional<ImageFormat> format_from_path(const std::string& path) {
  auto ext = std::filesystem::path(path).extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(ch));
  if (ext == ".csv") return ImageFormat::csv;
  if (ext == ".pgm") return ImageFormat::pgm;
  if (ext == ".png") return ImageFormat::png_gray;
  return std::nullopt;
}

Matrix<double> parse_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  Index row_index = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;

    bool blank = true;
    for (char ch : line)
      if (!std::isspace(static_cast<unsigned char>(ch))) blank = false;
    if (blank) continue;

    std::vector<double> row;
    std::size_t field = 0;
    Index col_index = 0;
    while (true) {
      std::size_t comma = line.find(',', field);
      const auto token = comma == std::string_view::npos
                             ? line.substr(field)
                             : line.substr(field, comma - field);
      row.push_back(parse_double(token, row_index, col_index++));
      if (comma == std::string_view::npos) break;
      field = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw InputError("ragged CSV: row " + std::to_string(row_index) +
                       " has " + std::to_string(row.size()) +
                       " fields, expected " +
                       std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
    ++row_index;
  }
  if (rows.empty()) throw InputError("no rows");
  return from_rows(rows);
}

std::string format_csv(const Matrix<double>& values) {
  std::string out;
  out.reserve(static_cast<std::size_t>(values.size()) * 12);
  char buffer[40];
  for (Index r = 0; r < values.rows(); ++r) {
    for (Index c = 0; c < values.cols(); ++c) {
      std::snprintf(buffer, sizeof buffer, "%.17g", values(r, c));
      if (c) out.push_back(',');
      out += buffer;
    }
    out.push_back('\n');
  }
  return out;
}

ImageGrid<double> load_image(const std::string& path, ImageFormat format) {
  switch (format) {
    case ImageFormat::csv:
      return ImageGrid<double>(parse_csv(read_file(path)));
    case ImageFormat::pgm:
      return load_pgm(path);
    default:
      return load_png(path);
  }
}

void save_csv(const ImageGrid<double>& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + path);
  out << format_csv(grid.values());
  if (!out) throw InputError("failed while writing: " + path);
}

}  // namespace sss
