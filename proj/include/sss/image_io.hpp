#pragma once

#include <optional>
#include <string>

#include "sss/grid.hpp"
#include "sss/types.hpp"

namespace sss {

enum class ImageFormat { csv, pgm, png_gray };

/// Guesses the format from the file extension (.csv, .pgm, .png).
std::optional<ImageFormat> format_from_path(const std::string& path);

/// Loads an image. CSV: comma-separated rows, row-major, no header.
/// PGM: binary P5 or ASCII P2, maxval up to 65535. PNG: 8/16-bit grayscale;
/// color inputs are converted by luminance. Integer levels are used as-is,
/// without rescaling.
ImageGrid<double> load_image(const std::string& path, ImageFormat format);

/// Parses CSV text into a matrix (exposed for round-trip checks).
Matrix<double> parse_csv(const std::string& text);

/// Serializes a matrix as CSV with 17 significant digits, so values
/// round-trip bit-exactly through save and load.
std::string format_csv(const Matrix<double>& values);

void save_csv(const ImageGrid<double>& grid, const std::string& path);

}  // namespace sss
