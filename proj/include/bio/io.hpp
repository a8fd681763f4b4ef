#pragma once

#include <filesystem>
#include <string>

#include "bio/image.hpp"

namespace bio::io {

/// Plain-text 2-D array: first line "h w", then h rows of w reals.
Mat read_array(const std::filesystem::path& path);
void write_array(const std::filesystem::path& path, const Mat& m);

/// Reads a binary (P5) or ASCII (P2) PGM of 8 or 16 bits, or a grayscale PNG.
/// Samples are scaled to [0, 1].
ImageGrid read_image(const std::filesystem::path& path);

/// Writes samples clamped to [0, 1] and quantized to `bits` (8 or 16).
void write_pgm(const std::filesystem::path& path, const ImageGrid& img, int bits = 16);
void write_png(const std::filesystem::path& path, const ImageGrid& img, int bits = 8);

/// Writes to a sibling temporary file, then renames over `path`.
void atomic_write_text(const std::filesystem::path& path, const std::string& content);

ImageGrid from_matrix(const Mat& m);
Mat to_matrix(const ImageGrid& img);

}  // namespace bio::io
