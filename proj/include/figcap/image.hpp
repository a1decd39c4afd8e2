#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace figcap {

/// Row-major raster: rows are y, columns are x.
template <typename T>
using Image = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using GrayImage = Image<std::uint8_t>;
using FloatImage = Image<float>;

/// Binary-ish PGM (P5, maxval <= 255) or ASCII PGM (P2).
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

/// 8-bit PNG of any color type; color is collapsed to luminance.
GrayImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const GrayImage& img);

/// Dispatches on the file extension (.pgm or .png).
GrayImage read_gray(const std::filesystem::path& path);

/// Most frequent pixel value; ties resolve to the brighter value.
std::uint8_t modal_value(const GrayImage& img);

/// Value v such that a fraction q of pixels are <= v (q in [0,1]).
std::uint8_t quantile_value(const GrayImage& img, double q);

}  // namespace figcap
