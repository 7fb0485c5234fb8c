#pragma once

// NetPBM readers and writers for fundus images, masks and probability maps.
//
// Supported payloads:
//   P6 maxval 255            RgbImage
//   P5 maxval 255            GrayImage, or BinaryMask when only {0,255} occur
//   P5 maxval 65535 (BE)     GrayImage as read; ProbMap via read_prob_map
//
// '#' comments are accepted in headers but never written.

#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

namespace vseg {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // row-major R,G,B triples

  RgbImage() = default;
  RgbImage(int w, int h);
  std::uint8_t* pixel(int row, int col) { return &data[3 * (static_cast<std::size_t>(row) * width + col)]; }
  const std::uint8_t* pixel(int row, int col) const {
    return &data[3 * (static_cast<std::size_t>(row) * width + col)];
  }
  bool operator==(const RgbImage&) const = default;
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0);
  double& at(int row, int col) { return data[static_cast<std::size_t>(row) * width + col]; }
  double at(int row, int col) const { return data[static_cast<std::size_t>(row) * width + col]; }
  bool operator==(const GrayImage&) const = default;
};

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 0 or 1

  BinaryMask() = default;
  BinaryMask(int w, int h, std::uint8_t fill = 0);
  std::uint8_t& at(int row, int col) { return data[static_cast<std::size_t>(row) * width + col]; }
  std::uint8_t at(int row, int col) const { return data[static_cast<std::size_t>(row) * width + col]; }
  bool operator==(const BinaryMask&) const = default;
};

struct ProbMap {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // each in [0,1]

  ProbMap() = default;
  ProbMap(int w, int h, double fill = 0.0);
  double at(int row, int col) const { return data[static_cast<std::size_t>(row) * width + col]; }
  bool operator==(const ProbMap&) const = default;
};

using PgmContent = std::variant<GrayImage, BinaryMask>;

RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const RgbImage& img, const std::filesystem::path& path);

PgmContent read_pgm(const std::filesystem::path& path);

/// Reads a P5 file that must classify as a mask; NotAMask otherwise.
BinaryMask read_mask(const std::filesystem::path& path);
/// Reads a P5 file as raw intensities even when it would classify as a mask.
GrayImage read_gray(const std::filesystem::path& path);

void write_mask(const BinaryMask& mask, const std::filesystem::path& path);
/// 8-bit P5; values are rounded and must lie in [0,255].
void write_gray8(const GrayImage& img, const std::filesystem::path& path);

/// 16-bit P5 with sample = round(p * 65535).
void write_prob_map(const ProbMap& p, const std::filesystem::path& path);
/// Inverse of write_prob_map; requires maxval 65535.
ProbMap read_prob_map(const std::filesystem::path& path);

std::uint16_t quantize_unit(double p);

// In-memory codecs used by the file functions (and by tests).
std::vector<std::uint8_t> encode_ppm(const RgbImage& img);
RgbImage decode_ppm(const std::vector<std::uint8_t>& bytes);
PgmContent decode_pgm(const std::vector<std::uint8_t>& bytes, bool force_gray = false);
std::vector<std::uint8_t> encode_prob_map(const ProbMap& p);

}  // namespace vseg
