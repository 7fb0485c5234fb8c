#include "vseg/image_io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "vseg/error.hpp"

namespace vseg {

RgbImage::RgbImage(int w, int h) : width(w), height(h), data(3 * static_cast<std::size_t>(w) * h, 0) {}
GrayImage::GrayImage(int w, int h, double fill) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}
BinaryMask::BinaryMask(int w, int h, std::uint8_t fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}
ProbMap::ProbMap(int w, int h, double fill) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

namespace {

struct Header {
  char kind = 0;  // '5' or '6'
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t payload_offset = 0;
};

class HeaderParser {
 public:
  explicit HeaderParser(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  Header parse() {
    if (bytes_.size() < 2 || bytes_[0] != 'P' || (bytes_[1] != '5' && bytes_[1] != '6'))
      throw Error(ErrorCode::MalformedHeader, "expected P5 or P6 magic");
    Header h;
    h.kind = static_cast<char>(bytes_[1]);
    pos_ = 2;
    h.width = next_int("width");
    h.height = next_int("height");
    h.maxval = next_int("maxval");
    if (h.width < 1 || h.height < 1) throw Error(ErrorCode::MalformedHeader, "non-positive dimensions");
    // exactly one whitespace byte separates the header from the raster
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      throw Error(ErrorCode::MalformedHeader, "missing whitespace before raster");
    h.payload_offset = pos_ + 1;
    return h;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  int next_int(const char* field) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_]))
      throw Error(ErrorCode::MalformedHeader, std::string("bad ") + field);
    long long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > (1LL << 30)) throw Error(ErrorCode::MalformedHeader, std::string(field) + " too large");
      ++pos_;
    }
    return static_cast<int>(v);
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

std::vector<std::uint8_t> header_bytes(char kind, int w, int h, int maxval) {
  std::string s = std::string("P") + kind + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n" +
                  std::to_string(maxval) + "\n";
  return {s.begin(), s.end()};
}

template <typename F>
auto with_path(const std::filesystem::path& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IoFailure) throw;
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

}  // namespace

std::uint16_t quantize_unit(double p) {
  return static_cast<std::uint16_t>(std::round(p * 65535.0));
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  auto bytes = header_bytes('6', img.width, img.height, 255);
  bytes.insert(bytes.end(), img.data.begin(), img.data.end());
  return bytes;
}

RgbImage decode_ppm(const std::vector<std::uint8_t>& bytes) {
  Header h = HeaderParser(bytes).parse();
  if (h.kind != '6') throw Error(ErrorCode::MalformedHeader, "expected P6");
  if (h.maxval != 255) throw Error(ErrorCode::UnsupportedMaxval, "P6 maxval " + std::to_string(h.maxval));
  RgbImage img(h.width, h.height);
  if (bytes.size() < h.payload_offset + img.data.size())
    throw Error(ErrorCode::TruncatedData, "raster shorter than " + std::to_string(img.data.size()) + " bytes");
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(h.payload_offset), img.data.size(), img.data.begin());
  return img;
}

PgmContent decode_pgm(const std::vector<std::uint8_t>& bytes, bool force_gray) {
  Header h = HeaderParser(bytes).parse();
  if (h.kind != '5') throw Error(ErrorCode::MalformedHeader, "expected P5");
  if (h.maxval != 255 && h.maxval != 65535)
    throw Error(ErrorCode::UnsupportedMaxval, "P5 maxval " + std::to_string(h.maxval));
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  const std::size_t sample_bytes = h.maxval == 255 ? 1 : 2;
  if (bytes.size() < h.payload_offset + n * sample_bytes)
    throw Error(ErrorCode::TruncatedData, "raster shorter than " + std::to_string(n * sample_bytes) + " bytes");
  const std::uint8_t* raster = bytes.data() + h.payload_offset;

  if (sample_bytes == 1) {
    bool binary = !force_gray;
    for (std::size_t i = 0; i < n && binary; ++i) binary = raster[i] == 0 || raster[i] == 255;
    if (binary) {
      BinaryMask m(h.width, h.height);
      for (std::size_t i = 0; i < n; ++i) m.data[i] = raster[i] == 255 ? 1 : 0;
      return m;
    }
    GrayImage g(h.width, h.height);
    for (std::size_t i = 0; i < n; ++i) g.data[i] = raster[i];
    return g;
  }
  GrayImage g(h.width, h.height);
  for (std::size_t i = 0; i < n; ++i) g.data[i] = (raster[2 * i] << 8) | raster[2 * i + 1];
  return g;
}

std::vector<std::uint8_t> encode_prob_map(const ProbMap& p) {
  auto bytes = header_bytes('5', p.width, p.height, 65535);
  bytes.reserve(bytes.size() + 2 * p.data.size());
  for (double v : p.data) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::InvalidValue, "probability outside [0,1]");
    const std::uint16_t s = quantize_unit(v);
    bytes.push_back(static_cast<std::uint8_t>(s >> 8));
    bytes.push_back(static_cast<std::uint8_t>(s & 0xff));
  }
  return bytes;
}

RgbImage read_ppm(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  return with_path(path, [&] { return decode_ppm(bytes); });
}

void write_ppm(const RgbImage& img, const std::filesystem::path& path) { write_file(path, encode_ppm(img)); }

PgmContent read_pgm(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  return with_path(path, [&] { return decode_pgm(bytes); });
}

BinaryMask read_mask(const std::filesystem::path& path) {
  auto content = read_pgm(path);
  if (auto* m = std::get_if<BinaryMask>(&content)) return std::move(*m);
  throw Error(ErrorCode::NotAMask, path.string() + ": values other than 0/255 present");
}

GrayImage read_gray(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  return with_path(path, [&] { return std::get<GrayImage>(decode_pgm(bytes, true)); });
}

void write_mask(const BinaryMask& mask, const std::filesystem::path& path) {
  auto bytes = header_bytes('5', mask.width, mask.height, 255);
  for (auto v : mask.data) bytes.push_back(v ? 255 : 0);
  write_file(path, bytes);
}

void write_gray8(const GrayImage& img, const std::filesystem::path& path) {
  auto bytes = header_bytes('5', img.width, img.height, 255);
  for (double v : img.data) {
    const double r = std::round(v);
    if (!(r >= 0.0 && r <= 255.0)) throw Error(ErrorCode::InvalidValue, "gray value outside [0,255]");
    bytes.push_back(static_cast<std::uint8_t>(r));
  }
  write_file(path, bytes);
}

void write_prob_map(const ProbMap& p, const std::filesystem::path& path) { write_file(path, encode_prob_map(p)); }

ProbMap read_prob_map(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  return with_path(path, [&] {
    Header h = HeaderParser(bytes).parse();
    if (h.kind != '5' || h.maxval != 65535)
      throw Error(ErrorCode::UnsupportedMaxval, "probability maps must be 16-bit P5");
    auto g = std::get<GrayImage>(decode_pgm(bytes));
    ProbMap p(g.width, g.height);
    for (std::size_t i = 0; i < g.data.size(); ++i) p.data[i] = g.data[i] / 65535.0;
    return p;
  });
}

}  // namespace vseg
