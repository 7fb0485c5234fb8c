#include <filesystem>
#include <random>

#include "doctest.h"
#include "test_util.hpp"
#include "vseg/error.hpp"
#include "vseg/image_io.hpp"

using namespace vseg;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("single pixel P6 round trip") {
  TempDir dir;
  const auto path = dir.path() / "px.ppm";
  auto bytes = bytes_of("P6\n1 1\n255\n");
  bytes.insert(bytes.end(), {255, 0, 0});
  write_bytes(path, bytes);
  RgbImage img = read_ppm(path);
  CHECK(img.width == 1);
  CHECK(img.height == 1);
  CHECK(img.data == std::vector<std::uint8_t>{255, 0, 0});
}

TEST_CASE("P6 with short payload is TruncatedData") {
  auto bytes = bytes_of("P6\n2 2\n255\n");
  bytes.insert(bytes.end(), 9, 7);  // three pixels, four declared
  CHECK_THROWS_WITH_AS(decode_ppm(bytes), doctest::Contains("TruncatedData"), Error);
}

TEST_CASE("header errors") {
  CHECK_THROWS_WITH_AS(decode_ppm(bytes_of("P3\n1 1\n255\n")), doctest::Contains("MalformedHeader"), Error);
  CHECK_THROWS_WITH_AS(decode_ppm(bytes_of("P6\nx 1\n255\n")), doctest::Contains("MalformedHeader"), Error);
  CHECK_THROWS_WITH_AS(decode_ppm(bytes_of("P6\n1 1\n1023\n\1\2\3\4\5\6")), doctest::Contains("UnsupportedMaxval"),
                       Error);
  CHECK_THROWS_WITH_AS(decode_pgm(bytes_of("P5\n1 1\n4095\n\1\2")), doctest::Contains("UnsupportedMaxval"), Error);
}

TEST_CASE("header comments are accepted") {
  auto bytes = bytes_of("P5\n# made by hand\n2 1 # trailing\n255\n");
  bytes.insert(bytes.end(), {0, 128});
  auto content = decode_pgm(bytes);
  REQUIRE(std::holds_alternative<GrayImage>(content));
  CHECK(std::get<GrayImage>(content).data == std::vector<double>{0.0, 128.0});
}

TEST_CASE("random PPM images round trip bit-exactly") {
  TempDir dir;
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    RgbImage img(16, 16);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(rng());
    const auto path = dir.path() / "r.ppm";
    write_ppm(img, path);
    const auto first = read_bytes(path);
    RgbImage back = read_ppm(path);
    CHECK(back == img);
    write_ppm(back, path);
    CHECK(read_bytes(path) == first);
  }
}

TEST_CASE("P5 mask detection") {
  SUBCASE("only 0 and 255 gives a mask") {
    auto bytes = bytes_of("P5\n3 1\n255\n");
    bytes.insert(bytes.end(), {0, 255, 255});
    auto content = decode_pgm(bytes);
    REQUIRE(std::holds_alternative<BinaryMask>(content));
    CHECK(std::get<BinaryMask>(content).data == std::vector<std::uint8_t>{0, 1, 1});
  }
  SUBCASE("a 128 makes it gray") {
    auto bytes = bytes_of("P5\n3 1\n255\n");
    bytes.insert(bytes.end(), {0, 128, 255});
    CHECK(std::holds_alternative<GrayImage>(decode_pgm(bytes)));
  }
  SUBCASE("16-bit reads as raw values") {
    auto bytes = bytes_of("P5\n2 1\n65535\n");
    bytes.insert(bytes.end(), {0xff, 0xff, 0x01, 0x00});
    auto content = decode_pgm(bytes);
    REQUIRE(std::holds_alternative<GrayImage>(content));
    CHECK(std::get<GrayImage>(content).data == std::vector<double>{65535.0, 256.0});
  }
}

TEST_CASE("mask file round trip and read_mask validation") {
  TempDir dir;
  BinaryMask m(4, 3);
  for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = (i * 7) % 3 == 0;
  write_mask(m, dir.path() / "m.pgm");
  CHECK(read_mask(dir.path() / "m.pgm") == m);
  GrayImage g(2, 1);
  g.data = {3.0, 200.0};
  write_gray8(g, dir.path() / "g.pgm");
  CHECK_THROWS_WITH_AS(read_mask(dir.path() / "g.pgm"), doctest::Contains("NotAMask"), Error);
  CHECK(read_gray(dir.path() / "m.pgm").data[0] == (m.data[0] ? 255.0 : 0.0));
}

TEST_CASE("probability map quantization") {
  CHECK(quantize_unit(0.0) == 0);
  CHECK(quantize_unit(1.0) == 65535);
  CHECK(quantize_unit(0.5) == 32768);  // 32767.5 rounds away from zero

  ProbMap p(3, 1);
  p.data = {0.0, 0.5, 1.0};
  const auto bytes = encode_prob_map(p);
  const std::vector<std::uint8_t> payload(bytes.end() - 6, bytes.end());
  CHECK(payload == std::vector<std::uint8_t>{0x00, 0x00, 0x80, 0x00, 0xff, 0xff});
}

TEST_CASE("probability map round trip error is at most half a quantum") {
  TempDir dir;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ProbMap p(17, 9);
  for (auto& v : p.data) v = u(rng);
  write_prob_map(p, dir.path() / "p.pgm");
  ProbMap back = read_prob_map(dir.path() / "p.pgm");
  REQUIRE(back.data.size() == p.data.size());
  for (std::size_t i = 0; i < p.data.size(); ++i) CHECK(std::abs(back.data[i] - p.data[i]) <= 0.5 / 65535 + 1e-15);
  // second pass is exact: quantized values are fixed points
  write_prob_map(back, dir.path() / "q.pgm");
  CHECK(read_bytes(dir.path() / "q.pgm") == read_bytes(dir.path() / "p.pgm"));
}

TEST_CASE("missing file is IoFailure") {
  CHECK_THROWS_WITH_AS(read_ppm("/nonexistent/x.ppm"), doctest::Contains("IoFailure"), Error);
}
