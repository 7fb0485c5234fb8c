#include "vseg/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "vseg/error.hpp"
#include "vseg/text_util.hpp"

namespace vseg::synth {

namespace {

struct Point {
  double x, y;
};

Point bezier(Point a, Point b, Point c, double t) {
  const double u = 1.0 - t;
  return {u * u * a.x + 2 * u * t * b.x + t * t * c.x, u * u * a.y + 2 * u * t * b.y + t * t * c.y};
}

constexpr double kBackground[3] = {175.0, 85.0, 45.0};

}  // namespace

void validate(const SynthConfig& cfg) {
  if (cfg.count < 1) throw Error(ErrorCode::InvalidValue, "synth.count must be >= 1");
  if (cfg.size < 4 || cfg.size % 4) throw Error(ErrorCode::InvalidValue, "synth.size must be a positive multiple of 4");
  if (cfg.vessels_min < 1 || cfg.vessels_max < cfg.vessels_min)
    throw Error(ErrorCode::InvalidValue, "synth vessel count range must satisfy 1 <= min <= max");
  if (!(cfg.width_min > 0.0) || cfg.width_max < cfg.width_min)
    throw Error(ErrorCode::InvalidValue, "synth width range must satisfy 0 < min <= max");
  if (!(cfg.noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidValue, "synth.noise_sigma must be >= 0");
  if (!(cfg.fov_radius > 0.0 && cfg.fov_radius <= 0.5))
    throw Error(ErrorCode::InvalidValue, "synth.fov_radius must lie in (0, 0.5]");
}

Sample generate_one(const SynthConfig& cfg, int index) {
  validate(cfg);
  std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(index)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = cfg.size;
  const double c = (n - 1) / 2.0;
  const double radius = cfg.fov_radius * n;

  Sample s;
  char name[32];
  std::snprintf(name, sizeof name, "synth_%03d", index);
  s.id = name;
  s.image = RgbImage(n, n);
  s.label = BinaryMask(n, n);
  s.fov = BinaryMask(n, n);

  // per-pixel darkening factor, 1 = background
  std::vector<double> shade(static_cast<std::size_t>(n) * n, 1.0);
  const int vessels = std::uniform_int_distribution<int>(cfg.vessels_min, cfg.vessels_max)(rng);
  for (int v = 0; v < vessels; ++v) {
    const double a0 = 2 * std::numbers::pi * unit(rng);
    const double a1 = a0 + std::numbers::pi * (0.5 + unit(rng));
    const Point p0{c + radius * std::cos(a0), c + radius * std::sin(a0)};
    const Point p2{c + radius * std::cos(a1), c + radius * std::sin(a1)};
    const double cr = 0.6 * radius * std::sqrt(unit(rng)), ca = 2 * std::numbers::pi * unit(rng);
    const Point p1{c + cr * std::cos(ca), c + cr * std::sin(ca)};
    const double width = cfg.width_min + (cfg.width_max - cfg.width_min) * unit(rng);
    const double factor = 0.45 + 0.25 * unit(rng);
    const double half = width / 2.0;

    const double length = std::hypot(p1.x - p0.x, p1.y - p0.y) + std::hypot(p2.x - p1.x, p2.y - p1.y);
    const int steps = static_cast<int>(std::ceil(length * 4.0)) + 1;
    for (int k = 0; k <= steps; ++k) {
      const Point p = bezier(p0, p1, p2, static_cast<double>(k) / steps);
      const int r0 = std::max(0, static_cast<int>(std::floor(p.y - half))),
                r1 = std::min(n - 1, static_cast<int>(std::ceil(p.y + half)));
      const int c0 = std::max(0, static_cast<int>(std::floor(p.x - half))),
                c1 = std::min(n - 1, static_cast<int>(std::ceil(p.x + half)));
      for (int r = r0; r <= r1; ++r)
        for (int col = c0; col <= c1; ++col) {
          if (std::hypot(col - p.x, r - p.y) > half) continue;
          const std::size_t i = static_cast<std::size_t>(r) * n + col;
          s.label.data[i] = 1;
          shade[i] = std::min(shade[i], factor);
        }
    }
  }

  std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
  for (int r = 0; r < n; ++r) {
    for (int col = 0; col < n; ++col) {
      const std::size_t i = static_cast<std::size_t>(r) * n + col;
      const double d2 = ((r - c) * (r - c) + (col - c) * (col - c)) / (radius * radius);
      s.fov.data[i] = d2 <= 1.0;
      if (!s.fov.data[i]) s.label.data[i] = 0;  // nothing is drawn outside the FOV
      std::uint8_t* px = s.image.pixel(r, col);
      for (int ch = 0; ch < 3; ++ch) {
        // vignetted background inside the FOV, black outside
        const double base = s.fov.data[i] ? kBackground[ch] * (1.0 - 0.25 * d2) * shade[i] : 0.0;
        const double v = base + noise(rng);
        px[ch] = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
      }
    }
  }
  return s;
}

std::vector<Sample> generate(const SynthConfig& cfg) {
  validate(cfg);
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(cfg.count));
  for (int i = 0; i < cfg.count; ++i) out.push_back(generate_one(cfg, i));
  return out;
}

}  // namespace vseg::synth
