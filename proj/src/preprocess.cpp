#include "vseg/preprocess.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include "vseg/error.hpp"
#include "vseg/text_util.hpp"

namespace vseg::prep {

GrayImage rgb_to_gray(const RgbImage& img) {
  GrayImage out(img.width, img.height);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const std::uint8_t* p = &img.data[3 * i];
    out.data[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
  }
  return out;
}

DatasetStats compute_stats(std::span<const GrayImage> images) {
  std::size_t n = 0;
  double sum = 0.0;
  for (const auto& img : images) {
    for (double v : img.data) sum += v;
    n += img.data.size();
  }
  if (n == 0) throw Error(ErrorCode::DegenerateDataset, "no pixels");
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& img : images)
    for (double v : img.data) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n));
  if (!(sd > 0.0)) throw Error(ErrorCode::DegenerateDataset, "all pixels are equal");
  DatasetStats s;
  s.mean = mean;
  s.std = sd;
  return s;
}

std::pair<double, double> z_range(std::span<const GrayImage> images, const DatasetStats& stats) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& img : images) {
    for (double v : img.data) {
      const double z = (v - stats.mean) / stats.std;
      lo = std::min(lo, z);
      hi = std::max(hi, z);
    }
  }
  return {lo, hi};
}

GrayImage standardize(const GrayImage& img, const DatasetStats& stats, double global_min, double global_max) {
  if (!(global_max > global_min)) throw Error(ErrorCode::DegenerateRange, "z-score range is empty");
  if (!(stats.std > 0.0)) throw Error(ErrorCode::DegenerateDataset, "std must be positive");
  GrayImage out(img.width, img.height);
  const double range = global_max - global_min;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const double z = (img.data[i] - stats.mean) / stats.std;
    out.data[i] = std::clamp((z - global_min) / range, 0.0, 1.0);
  }
  return out;
}

void validate(const ClaheParams& params) {
  if (params.tiles_x < 1 || params.tiles_y < 1) throw Error(ErrorCode::InvalidValue, "CLAHE tiles must be >= 1");
  if (params.bins != 256) throw Error(ErrorCode::InvalidValue, "CLAHE supports exactly 256 bins");
  if (!(params.clip_limit >= 0.0)) throw Error(ErrorCode::InvalidValue, "CLAHE clip limit must be >= 0");
}

std::array<int, 256> tile_mapping(std::span<const int> histogram, double clip_limit) {
  std::array<int, 256> map{};
  long long n = 0;
  int vmin = -1;
  for (int v = 0; v < 256; ++v) {
    n += histogram[v];
    if (vmin < 0 && histogram[v] > 0) vmin = v;
  }
  if (vmin < 0 || histogram[vmin] == n) {
    for (int v = 0; v < 256; ++v) map[v] = v;
    return map;
  }

  std::array<double, 256> h{};
  for (int v = 0; v < 256; ++v) h[v] = histogram[v];
  if (clip_limit > 0.0) {
    const double limit = clip_limit * static_cast<double>(n) / 256.0;
    double excess = 0.0;
    for (auto& b : h) {
      if (b > limit) {
        excess += b - limit;
        b = limit;
      }
    }
    const double share = excess / 256.0;
    for (auto& b : h) b += share;
  }

  // cdf_min is taken at the darkest level present in the tile, so the
  // mapping stays anchored to real content after redistribution
  std::array<double, 256> cdf{};
  double acc = 0.0;
  for (int v = 0; v < 256; ++v) cdf[v] = (acc += h[v]);
  const double cdf_min = cdf[vmin];
  const double denom = static_cast<double>(n) - cdf_min;
  for (int v = 0; v < 256; ++v) {
    const double m = std::round(255.0 * (cdf[v] - cdf_min) / denom);
    map[v] = static_cast<int>(std::clamp(m, 0.0, 255.0));
  }
  return map;
}

namespace {

struct TileAxis {
  std::vector<int> begin;      // tile start, size tiles+1 (last = extent)
  std::vector<double> center;  // continuous center coordinate per tile
};

TileAxis make_axis(int extent, int tiles) {
  tiles = std::min(tiles, extent);
  TileAxis a;
  const int step = extent / tiles;
  for (int i = 0; i < tiles; ++i) a.begin.push_back(i * step);
  a.begin.push_back(extent);
  for (int i = 0; i < tiles; ++i) a.center.push_back((a.begin[i] + a.begin[i + 1] - 1) / 2.0);
  return a;
}

struct Neighbors {
  int lo, hi;
  double w;  // weight of `hi`
};

Neighbors neighbors(const TileAxis& a, int x) {
  const int last = static_cast<int>(a.center.size()) - 1;
  if (x <= a.center[0]) return {0, 0, 0.0};
  if (x >= a.center[last]) return {last, last, 0.0};
  int i = 0;
  while (a.center[i + 1] < x) ++i;
  return {i, i + 1, (x - a.center[i]) / (a.center[i + 1] - a.center[i])};
}

}  // namespace

GrayImage clahe(const GrayImage& img, const ClaheParams& params) {
  validate(params);
  const int w = img.width, h = img.height;
  std::vector<int> q(img.data.size());
  for (std::size_t i = 0; i < q.size(); ++i)
    q[i] = static_cast<int>(std::round(std::clamp(img.data[i], 0.0, 1.0) * 255.0));

  const TileAxis ax = make_axis(w, params.tiles_x);
  const TileAxis ay = make_axis(h, params.tiles_y);
  const int tx = static_cast<int>(ax.center.size());
  const int ty = static_cast<int>(ay.center.size());

  std::vector<std::array<int, 256>> maps(static_cast<std::size_t>(tx) * ty);
  for (int j = 0; j < ty; ++j) {
    for (int i = 0; i < tx; ++i) {
      std::array<int, 256> hist{};
      for (int r = ay.begin[j]; r < ay.begin[j + 1]; ++r)
        for (int c = ax.begin[i]; c < ax.begin[i + 1]; ++c) ++hist[q[static_cast<std::size_t>(r) * w + c]];
      maps[static_cast<std::size_t>(j) * tx + i] = tile_mapping(hist, params.clip_limit);
    }
  }

  std::vector<Neighbors> col_nb(w);
  for (int c = 0; c < w; ++c) col_nb[c] = neighbors(ax, c);

  GrayImage out(w, h);
  for (int r = 0; r < h; ++r) {
    const Neighbors ny = neighbors(ay, r);
    for (int c = 0; c < w; ++c) {
      const Neighbors& nx = col_nb[c];
      const int v = q[static_cast<std::size_t>(r) * w + c];
      auto m = [&](int tj, int ti) { return static_cast<double>(maps[static_cast<std::size_t>(tj) * tx + ti][v]); };
      // a + w (b - a) is exact whenever the neighbouring mappings agree
      const double top = m(ny.lo, nx.lo) + nx.w * (m(ny.lo, nx.hi) - m(ny.lo, nx.lo));
      const double bottom = m(ny.hi, nx.lo) + nx.w * (m(ny.hi, nx.hi) - m(ny.hi, nx.lo));
      out.data[static_cast<std::size_t>(r) * w + c] = (top + ny.w * (bottom - top)) / 255.0;
    }
  }
  return out;
}

GrayImage gamma_adjust(const GrayImage& img, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error(ErrorCode::InvalidGamma, "gamma must be > 0");
  GrayImage out(img.width, img.height);
  const double e = 1.0 / gamma;
  for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = std::pow(img.data[i], e);
  return out;
}

namespace {

GrayImage finish(const GrayImage& gray, const DatasetStats& stats, const PreprocessParams& params) {
  return gamma_adjust(clahe(standardize(gray, stats, stats.zmin, stats.zmax), params.clahe), params.gamma);
}

}  // namespace

PipelineResult preprocess_pipeline(std::span<const RgbImage> images, const PreprocessParams& params) {
  validate(params.clahe);
  if (!(params.gamma > 0.0)) throw Error(ErrorCode::InvalidGamma, "gamma must be > 0");
  std::vector<GrayImage> grays;
  grays.reserve(images.size());
  for (const auto& img : images) grays.push_back(rgb_to_gray(img));

  PipelineResult result;
  result.stats = compute_stats(grays);
  std::tie(result.stats.zmin, result.stats.zmax) = z_range(grays, result.stats);
  result.images.reserve(grays.size());
  for (const auto& g : grays) result.images.push_back(finish(g, result.stats, params));
  return result;
}

GrayImage apply_pipeline(const RgbImage& img, const DatasetStats& stats, const PreprocessParams& params) {
  return finish(rgb_to_gray(img), stats, params);
}

void write_stats(const DatasetStats& stats, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << "mean=" << format_double(stats.mean) << "\n"
      << "std=" << format_double(stats.std) << "\n"
      << "zmin=" << format_double(stats.zmin) << "\n"
      << "zmax=" << format_double(stats.zmax) << "\n";
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

DatasetStats read_stats(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open stats file " + path.string());
  std::map<std::string, double> kv;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidValue, path.string() + ": bad line '" + line + "'");
    kv[trim(line.substr(0, eq))] = parse_double(trim(line.substr(eq + 1)));
  }
  DatasetStats s;
  for (auto [key, dst] : {std::pair{"mean", &s.mean}, {"std", &s.std}, {"zmin", &s.zmin}, {"zmax", &s.zmax}}) {
    auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorCode::InvalidValue, path.string() + ": missing " + key);
    *dst = it->second;
  }
  if (!(s.std > 0.0)) throw Error(ErrorCode::DegenerateDataset, path.string() + ": std must be positive");
  if (!(s.zmax > s.zmin)) throw Error(ErrorCode::DegenerateRange, path.string() + ": zmax must exceed zmin");
  return s;
}

}  // namespace vseg::prep
