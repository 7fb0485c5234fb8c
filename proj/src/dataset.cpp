#include "vseg/dataset.hpp"

#include <algorithm>
#include <fstream>

#include "vseg/error.hpp"
#include "vseg/text_util.hpp"

namespace vseg {

std::vector<std::string> list_ids(const std::filesystem::path& dir, const std::string& ext) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw Error(ErrorCode::LayoutError, "missing directory " + dir.string());
  std::vector<std::string> ids;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ext) continue;
    ids.push_back(e.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::map<std::string, std::string> read_strata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto tab = t.find('\t');
    if (tab == std::string::npos)
      throw Error(ErrorCode::LayoutError, path.string() + ":" + std::to_string(lineno) + ": expected <id>\\t<stratum>");
    out[trim(t.substr(0, tab))] = trim(t.substr(tab + 1));
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& root) {
  const auto ids = list_ids(root / "images", ".ppm");
  if (ids.empty()) throw Error(ErrorCode::EmptyDataset, "no .ppm images in " + (root / "images").string());
  Dataset ds;
  for (const auto& id : ids) {
    Sample s;
    s.id = id;
    s.image = read_ppm(root / "images" / (id + ".ppm"));
    for (auto [dir, mask] : {std::pair{"labels", &s.label}, std::pair{"fov", &s.fov}}) {
      const auto p = root / dir / (id + ".pgm");
      if (!std::filesystem::exists(p)) throw Error(ErrorCode::LayoutError, "missing " + p.string());
      *mask = read_mask(p);
      if (mask->width != s.image.width || mask->height != s.image.height)
        throw Error(ErrorCode::LayoutError, p.string() + " is " + std::to_string(mask->width) + "x" +
                                                std::to_string(mask->height) + ", image is " +
                                                std::to_string(s.image.width) + "x" + std::to_string(s.image.height));
    }
    ds.samples.push_back(std::move(s));
  }
  if (std::filesystem::exists(root / "strata.txt")) ds.strata = read_strata(root / "strata.txt");
  return ds;
}

void write_dataset(const std::vector<Sample>& samples, const std::map<std::string, std::string>& strata,
                   const std::filesystem::path& root) {
  for (const char* d : {"images", "labels", "fov"}) std::filesystem::create_directories(root / d);
  for (const auto& s : samples) {
    write_ppm(s.image, root / "images" / (s.id + ".ppm"));
    write_mask(s.label, root / "labels" / (s.id + ".pgm"));
    write_mask(s.fov, root / "fov" / (s.id + ".pgm"));
  }
  if (strata.empty()) return;
  std::ofstream out(root / "strata.txt", std::ios::trunc);
  for (const auto& [id, s] : strata) out << id << '\t' << s << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + (root / "strata.txt").string());
}

}  // namespace vseg
