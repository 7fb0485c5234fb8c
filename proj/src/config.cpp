#include "vseg/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "vseg/error.hpp"
#include "vseg/text_util.hpp"

namespace vseg {

namespace {

enum class Kind { integer, seed, real, boolean, text };

struct KeyInfo {
  const char* name;
  Kind kind;
  const char* fallback;  // "" = resolved from other keys
};

const std::vector<KeyInfo>& table() {
  static const std::vector<KeyInfo> t{
      {"clahe.clip_limit", Kind::real, "2"},
      {"clahe.tiles_x", Kind::integer, "8"},
      {"clahe.tiles_y", Kind::integer, "8"},
      {"preprocess.gamma", Kind::real, "1.2"},
      {"model.arch", Kind::text, "unet"},
      {"model.base_channels", Kind::integer, "32"},
      {"model.depth", Kind::integer, "3"},
      {"model.dropout", Kind::real, "0.2"},
      {"model.branch_pairs", Kind::integer, "2"},
      {"train.epochs", Kind::integer, ""},
      {"train.batch_size", Kind::integer, ""},
      {"train.lr", Kind::real, "0.001"},
      {"train.seed", Kind::seed, "1"},
      {"train.patches_per_image", Kind::integer, "2000"},
      {"train.patch_size", Kind::integer, "48"},
      {"train.val_fraction", Kind::real, "0.1"},
      {"train.augment", Kind::boolean, "true"},
      {"infer.mode", Kind::text, "stride"},
      {"infer.stride", Kind::integer, "5"},
      {"infer.patch_size", Kind::integer, "48"},
      {"infer.batch_size", Kind::integer, "64"},
      {"infer.threshold", Kind::real, "0.5"},
      {"synth.count", Kind::integer, "12"},
      {"synth.size", Kind::integer, "128"},
      {"synth.vessels_min", Kind::integer, "3"},
      {"synth.vessels_max", Kind::integer, "5"},
      {"synth.width_min", Kind::real, "1"},
      {"synth.width_max", Kind::real, "4"},
      {"synth.noise_sigma", Kind::real, "6"},
      {"synth.fov_radius", Kind::real, "0.46"},
      {"synth.seed", Kind::seed, "1"},
      {"crossval.k", Kind::integer, "5"},
      {"crossval.seed", Kind::seed, "1"},
  };
  return t;
}

const KeyInfo* find_key(const std::string& key) {
  for (const auto& k : table())
    if (key == k.name) return &k;
  return nullptr;
}

int as_int(const std::string& key, const std::string& v) {
  const long long x = parse_int(v);
  if (x < INT32_MIN || x > INT32_MAX) throw Error(ErrorCode::InvalidValue, key + " out of range: " + v);
  return static_cast<int>(x);
}

std::uint64_t as_seed(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  std::size_t used = 0;
  try {
    if (!v.empty() && v[0] != '-') x = std::stoull(v, &used, 10);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size())
    throw Error(ErrorCode::InvalidValue, key + " must be an unsigned 64-bit integer, got '" + v + "'");
  return x;
}

// Re-labels a module's validation failure as a config error.
template <typename F>
void guarded(const char* group, F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidValue) throw;
    throw Error(ErrorCode::InvalidValue, std::string(group) + ": " + e.detail());
  }
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& k : table()) v.emplace_back(k.name);
    return v;
  }();
  return names;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const KeyInfo* info = find_key(key);
  if (!info) throw Error(ErrorCode::UnknownKey, "unknown config key '" + key + "'");
  const std::string value = trim(raw);
  try {
    switch (info->kind) {
      case Kind::integer: as_int(key, value); break;
      case Kind::seed: as_seed(key, value); break;
      case Kind::real: parse_double(value); break;
      case Kind::boolean: parse_bool(value); break;
      case Kind::text:
        if (key == "model.arch") nn::parse_architecture(value);
        if (key == "infer.mode") infer::parse_mode(value);
        break;
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidValue, key + ": " + e.detail());
  }
  values_[key] = value;
}

void RunConfig::load_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidValue, where + ": expected 'key = value'");
    try {
      set(trim(body.substr(0, eq)), body.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.detail());
    }
  }
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  load_text(ss.str(), path.string());
}

std::string RunConfig::get(const std::string& key) const {
  const KeyInfo* info = find_key(key);
  if (!info) throw Error(ErrorCode::UnknownKey, "unknown config key '" + key + "'");
  if (const auto it = values_.find(key); it != values_.end()) return it->second;
  if (*info->fallback) return info->fallback;
  const bool unet = model().arch == nn::Architecture::unet;
  if (key == "train.epochs") return unet ? "10" : "4";
  return unet ? "32" : "1024";  // train.batch_size
}

prep::PreprocessParams RunConfig::preprocess() const {
  prep::PreprocessParams p;
  p.clahe.clip_limit = parse_double(get("clahe.clip_limit"));
  p.clahe.tiles_x = as_int("clahe.tiles_x", get("clahe.tiles_x"));
  p.clahe.tiles_y = as_int("clahe.tiles_y", get("clahe.tiles_y"));
  p.gamma = parse_double(get("preprocess.gamma"));
  return p;
}

nn::ModelSpec RunConfig::model() const {
  nn::ModelSpec m;
  m.arch = nn::parse_architecture(get("model.arch"));
  m.base_channels = as_int("model.base_channels", get("model.base_channels"));
  m.depth = as_int("model.depth", get("model.depth"));
  m.dropout = parse_double(get("model.dropout"));
  m.branch_pairs = as_int("model.branch_pairs", get("model.branch_pairs"));
  return m;
}

train::TrainConfig RunConfig::train() const {
  train::TrainConfig t;
  t.model = model();
  t.epochs = as_int("train.epochs", get("train.epochs"));
  t.batch_size = as_int("train.batch_size", get("train.batch_size"));
  t.lr = parse_double(get("train.lr"));
  t.seed = as_seed("train.seed", get("train.seed"));
  t.patches_per_image = as_int("train.patches_per_image", get("train.patches_per_image"));
  t.patch_size = as_int("train.patch_size", get("train.patch_size"));
  t.val_fraction = parse_double(get("train.val_fraction"));
  t.augment = parse_bool(get("train.augment"));
  return t;
}

infer::InferConfig RunConfig::infer() const {
  infer::InferConfig c;
  c.mode = infer::parse_mode(get("infer.mode"));
  c.stride = as_int("infer.stride", get("infer.stride"));
  c.patch_size = as_int("infer.patch_size", get("infer.patch_size"));
  c.batch_size = as_int("infer.batch_size", get("infer.batch_size"));
  c.threshold = parse_double(get("infer.threshold"));
  return c;
}

synth::SynthConfig RunConfig::synth() const {
  synth::SynthConfig s;
  s.count = as_int("synth.count", get("synth.count"));
  s.size = as_int("synth.size", get("synth.size"));
  s.vessels_min = as_int("synth.vessels_min", get("synth.vessels_min"));
  s.vessels_max = as_int("synth.vessels_max", get("synth.vessels_max"));
  s.width_min = parse_double(get("synth.width_min"));
  s.width_max = parse_double(get("synth.width_max"));
  s.noise_sigma = parse_double(get("synth.noise_sigma"));
  s.fov_radius = parse_double(get("synth.fov_radius"));
  s.seed = as_seed("synth.seed", get("synth.seed"));
  return s;
}

int RunConfig::crossval_k() const { return as_int("crossval.k", get("crossval.k")); }
std::uint64_t RunConfig::crossval_seed() const { return as_seed("crossval.seed", get("crossval.seed")); }

void RunConfig::check() const {
  guarded("clahe/preprocess", [&] {
    const auto p = preprocess();
    prep::validate(p.clahe);
    if (!(p.gamma > 0.0)) throw Error(ErrorCode::InvalidValue, "preprocess.gamma must be > 0");
  });
  guarded("model", [&] {
    const auto m = model();
    if (m.base_channels < 1) throw Error(ErrorCode::InvalidValue, "model.base_channels must be >= 1");
    if (m.depth < 1 || m.depth > 8) throw Error(ErrorCode::InvalidValue, "model.depth must lie in [1, 8]");
    if (!(m.dropout >= 0.0 && m.dropout < 1.0)) throw Error(ErrorCode::InvalidValue, "model.dropout must lie in [0, 1)");
    if (m.branch_pairs < 1) throw Error(ErrorCode::InvalidValue, "model.branch_pairs must be >= 1");
  });
  guarded("train", [&] { train::validate(train()); });
  guarded("infer", [&] {
    const auto c = infer();
    infer::validate(c);
    const int factor = 1 << (model().depth - 1);
    if (c.patch_size % factor)
      throw Error(ErrorCode::InvalidValue, "infer.patch_size must be divisible by " + std::to_string(factor));
  });
  guarded("synth", [&] { synth::validate(synth()); });
  if (crossval_k() < 2) throw Error(ErrorCode::InvalidValue, "crossval.k must be >= 2");
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& k : table()) out += std::string(k.name) + " = " + get(k.name) + "\n";
  return out;
}

void RunConfig::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << to_text();
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace vseg
