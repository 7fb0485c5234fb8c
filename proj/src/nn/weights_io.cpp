#include "vseg/nn/weights_io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>

#include "vseg/error.hpp"

namespace vseg::nn {

namespace {

constexpr std::uint32_t kVersion = 1;
constexpr const char* kArchName = "meta.arch";

class Writer {
 public:
  void u8(std::uint8_t v) { out.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const std::string& s) { out.insert(out.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes(b) {}
  void need(std::size_t n) const {
    if (pos + n > bytes.size()) throw Error(ErrorCode::TruncatedData, "weights file ends early");
  }
  std::uint8_t u8() {
    need(1);
    return bytes[pos++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
    return s;
  }
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;
};

NamedTensor arch_tensor(const ModelSpec& spec) {
  return {kArchName,
          {5},
          {spec.arch == Architecture::unet ? 0.0f : 1.0f, static_cast<float>(spec.base_channels),
           static_cast<float>(spec.depth), static_cast<float>(spec.branch_pairs), static_cast<float>(spec.dropout)}};
}

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open weights file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::vector<NamedTensor> model_tensors(const Model<float>& model) {
  std::vector<NamedTensor> out{arch_tensor(model.spec())};
  for (const auto& p : model.parameters()) {
    NamedTensor t;
    t.name = p.name;
    for (auto d : p.value.shape()) t.dims.push_back(static_cast<std::uint32_t>(d));
    t.values.assign(p.value.values().begin(), p.value.values().end());
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<std::uint8_t> encode_weights(const std::vector<NamedTensor>& tensors) {
  Writer w;
  w.raw("FCNW");
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    if (t.name.size() > 0xffff) throw Error(ErrorCode::InvalidArgument, "tensor name too long");
    if (t.dims.size() > 0xff) throw Error(ErrorCode::InvalidArgument, "tensor rank too large");
    w.u16(static_cast<std::uint16_t>(t.name.size()));
    w.raw(t.name);
    w.u8(static_cast<std::uint8_t>(t.dims.size()));
    std::size_t count = 1;
    for (auto d : t.dims) {
      w.u32(d);
      count *= d;
    }
    if (count != t.values.size()) throw Error(ErrorCode::ShapeMismatch, t.name + ": payload size differs from dims");
    for (float v : t.values) w.f32(v);
  }
  return std::move(w.out);
}

std::vector<NamedTensor> decode_weights(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || r.str(4) != "FCNW") throw Error(ErrorCode::BadMagic, "not an FCNW weights file");
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw Error(ErrorCode::VersionMismatch, "weights version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.str(r.u16());
    const std::uint8_t rank = r.u8();
    std::size_t n = 1;
    for (std::uint8_t k = 0; k < rank; ++k) {
      t.dims.push_back(r.u32());
      n *= t.dims.back();
    }
    r.need(4 * n);
    t.values.resize(n);
    for (auto& v : t.values) v = r.f32();
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<std::uint8_t> encode_model(const Model<float>& model) { return encode_weights(model_tensors(model)); }

void save_weights(const Model<float>& model, const std::filesystem::path& path) {
  const auto bytes = encode_weights(model_tensors(model));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

void load_weights_into(Model<float>& model, const std::filesystem::path& path) {
  const auto tensors = decode_weights(read_all(path));
  std::map<std::string, const NamedTensor*> by_name;
  for (const auto& t : tensors)
    if (t.name != kArchName) by_name[t.name] = &t;
  auto& params = model.parameters();
  if (by_name.size() != params.size())
    throw Error(ErrorCode::ShapeMismatch, path.string() + ": file holds " + std::to_string(by_name.size()) +
                                              " tensors, model has " + std::to_string(params.size()));
  for (const auto& p : params) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw Error(ErrorCode::ShapeMismatch, path.string() + ": missing tensor " + p.name);
    std::vector<std::size_t> dims(it->second->dims.begin(), it->second->dims.end());
    if (dims != p.value.shape())
      throw Error(ErrorCode::ShapeMismatch, p.name + ": file " + shape_string(dims) + " vs model " +
                                                shape_string(p.value.shape()));
  }
  for (auto& p : params) {
    const auto& src = by_name[p.name]->values;
    std::copy(src.begin(), src.end(), p.value.data());
  }
}

Model<float> load_model(const std::filesystem::path& path) {
  const auto tensors = decode_weights(read_all(path));
  const NamedTensor* arch = nullptr;
  for (const auto& t : tensors)
    if (t.name == kArchName) arch = &t;
  if (!arch || arch->values.size() != 5)
    throw Error(ErrorCode::ShapeMismatch, path.string() + ": missing architecture record");
  ModelSpec spec;
  spec.arch = arch->values[0] == 0.0f ? Architecture::unet : Architecture::laddernet;
  spec.base_channels = static_cast<int>(arch->values[1]);
  spec.depth = static_cast<int>(arch->values[2]);
  spec.branch_pairs = static_cast<int>(arch->values[3]);
  spec.dropout = std::round(static_cast<double>(arch->values[4]) * 1e6) / 1e6;
  Model<float> model = build_model<float>(spec);
  load_weights_into(model, path);
  return model;
}

}  // namespace vseg::nn
