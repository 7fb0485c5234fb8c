#pragma once

// Flat run configuration. Every setting has a dotted key ("train.epochs");
// files hold `key = value` lines with '#' comments and command-line flags
// use the same names.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vseg/infer.hpp"
#include "vseg/nn/model.hpp"
#include "vseg/preprocess.hpp"
#include "vseg/synth.hpp"
#include "vseg/train.hpp"

namespace vseg {

class RunConfig {
 public:
  RunConfig() = default;

  /// Every recognised key, in file order.
  static const std::vector<std::string>& keys();

  /// Throws UnknownKey for unrecognised keys and InvalidValue when the value
  /// does not parse as the key's type.
  void set(const std::string& key, const std::string& value);
  void load_file(const std::filesystem::path& path);
  void load_text(const std::string& text, const std::string& origin = "<text>");

  /// Effective value (explicit or default) as text.
  std::string get(const std::string& key) const;
  bool is_set(const std::string& key) const { return values_.count(key) != 0; }

  /// Runs every module's validation; failures become InvalidValue naming the key group.
  void check() const;

  prep::PreprocessParams preprocess() const;
  nn::ModelSpec model() const;
  /// Epochs and batch size default to 10/32 for unet and 4/1024 for laddernet.
  train::TrainConfig train() const;
  infer::InferConfig infer() const;
  synth::SynthConfig synth() const;
  int crossval_k() const;
  std::uint64_t crossval_seed() const;

  /// All effective values, one `key = value` line each.
  std::string to_text() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace vseg
