#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vseg/nn/ops.hpp"
#include "vseg/nn/tensor.hpp"

namespace vseg::nn {

enum class LayerKind { input, conv3x3, conv1x1, relu, dropout, maxpool2, upsample2, concat, add, batchnorm };

const char* layer_kind_name(LayerKind kind);

struct Node {
  LayerKind kind = LayerKind::input;
  std::string name;
  std::vector<int> inputs;
  int weight = -1;  // conv kernel / batchnorm scale (parameter index)
  int bias = -1;    // conv bias / batchnorm shift
  int running_mean = -1;
  int running_var = -1;
  double rate = 0.0;  // dropout
  bool shared_kernel = false;
};

enum class Architecture { unet, laddernet };

struct ModelSpec {
  Architecture arch = Architecture::unet;
  int base_channels = 32;
  int depth = 3;
  double dropout = 0.2;
  int branch_pairs = 2;  // laddernet only
  bool operator==(const ModelSpec&) const = default;
};

const char* architecture_name(Architecture arch);
Architecture parse_architecture(std::string_view s);

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;          // same shape as value; empty for buffers
  bool trainable = true;   // false for batchnorm running statistics
};

/// Per-forward activation storage. One tape per concurrent caller.
template <typename T>
struct Tape {
  Mode mode = Mode::eval;
  std::vector<Tensor<T>> acts;
  std::vector<Tensor<T>> masks;
  std::vector<std::vector<std::uint8_t>> argmax;
  std::vector<BatchNormCache> bn;
  std::vector<std::pair<Tensor<T>, Tensor<T>>> running;  // updated batchnorm stats
};

template <typename T>
class Model {
 public:
  explicit Model(ModelSpec spec = {});
  Model(ModelSpec spec, std::vector<Node> nodes, std::vector<Parameter<T>> params, int output);

  // graph construction; each returns the new node index
  int input();
  int conv(int in, std::size_t in_c, std::size_t out_c, int k, const std::string& name);
  /// Convolution reusing an existing kernel/bias pair.
  int conv_shared(int in, int weight, int bias, const std::string& name);
  int relu(int in);
  int dropout(int in, double rate);
  int maxpool2(int in);
  int upsample2(int in);
  int concat(int a, int b);
  int add(int a, int b);
  int batchnorm(int in, std::size_t channels, const std::string& name);
  /// x + relu(bn2(conv(dropout(relu(bn1(conv(x, w))), w)))) with one kernel w.
  int residual_block(int in, std::size_t channels, double rate, const std::string& name);
  void set_output(int node) { output_ = node; }

  /// He-normal kernels, zero biases, identity batchnorm.
  void init_weights(std::uint64_t seed);

  /// Full forward keeping every activation in `tape` for backward. Train
  /// mode updates batchnorm running statistics.
  const Tensor<T>& forward(const Tensor<T>& x, Tape<T>& tape, Mode mode, std::uint64_t seed = 0);

  /// Accumulates parameter gradients; returns d loss / d input when
  /// `want_input_grad` is set.
  Tensor<T> backward(Tape<T>& tape, const Tensor<T>& grad_output, bool want_input_grad = false);

  /// Eval-mode forward that processes the batch in chunks and frees
  /// activations as soon as they are consumed. Safe to call concurrently.
  Tensor<T> predict(const Tensor<T>& x, std::size_t chunk = 64) const;

  void zero_grad();
  std::size_t parameter_count() const;
  std::size_t conv_kernel_count() const;

  const ModelSpec& spec() const { return spec_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::vector<Parameter<T>>& parameters() { return params_; }
  const std::vector<Parameter<T>>& parameters() const { return params_; }
  int output() const { return output_; }
  const Parameter<T>* find(std::string_view name) const;

  template <typename U>
  Model<U> converted() const {
    std::vector<Parameter<U>> ps;
    for (const auto& p : params_) {
      Parameter<U> q;
      q.name = p.name;
      q.trainable = p.trainable;
      q.value = Tensor<U>(p.value.shape());
      for (std::size_t i = 0; i < p.value.size(); ++i) q.value[i] = static_cast<U>(p.value[i]);
      if (p.trainable) q.grad = Tensor<U>(p.value.shape());
      ps.push_back(std::move(q));
    }
    return Model<U>(spec_, nodes_, std::move(ps), output_);
  }

 private:
  int add_param(const std::string& name, std::vector<std::size_t> shape, bool trainable, T fill = T(0));
  int add_node(Node node);
  Tensor<T> run_node(std::size_t i, const std::vector<Tensor<T>>& acts, Mode mode, std::uint64_t seed,
                     Tape<T>& aux) const;
  void check_input(const Tensor<T>& x) const;

  ModelSpec spec_;
  std::vector<Node> nodes_;
  std::vector<Parameter<T>> params_;
  int output_ = -1;
};

template <typename T>
Model<T> build_unet(int base_channels = 32, int depth = 3, double dropout = 0.2);

template <typename T>
Model<T> build_laddernet(int base_channels = 32, int depth = 3, int branch_pairs = 2, double dropout = 0.2);

template <typename T>
Model<T> build_model(const ModelSpec& spec);

}  // namespace vseg::nn
