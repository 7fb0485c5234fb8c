#include "vseg/nn/model.hpp"

#include <cmath>
#include <random>
#include <set>

#include "vseg/error.hpp"
#include "vseg/text_util.hpp"

namespace vseg::nn {

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::input: return "input";
    case LayerKind::conv3x3: return "conv3x3";
    case LayerKind::conv1x1: return "conv1x1";
    case LayerKind::relu: return "relu";
    case LayerKind::dropout: return "dropout";
    case LayerKind::maxpool2: return "maxpool2";
    case LayerKind::upsample2: return "upsample2";
    case LayerKind::concat: return "concat";
    case LayerKind::add: return "add";
    case LayerKind::batchnorm: return "batchnorm";
  }
  return "?";
}

namespace {

bool creates_values(LayerKind kind) {
  return kind == LayerKind::conv3x3 || kind == LayerKind::conv1x1 || kind == LayerKind::batchnorm ||
         kind == LayerKind::add;
}

}  // namespace

const char* architecture_name(Architecture arch) { return arch == Architecture::unet ? "unet" : "laddernet"; }

Architecture parse_architecture(std::string_view s) {
  if (s == "unet") return Architecture::unet;
  if (s == "laddernet") return Architecture::laddernet;
  throw Error(ErrorCode::InvalidValue, "unknown model '" + std::string(s) + "' (expected unet or laddernet)");
}

template <typename T>
Model<T>::Model(ModelSpec spec) : spec_(spec) {}

template <typename T>
Model<T>::Model(ModelSpec spec, std::vector<Node> nodes, std::vector<Parameter<T>> params, int output)
    : spec_(spec), nodes_(std::move(nodes)), params_(std::move(params)), output_(output) {}

template <typename T>
int Model<T>::add_param(const std::string& name, std::vector<std::size_t> shape, bool trainable, T fill) {
  Parameter<T> p;
  p.name = name;
  p.value = Tensor<T>(shape, fill);
  if (trainable) p.grad = Tensor<T>(std::move(shape));
  p.trainable = trainable;
  params_.push_back(std::move(p));
  return static_cast<int>(params_.size()) - 1;
}

template <typename T>
int Model<T>::add_node(Node node) {
  for (int in : node.inputs)
    if (in < 0 || in >= static_cast<int>(nodes_.size()))
      throw Error(ErrorCode::InvalidArgument, "node input refers to a later node");
  nodes_.push_back(std::move(node));
  output_ = static_cast<int>(nodes_.size()) - 1;
  return output_;
}

template <typename T>
int Model<T>::input() {
  return add_node({.kind = LayerKind::input, .name = "input", .inputs = {}});
}

template <typename T>
int Model<T>::conv(int in, std::size_t in_c, std::size_t out_c, int k, const std::string& name) {
  if (k != 1 && k != 3) throw Error(ErrorCode::InvalidArgument, "kernel size must be 1 or 3");
  const int w = add_param(name + ".weight", {out_c, in_c, std::size_t(k), std::size_t(k)}, true);
  const int b = add_param(name + ".bias", {out_c}, true);
  return add_node({.kind = k == 3 ? LayerKind::conv3x3 : LayerKind::conv1x1,
                   .name = name,
                   .inputs = {in},
                   .weight = w,
                   .bias = b});
}

template <typename T>
int Model<T>::conv_shared(int in, int weight, int bias, const std::string& name) {
  const int k = static_cast<int>(params_.at(weight).value.dim(2));
  for (auto& n : nodes_)
    if (n.weight == weight && (n.kind == LayerKind::conv3x3 || n.kind == LayerKind::conv1x1)) n.shared_kernel = true;
  return add_node({.kind = k == 3 ? LayerKind::conv3x3 : LayerKind::conv1x1,
                   .name = name,
                   .inputs = {in},
                   .weight = weight,
                   .bias = bias,
                   .shared_kernel = true});
}

template <typename T>
int Model<T>::relu(int in) {
  return add_node({.kind = LayerKind::relu, .name = nodes_.at(in).name + ".relu", .inputs = {in}});
}

template <typename T>
int Model<T>::dropout(int in, double rate) {
  return add_node({.kind = LayerKind::dropout, .name = nodes_.at(in).name + ".dropout", .inputs = {in}, .rate = rate});
}

template <typename T>
int Model<T>::maxpool2(int in) {
  return add_node({.kind = LayerKind::maxpool2, .name = nodes_.at(in).name + ".pool", .inputs = {in}});
}

template <typename T>
int Model<T>::upsample2(int in) {
  return add_node({.kind = LayerKind::upsample2, .name = nodes_.at(in).name + ".up", .inputs = {in}});
}

template <typename T>
int Model<T>::concat(int a, int b) {
  return add_node({.kind = LayerKind::concat, .name = nodes_.at(a).name + "+concat", .inputs = {a, b}});
}

template <typename T>
int Model<T>::add(int a, int b) {
  return add_node({.kind = LayerKind::add, .name = nodes_.at(a).name + "+add", .inputs = {a, b}});
}

template <typename T>
int Model<T>::batchnorm(int in, std::size_t channels, const std::string& name) {
  const int g = add_param(name + ".gamma", {channels}, true, T(1));
  const int b = add_param(name + ".beta", {channels}, true, T(0));
  const int rm = add_param(name + ".running_mean", {channels}, false, T(0));
  const int rv = add_param(name + ".running_var", {channels}, false, T(1));
  return add_node({.kind = LayerKind::batchnorm,
                   .name = name,
                   .inputs = {in},
                   .weight = g,
                   .bias = b,
                   .running_mean = rm,
                   .running_var = rv});
}

template <typename T>
int Model<T>::residual_block(int in, std::size_t channels, double rate, const std::string& name) {
  const int first = conv(in, channels, channels, 3, name + ".conv");
  const int w = nodes_[first].weight, b = nodes_[first].bias;
  nodes_[first].shared_kernel = true;
  int y = relu(batchnorm(first, channels, name + ".bn1"));
  y = dropout(y, rate);
  y = conv_shared(y, w, b, name + ".conv_b");
  y = relu(batchnorm(y, channels, name + ".bn2"));
  return add(in, y);
}

template <typename T>
void Model<T>::init_weights(std::uint64_t seed) {
  std::set<int> done;
  for (const auto& n : nodes_) {
    if (n.kind == LayerKind::conv3x3 || n.kind == LayerKind::conv1x1) {
      if (!done.insert(n.weight).second) continue;
      auto& w = params_[n.weight].value;
      const double fan_in = static_cast<double>(w.dim(1) * w.dim(2) * w.dim(3));
      std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(n.weight)));
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
      for (auto& v : w.values()) v = static_cast<T>(dist(rng));
      params_[n.bias].value.fill(T(0));
    } else if (n.kind == LayerKind::batchnorm) {
      params_[n.weight].value.fill(T(1));
      params_[n.bias].value.fill(T(0));
      params_[n.running_mean].value.fill(T(0));
      params_[n.running_var].value.fill(T(1));
    }
  }
}

template <typename T>
void Model<T>::check_input(const Tensor<T>& x) const {
  if (x.rank() != 4) throw Error(ErrorCode::ShapeMismatch, "model input must be (n,c,h,w)");
  const std::size_t factor = std::size_t{1} << (spec_.depth - 1);
  if (x.h() % factor || x.w() % factor)
    throw Error(ErrorCode::IndivisibleInput, "input " + std::to_string(x.h()) + "x" + std::to_string(x.w()) +
                                                 " not divisible by " + std::to_string(factor));
  if (output_ < 0) throw Error(ErrorCode::InvalidArgument, "model has no output node");
}

template <typename T>
Tensor<T> Model<T>::run_node(std::size_t i, const std::vector<Tensor<T>>& acts, Mode mode, std::uint64_t seed,
                             Tape<T>& aux) const {
  const Node& n = nodes_[i];
  auto in = [&](int k) -> const Tensor<T>& { return acts[n.inputs[k]]; };
  Tensor<T> y;
  switch (n.kind) {
    case LayerKind::input:
      throw Error(ErrorCode::InvalidArgument, "input node evaluated as a layer");
    case LayerKind::conv3x3:
    case LayerKind::conv1x1: {
      const auto& w = params_[n.weight].value;
      if (n.shared_kernel && in(0).rank() == 4 && in(0).c() != w.dim(1))
        throw Error(ErrorCode::ChannelMismatch, n.name + ": residual block over " + std::to_string(w.dim(1)) +
                                                    " channels got " + std::to_string(in(0).c()));
      y = conv_forward(in(0), w, params_[n.bias].value);
      break;
    }
    case LayerKind::relu:
      y = relu_forward(in(0));
      break;
    case LayerKind::dropout:
      y = dropout_forward(in(0), n.rate, mode, mix_seed(seed, i), aux.masks[i]);
      break;
    case LayerKind::maxpool2:
      y = maxpool2_forward(in(0), aux.argmax[i]);
      break;
    case LayerKind::upsample2:
      y = upsample2_forward(in(0));
      break;
    case LayerKind::concat:
      y = concat_forward(in(0), in(1));
      break;
    case LayerKind::add:
      y = add_forward(in(0), in(1));
      break;
    case LayerKind::batchnorm: {
      Tensor<T> rm = params_[n.running_mean].value;
      Tensor<T> rv = params_[n.running_var].value;
      y = batchnorm_forward(in(0), params_[n.weight].value, params_[n.bias].value, rm, rv, mode, aux.bn[i]);
      if (mode == Mode::train) aux.running[i] = {std::move(rm), std::move(rv)};
      break;
    }
  }
  // masking, pooling and copying layers cannot turn finite values into
  // non-finite ones, so only the arithmetic layers and the output are checked
  if (creates_values(n.kind) || static_cast<int>(i) == output_)
    check_finite(y, n.name + " (" + layer_kind_name(n.kind) + ")");
  return y;
}

template <typename T>
const Tensor<T>& Model<T>::forward(const Tensor<T>& x, Tape<T>& tape, Mode mode, std::uint64_t seed) {
  check_input(x);
  const std::size_t count = nodes_.size();
  tape.mode = mode;
  tape.acts.assign(count, {});
  tape.masks.assign(count, {});
  tape.argmax.assign(count, {});
  tape.bn.assign(count, {});
  tape.running.assign(count, {});
  for (std::size_t i = 0; i <= static_cast<std::size_t>(output_); ++i) {
    if (nodes_[i].kind == LayerKind::input) {
      tape.acts[i] = x;
      continue;
    }
    tape.acts[i] = run_node(i, tape.acts, mode, seed, tape);
  }
  if (mode == Mode::train) {
    for (std::size_t i = 0; i < count; ++i) {
      if (nodes_[i].kind != LayerKind::batchnorm || tape.running[i].first.empty()) continue;
      params_[nodes_[i].running_mean].value = std::move(tape.running[i].first);
      params_[nodes_[i].running_var].value = std::move(tape.running[i].second);
    }
  }
  return tape.acts[output_];
}

template <typename T>
Tensor<T> Model<T>::backward(Tape<T>& tape, const Tensor<T>& grad_output, bool want_input_grad) {
  if (tape.acts.size() != nodes_.size() || tape.acts[output_].empty())
    throw Error(ErrorCode::InvalidArgument, "backward without a matching forward");
  if (grad_output.shape() != tape.acts[output_].shape())
    throw Error(ErrorCode::ShapeMismatch, "grad_output " + shape_string(grad_output.shape()) + " vs output " +
                                              shape_string(tape.acts[output_].shape()));
  std::vector<Tensor<T>> grads(nodes_.size());
  auto accumulate = [&](int j, Tensor<T>&& g, bool check = false) {
    if (check) check_finite(g, nodes_[j].name + " (gradient)");
    if (grads[j].empty()) {
      grads[j] = std::move(g);
    } else {
      auto& dst = grads[j];
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g[k];
    }
  };
  grads[output_] = grad_output;
  Tensor<T> input_grad;

  for (int i = output_; i >= 0; --i) {
    if (grads[i].empty()) continue;
    Tensor<T> g = std::move(grads[i]);
    const Node& n = nodes_[i];
    switch (n.kind) {
      case LayerKind::input:
        if (want_input_grad) input_grad = std::move(g);
        break;
      case LayerKind::conv3x3:
      case LayerKind::conv1x1: {
        const int src = n.inputs[0];
        const bool need = want_input_grad || nodes_[src].kind != LayerKind::input;
        Tensor<T> gx;
        conv_backward(g, tape.acts[src], params_[n.weight].value, need ? &gx : nullptr, params_[n.weight].grad,
                      params_[n.bias].grad);
        if (need) accumulate(src, std::move(gx), true);
        break;
      }
      case LayerKind::relu:
        accumulate(n.inputs[0], relu_backward(std::move(g), tape.acts[n.inputs[0]]));
        break;
      case LayerKind::dropout:
        accumulate(n.inputs[0], dropout_backward(std::move(g), tape.masks[i]));
        break;
      case LayerKind::maxpool2:
        accumulate(n.inputs[0], maxpool2_backward(g, tape.argmax[i]));
        break;
      case LayerKind::upsample2:
        accumulate(n.inputs[0], upsample2_backward(g));
        break;
      case LayerKind::concat: {
        Tensor<T> ga, gb;
        concat_backward(g, tape.acts[n.inputs[0]].c(), ga, gb);
        accumulate(n.inputs[0], std::move(ga));
        accumulate(n.inputs[1], std::move(gb));
        break;
      }
      case LayerKind::add: {
        Tensor<T> copy = g;
        accumulate(n.inputs[0], std::move(copy));
        accumulate(n.inputs[1], std::move(g));
        break;
      }
      case LayerKind::batchnorm:
        accumulate(n.inputs[0], batchnorm_backward(g, tape.acts[n.inputs[0]], params_[n.weight].value, tape.bn[i],
                                                   params_[n.weight].grad, params_[n.bias].grad),
                   true);
        break;
    }
  }
  return input_grad;
}

template <typename T>
Tensor<T> Model<T>::predict(const Tensor<T>& x, std::size_t chunk) const {
  check_input(x);
  if (chunk == 0) chunk = 1;
  const std::size_t count = nodes_.size();
  std::vector<int> last_use(count, -1);
  for (std::size_t i = 0; i < count; ++i)
    for (int in : nodes_[i].inputs) last_use[in] = static_cast<int>(i);

  const std::size_t per_sample = x.c() * x.h() * x.w();
  Tensor<T> result;
  for (std::size_t start = 0; start < x.n(); start += chunk) {
    const std::size_t len = std::min(chunk, x.n() - start);
    Tape<T> aux;
    aux.acts.assign(count, {});
    aux.masks.assign(count, {});
    aux.argmax.assign(count, {});
    aux.bn.assign(count, {});
    aux.running.assign(count, {});
    for (std::size_t i = 0; i <= static_cast<std::size_t>(output_); ++i) {
      if (nodes_[i].kind == LayerKind::input) {
        Tensor<T> part({len, x.c(), x.h(), x.w()});
        std::copy_n(x.data() + start * per_sample, len * per_sample, part.data());
        aux.acts[i] = std::move(part);
        continue;
      }
      aux.acts[i] = run_node(i, aux.acts, Mode::eval, 0, aux);
      aux.masks[i].release();
      for (int in : nodes_[i].inputs)
        if (last_use[in] == static_cast<int>(i) && in != output_) aux.acts[in].release();
    }
    const Tensor<T>& out = aux.acts[output_];
    if (result.empty()) result = Tensor<T>({x.n(), out.c(), out.h(), out.w()});
    std::copy_n(out.data(), out.size(), result.data() + start * out.c() * out.h() * out.w());
  }
  return result;
}

template <typename T>
void Model<T>::zero_grad() {
  for (auto& p : params_)
    if (p.trainable) p.grad.fill(T(0));
}

template <typename T>
std::size_t Model<T>::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : params_)
    if (p.trainable) total += p.value.size();
  return total;
}

template <typename T>
std::size_t Model<T>::conv_kernel_count() const {
  std::set<int> kernels;
  for (const auto& n : nodes_)
    if (n.kind == LayerKind::conv3x3 || n.kind == LayerKind::conv1x1) kernels.insert(n.weight);
  return kernels.size();
}

template <typename T>
const Parameter<T>* Model<T>::find(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

namespace {

void check_hyper(int base_channels, int depth, double dropout) {
  if (base_channels < 1) throw Error(ErrorCode::InvalidValue, "base_channels must be >= 1");
  if (depth < 1 || depth > 8) throw Error(ErrorCode::InvalidValue, "depth must lie in [1,8]");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorCode::InvalidValue, "dropout must lie in [0,1)");
}

}  // namespace

template <typename T>
Model<T> build_unet(int base_channels, int depth, double dropout) {
  check_hyper(base_channels, depth, dropout);
  Model<T> m(ModelSpec{.arch = Architecture::unet,
                       .base_channels = base_channels,
                       .depth = depth,
                       .dropout = dropout,
                       .branch_pairs = 1});
  auto channels = [&](int level) { return static_cast<std::size_t>(base_channels) << level; };

  int x = m.input();
  std::size_t in_c = 1;
  std::vector<int> skips;
  for (int l = 0; l < depth; ++l) {
    if (l > 0) x = m.maxpool2(x);
    const std::string name = "enc" + std::to_string(l);
    x = m.relu(m.conv(x, in_c, channels(l), 3, name + ".conv1"));
    x = m.dropout(x, dropout);
    x = m.relu(m.conv(x, channels(l), channels(l), 3, name + ".conv2"));
    skips.push_back(x);
    in_c = channels(l);
  }
  for (int l = depth - 2; l >= 0; --l) {
    const std::string name = "dec" + std::to_string(l);
    x = m.concat(skips[l], m.upsample2(x));
    x = m.relu(m.conv(x, channels(l) + channels(l + 1), channels(l), 3, name + ".conv1"));
    x = m.dropout(x, dropout);
    x = m.relu(m.conv(x, channels(l), channels(l), 3, name + ".conv2"));
  }
  m.conv(x, channels(0), 2, 1, "head");
  return m;
}

template <typename T>
Model<T> build_laddernet(int base_channels, int depth, int branch_pairs, double dropout) {
  check_hyper(base_channels, depth, dropout);
  if (branch_pairs < 1) throw Error(ErrorCode::InvalidValue, "branch_pairs must be >= 1");
  Model<T> m(ModelSpec{.arch = Architecture::laddernet,
                       .base_channels = base_channels,
                       .depth = depth,
                       .dropout = dropout,
                       .branch_pairs = branch_pairs});
  auto channels = [&](int level) { return static_cast<std::size_t>(base_channels) << level; };

  int x = m.relu(m.conv(m.input(), 1, channels(0), 3, "stem"));
  std::vector<int> prev_dec;  // decoder outputs of the previous pair, per level
  for (int p = 0; p < branch_pairs; ++p) {
    const std::string pair = "pair" + std::to_string(p);
    std::vector<int> enc(depth);
    int h = p == 0 ? x : prev_dec[0];
    for (int l = 0; l < depth; ++l) {
      if (l > 0) {
        h = m.maxpool2(h);
        h = m.relu(m.conv(h, channels(l - 1), channels(l), 3, pair + ".down" + std::to_string(l)));
        if (p > 0) h = m.add(h, prev_dec[l]);
      }
      h = m.residual_block(h, channels(l), dropout, pair + ".enc" + std::to_string(l));
      enc[l] = h;
    }
    std::vector<int> dec(depth);
    dec[depth - 1] = enc[depth - 1];
    for (int l = depth - 2; l >= 0; --l) {
      int u = m.upsample2(dec[l + 1]);
      u = m.relu(m.conv(u, channels(l + 1), channels(l), 3, pair + ".up" + std::to_string(l)));
      dec[l] = m.residual_block(m.add(u, enc[l]), channels(l), dropout, pair + ".dec" + std::to_string(l));
    }
    prev_dec = std::move(dec);
  }
  m.conv(prev_dec[0], channels(0), 2, 1, "head");
  return m;
}

template <typename T>
Model<T> build_model(const ModelSpec& spec) {
  if (spec.arch == Architecture::unet) return build_unet<T>(spec.base_channels, spec.depth, spec.dropout);
  return build_laddernet<T>(spec.base_channels, spec.depth, spec.branch_pairs, spec.dropout);
}

template class Model<float>;
template class Model<double>;
template Model<float> build_unet<float>(int, int, double);
template Model<double> build_unet<double>(int, int, double);
template Model<float> build_laddernet<float>(int, int, int, double);
template Model<double> build_laddernet<double>(int, int, int, double);
template Model<float> build_model<float>(const ModelSpec&);
template Model<double> build_model<double>(const ModelSpec&);

}  // namespace vseg::nn
