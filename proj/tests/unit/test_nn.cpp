#include <cmath>
#include <map>

#include "../support/grad_suite.hpp"
#include "../support/oracles.hpp"
#include "doctest.h"
#include "test_util.hpp"
#include "vseg/error.hpp"
#include "vseg/nn/optim.hpp"
#include "vseg/nn/weights_io.hpp"

using namespace vseg;
using namespace vseg::nn;

namespace {

Tensor<float> filled(std::vector<std::size_t> shape, std::vector<float> v) {
  Tensor<float> t(std::move(shape));
  REQUIRE(v.size() == t.size());
  std::copy(v.begin(), v.end(), t.data());
  return t;
}

}  // namespace

TEST_CASE("finite-difference gradient suite") {
  for (const auto& c : gradcheck::run_suite()) {
    INFO(c.name << " worst " << c.report.worst);
    CHECK(c.report.checked >= 10);
    CHECK(c.report.max_rel_error < 1e-4);
  }
}

TEST_CASE("conv forward examples") {
  Tensor<float> w({1, 1, 3, 3});
  w.at(0, 0, 1, 1) = 1;
  const auto y = conv_forward(filled({1, 1, 1, 1}, {0.37f}), w, Tensor<float>({1}));
  CHECK(y.shape() == std::vector<std::size_t>{1, 1, 1, 1});
  CHECK(y[0] == 0.37f);

  const auto ones = conv_forward(Tensor<float>({1, 1, 3, 3}, 1.0f), Tensor<float>({1, 1, 3, 3}, 1.0f),
                                 Tensor<float>({1}));
  CHECK(ones.storage() == std::vector<float>{4, 6, 4, 6, 9, 6, 4, 6, 4});

  CHECK_THROWS_AS(conv_forward(Tensor<float>({1, 2, 3, 3}), w, Tensor<float>({1})), Error);
}

TEST_CASE("pooling, upsampling and dropout examples") {
  std::vector<std::uint8_t> arg;
  const auto x = filled({1, 1, 2, 2}, {1, 2, 3, 4});
  const auto y = maxpool2_forward(x, arg);
  CHECK(y.size() == 1);
  CHECK(y[0] == 4);
  const auto g = maxpool2_backward(filled({1, 1, 1, 1}, {1}), arg);
  CHECK(g.storage() == std::vector<float>{0, 0, 0, 1});

  maxpool2_forward(Tensor<float>({1, 1, 2, 2}, 5.0f), arg);
  CHECK(maxpool2_backward(filled({1, 1, 1, 1}, {1}), arg).storage() == std::vector<float>{1, 0, 0, 0});

  try {
    maxpool2_forward(Tensor<float>({1, 1, 3, 2}), arg);
    FAIL("expected OddSpatialDims");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OddSpatialDims);
  }

  const auto up = upsample2_forward(x);
  CHECK(up.storage() == std::vector<float>{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4});

  auto r = gradcheck::random_tensor({2, 3, 4, 4}, 5);
  Tensor<double> mask;
  CHECK(dropout_forward(r, 0.2, Mode::eval, 1, mask) == r);
  CHECK(dropout_forward(r, 0.0, Mode::train, 1, mask) == r);

  Tensor<double> big({1, 1, 100, 100}, 1.0);
  const auto d = dropout_forward(big, 0.2, Mode::train, 3, mask);
  std::size_t zeros = 0;
  for (double v : d.values()) {
    if (v == 0.0) ++zeros;
    else CHECK(v == doctest::Approx(1.25));
  }
  CHECK(zeros > 1800);
  CHECK(zeros < 2200);
  CHECK(dropout_forward(big, 0.2, Mode::train, 3, mask) == d);
}

TEST_CASE("batchnorm normalizes a standardized batch to itself") {
  // per channel: values {-1, 1} repeated, mean 0 variance 1
  Tensor<double> x({2, 2, 1, 2});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (i % 2) ? 1.0 : -1.0;
  Tensor<double> gamma({2}, 1.0), beta({2}), rm({2}), rv({2}, 1.0);
  BatchNormCache cache;
  const auto y = batchnorm_forward(x, gamma, beta, rm, rv, Mode::train, cache);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - x[i]) < 1e-5);
  CHECK(rm[0] == doctest::Approx(0.0));
  CHECK(rv[0] == doctest::Approx(1.0));

  Tensor<double> rm2({2}, 2.0), rv2({2}, 4.0);
  const auto ye = batchnorm_forward(x, gamma, beta, rm2, rv2, Mode::eval, cache);
  CHECK(ye[1] == doctest::Approx((1.0 - 2.0) / std::sqrt(4.0 + kBatchNormEps)));
  CHECK(rm2[0] == 2.0);
}

TEST_CASE("softmax cross-entropy limits") {
  std::vector<std::uint8_t> labels{0, 1, 1, 0};
  const auto eq = softmax_xent(Tensor<double>({1, 2, 2, 2}, 0.3), labels);
  CHECK(eq.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Tensor<double> sat({1, 2, 2, 2});
  for (std::size_t p = 0; p < 4; ++p) sat[labels[p] * 4 + p] = 20.0;
  const auto s = softmax_xent(sat, labels);
  CHECK(s.loss >= 0.0);
  CHECK(s.loss < 1e-8);

  auto logits = gradcheck::random_tensor({3, 2, 4, 4}, 8);
  const auto p0 = softmax_channel(logits, 0), p1 = softmax_channel(logits, 1);
  for (std::size_t i = 0; i < p0.size(); ++i) CHECK(std::abs(p0[i] + p1[i] - 1.0f) < 1e-6);

  CHECK_THROWS_AS(softmax_xent(Tensor<double>({1, 3, 2, 2}), labels), Error);
}

TEST_CASE("shared residual block") {
  Model<double> m = gradcheck::residual_model();
  CHECK(m.conv_kernel_count() == 1);
  CHECK(m.parameter_count() == 3 * 3 * 9 + 3 + 4 * 3);

  SUBCASE("zero kernel passes the input through") {
    for (auto& p : m.parameters()) {
      if (p.name.ends_with(".weight")) p.value.fill(0.0);
      if (p.name.ends_with(".gamma")) p.value.fill(1.0);
      if (p.name.ends_with(".beta")) p.value.fill(0.0);
    }
    const auto x = gradcheck::random_tensor({2, 3, 4, 4}, 3);
    Tape<double> tape;
    CHECK(m.forward(x, tape, Mode::train, 1) == x);
  }

  SUBCASE("shared gradient is the sum of both conv sites") {
    // same graph, two independent kernels initialised to the shared value
    Model<double> u(m.spec());
    const int in = u.input();
    int y = u.relu(u.batchnorm(u.conv(in, 3, 3, 3, "blk.conv"), 3, "blk.bn1"));
    y = u.dropout(y, 0.2);
    y = u.relu(u.batchnorm(u.conv(y, 3, 3, 3, "blk.conv_b"), 3, "blk.bn2"));
    u.add(in, y);
    std::map<std::string, Tensor<double>> src;
    for (const auto& p : m.parameters()) src[p.name] = p.value;
    for (auto& p : u.parameters()) p.value = src.count(p.name) ? src[p.name] : src["blk.conv" + p.name.substr(10)];

    const auto x = gradcheck::random_tensor({2, 3, 4, 4}, 4);
    Tape<double> t1, t2;
    const auto& out1 = m.forward(x, t1, Mode::train, 7);
    const auto& out2 = u.forward(x, t2, Mode::train, 7);
    CHECK(out1 == out2);
    const auto r = gradcheck::random_tensor(out1.shape(), 6);
    m.zero_grad();
    u.zero_grad();
    m.backward(t1, r);
    u.backward(t2, r);
    const auto& shared = m.find("blk.conv.weight")->grad;
    const auto& g1 = u.find("blk.conv.weight")->grad;
    const auto& g2 = u.find("blk.conv_b.weight")->grad;
    for (std::size_t i = 0; i < shared.size(); ++i) CHECK(std::abs(shared[i] - (g1[i] + g2[i])) < 1e-12);
  }

  SUBCASE("channel mismatch") {
    Model<double> bad(ModelSpec{.depth = 1});
    bad.residual_block(bad.input(), 3, 0.0, "blk");
    bad.init_weights(1);
    Tape<double> tape;
    try {
      bad.forward(Tensor<double>({1, 2, 4, 4}), tape, Mode::eval);
      FAIL("expected ChannelMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ChannelMismatch);
    }
  }
}

TEST_CASE("U-Net structure") {
  auto m = build_unet<float>();
  CHECK(oracle::unet_parameters(32, 3) == 471010);
  CHECK(m.parameter_count() == 471010);
  CHECK(m.find("enc0.conv1.weight")->value.size() + 32 == 320);
  CHECK(m.find("dec1.conv1.weight")->value.size() + 64 == 110656);
  CHECK(m.find("head.weight")->value.size() + 2 == 66);
  CHECK(build_unet<float>(4, 2).parameter_count() == oracle::unet_parameters(4, 2));

  m.init_weights(1);
  Tape<float> tape;
  const auto x = Tensor<float>({32, 1, 48, 48}, 0.5f);
  const auto& y = m.forward(x, tape, Mode::eval);
  CHECK(y.shape() == std::vector<std::size_t>{32, 2, 48, 48});
  for (std::size_t i = 0; i < m.nodes().size(); ++i)
    if (m.nodes()[i].name == "enc1.conv2") CHECK(tape.acts[i].h() == 24);
  CHECK(m.predict(x, 7) == y);

  try {
    m.predict(Tensor<float>({1, 1, 10, 10}));
    FAIL("expected IndivisibleInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IndivisibleInput);
  }
}

TEST_CASE("LadderNet structure") {
  auto m = build_laddernet<float>();
  CHECK(m.parameter_count() == oracle::laddernet_parameters(32, 3, 2));
  CHECK(m.parameter_count() < 2 * 471010);

  // one distinct kernel per shared block plus stem, transitions and head
  auto count = [](const Model<float>& net, LayerKind kind, std::string_view suffix = "") {
    std::size_t k = 0;
    for (const auto& n : net.nodes())
      if (n.kind == kind && n.name.ends_with(suffix)) ++k;
    return k;
  };
  const std::size_t blocks = count(m, LayerKind::batchnorm, ".bn1");
  CHECK(blocks == 2 * (3 + 2));
  const std::size_t transitions = 2 * (2 + 2);
  CHECK(m.conv_kernel_count() == blocks + transitions + 2);
  CHECK(count(m, LayerKind::conv3x3) + count(m, LayerKind::conv1x1) == 2 * blocks + transitions + 2);
  for (const auto& p : m.parameters())
    if (p.name.find("conv_b") != std::string::npos) FAIL("second kernel allocated: " << p.name);

  // adds: one per block, one decoder skip per upper level, laterals below level 0
  CHECK(count(m, LayerKind::add) == 10 + 4 + 2);
  CHECK(count(m, LayerKind::concat) == 0);
  auto one = build_laddernet<float>(8, 3, 1);
  CHECK(count(one, LayerKind::add) == 5 + 2);

  m.init_weights(2);
  const auto y = m.predict(Tensor<float>({1024, 1, 48, 48}, 0.25f), 64);
  CHECK(y.shape() == std::vector<std::size_t>{1024, 2, 48, 48});
}

TEST_CASE("Adam") {
  Model<double> m(ModelSpec{.depth = 1});
  m.conv(m.input(), 1, 1, 1, "c");
  m.init_weights(1);
  auto state = make_adam(m.parameters(), 1e-3);
  const auto before = m.parameters()[0].value;
  adam_step(m.parameters(), state);
  CHECK(state.step == 1);
  CHECK(m.parameters()[0].value == before);

  m.parameters()[0].grad[0] = 0.7;
  m.parameters()[1].grad[0] = -3.0;
  adam_step(m.parameters(), state);
  // at the first non-zero step the bias-corrected ratio is g/|g| up to epsilon
  const double c1 = 1 - 0.9 * 0.9, c2 = 1 - 0.999 * 0.999;
  const double expected = 1e-3 * (0.1 * 0.7 / c1) / (std::sqrt(0.001 * 0.49 / c2) + 1e-8);
  CHECK(before[0] - m.parameters()[0].value[0] == doctest::Approx(expected).epsilon(1e-9));

  auto fresh = make_adam(m.parameters(), 1e-3);
  const double w0 = m.parameters()[0].value[0], b0 = m.parameters()[1].value[0];
  adam_step(m.parameters(), fresh);
  CHECK(w0 - m.parameters()[0].value[0] == doctest::Approx(1e-3).epsilon(1e-6));
  CHECK(m.parameters()[1].value[0] - b0 == doctest::Approx(1e-3).epsilon(1e-6));

  auto wrong = make_adam(build_unet<double>(2, 1).parameters(), 1e-3);
  CHECK_THROWS_AS(adam_step(m.parameters(), wrong), Error);

  auto run = [] {
    auto net = build_unet<float>(4, 2, 0.2);
    net.init_weights(9);
    auto st = make_adam(net.parameters(), 1e-3);
    auto x = Tensor<float>({4, 1, 8, 8});
    std::vector<std::uint8_t> labels(4 * 64);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = static_cast<float>((i * 37 % 101) / 101.0);
      labels[i] = x[i] > 0.5f;
    }
    for (int step = 0; step < 3; ++step) {
      Tape<float> tape;
      const auto loss = softmax_xent(net.forward(x, tape, Mode::train, step), labels);
      net.zero_grad();
      net.backward(tape, loss.grad);
      adam_step(net.parameters(), st);
    }
    return net;
  };
  const auto a = run(), b = run();
  for (std::size_t i = 0; i < a.parameters().size(); ++i) CHECK(a.parameters()[i].value == b.parameters()[i].value);
}

TEST_CASE("weights file") {
  TempDir dir;
  auto m = build_laddernet<float>(4, 2, 2);
  m.init_weights(3);
  const auto p1 = dir.path() / "a.fcnw", p2 = dir.path() / "b.fcnw";
  save_weights(m, p1);
  const auto loaded = load_model(p1);
  CHECK(loaded.spec() == m.spec());
  for (std::size_t i = 0; i < m.parameters().size(); ++i)
    CHECK(loaded.parameters()[i].value == m.parameters()[i].value);
  save_weights(loaded, p2);
  CHECK(read_bytes(p1) == read_bytes(p2));

  auto bytes = read_bytes(p1);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "FCNW");
  CHECK(bytes[4] == 1);

  auto expect = [&](std::vector<std::uint8_t> b, ErrorCode code) {
    write_bytes(p2, b);
    try {
      load_model(p2);
      FAIL("expected " << error_name(code));
    } catch (const Error& e) {
      CHECK(e.code() == code);
    }
  };
  auto magic = bytes;
  magic[0] = 'X';
  expect(magic, ErrorCode::BadMagic);
  auto version = bytes;
  version[4] = 2;
  expect(version, ErrorCode::VersionMismatch);
  expect(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 3), ErrorCode::TruncatedData);

  auto unet = build_unet<float>(4, 2);
  unet.init_weights(1);
  save_weights(unet, p2);
  try {
    load_weights_into(m, p2);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
}
