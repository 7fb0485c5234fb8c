#include "vseg/nn/ops.hpp"

#include <cblas.h>

#include <bit>
#include <cmath>
#include <type_traits>

#include "vseg/error.hpp"
#include "vseg/text_util.hpp"

namespace vseg::nn {

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + ")";
}

namespace {

// Row-major GEMM: C = alpha op(A) op(B) + beta C
void gemm(bool ta, bool tb, int m, int n, int k, float alpha, const float* a, int lda, const float* b, int ldb,
          float beta, float* c, int ldc) {
  cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda,
              b, ldb, beta, c, ldc);
}

void gemm(bool ta, bool tb, int m, int n, int k, double alpha, const double* a, int lda, const double* b, int ldb,
          double beta, double* c, int ldc) {
  cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda,
              b, ldb, beta, c, ldc);
}

// y += A x for a row-major (m x n) A
void gemv(int m, int n, const float* a, const float* x, float* y) {
  cblas_sgemv(CblasRowMajor, CblasNoTrans, m, n, 1.0f, a, n, x, 1, 1.0f, y, 1);
}

void gemv(int m, int n, const double* a, const double* x, double* y) {
  cblas_dgemv(CblasRowMajor, CblasNoTrans, m, n, 1.0, a, n, x, 1, 1.0, y, 1);
}

void require_rank4(const std::vector<std::size_t>& shape, const char* what) {
  if (shape.size() != 4) throw Error(ErrorCode::ShapeMismatch, std::string(what) + " must be rank 4, got " + shape_string(shape));
}

// Patch matrix of one sample laid out (in_c*k*k x pixels); k = 3 only.
template <typename T>
void im2col(const T* x, std::size_t channels, int h, int w, T* col) {
  const std::size_t pixels = static_cast<std::size_t>(h) * w;
  for (std::size_t c = 0; c < channels; ++c) {
    const T* plane = x + c * pixels;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* dst = col + ((c * 3 + ky) * 3 + kx) * pixels;
        const int dx = kx - 1;
        for (int y = 0; y < h; ++y, dst += w) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) {
            std::fill(dst, dst + w, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(sy) * w;
          const int lo = std::max(0, -dx), hi = std::min(w, w - dx);
          std::fill(dst, dst + lo, T(0));
          std::copy(src + lo + dx, src + hi + dx, dst + lo);
          std::fill(dst + hi, dst + w, T(0));
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, std::size_t channels, int h, int w, T* x) {
  const std::size_t pixels = static_cast<std::size_t>(h) * w;
  std::fill(x, x + channels * pixels, T(0));
  for (std::size_t c = 0; c < channels; ++c) {
    T* plane = x + c * pixels;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* src = col + ((c * 3 + ky) * 3 + kx) * pixels;
        const int dx = kx - 1;
        for (int y = 0; y < h; ++y, src += w) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          T* dst = plane + static_cast<std::size_t>(sy) * w;
          const int lo = std::max(0, -dx), hi = std::min(w, w - dx);
          for (int xx = lo; xx < hi; ++xx) dst[xx + dx] += src[xx];
        }
      }
    }
  }
}

void check_conv_shapes(const std::vector<std::size_t>& xs, const std::vector<std::size_t>& ws, std::size_t bsize) {
  require_rank4(xs, "conv input");
  if (ws.size() != 4 || ws[2] != ws[3] || (ws[2] != 1 && ws[2] != 3))
    throw Error(ErrorCode::ShapeMismatch, "conv kernel must be (out,in,k,k) with k in {1,3}, got " + shape_string(ws));
  if (ws[1] != xs[1])
    throw Error(ErrorCode::ShapeMismatch, "conv expects " + std::to_string(ws[1]) + " input channels, got " +
                                              std::to_string(xs[1]));
  if (bsize != ws[0]) throw Error(ErrorCode::ShapeMismatch, "conv bias length differs from output channels");
}

}  // namespace

template <typename T>
void check_finite(const Tensor<T>& t, std::string_view where) {
  // NaN and Inf are exactly the values with every exponent bit set
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  constexpr Bits exponent = sizeof(T) == 4 ? Bits(0x7f800000u) : Bits(0x7ff0000000000000ull);
  constexpr Bits magnitude = ~(Bits(1) << (8 * sizeof(T) - 1));
  Bits top = 0;
  for (T v : t.values()) top = std::max(top, std::bit_cast<Bits>(v) & magnitude);
  if (top >= exponent) throw Error(ErrorCode::NumericAbort, "non-finite value produced by " + std::string(where));
}

template <typename T>
Tensor<T> conv_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  check_conv_shapes(x.shape(), w.shape(), b.size());
  const std::size_t batch = x.n(), in_c = x.c(), out_c = w.dim(0);
  const int h = static_cast<int>(x.h()), wd = static_cast<int>(x.w()), k = static_cast<int>(w.dim(2));
  const int pixels = h * wd;
  const int kdim = static_cast<int>(in_c) * k * k;
  Tensor<T> y({batch, out_c, x.h(), x.w()});
  std::vector<T> col(k == 3 ? static_cast<std::size_t>(pixels) * kdim : 0);
  std::vector<T> out_t(static_cast<std::size_t>(pixels) * out_c);
  for (std::size_t n = 0; n < batch; ++n) {
    const T* xn = x.data() + n * in_c * pixels;
    const T* cn = xn;  // a 1x1 kernel reads the input planes directly
    if (k == 3) {
      im2col(xn, in_c, h, wd, col.data());
      cn = col.data();
    }
    // (pixels x out_c) = col^T w^T
    gemm(true, true, pixels, static_cast<int>(out_c), kdim, T(1), cn, pixels, w.data(), kdim, T(0), out_t.data(),
         static_cast<int>(out_c));
    T* yn = y.data() + n * out_c * pixels;
    for (int p = 0; p < pixels; ++p) {
      const T* row = out_t.data() + static_cast<std::size_t>(p) * out_c;
      for (std::size_t m = 0; m < out_c; ++m) yn[m * pixels + p] = row[m] + b[m];
    }
  }
  return y;
}

template <typename T>
void conv_backward(const Tensor<T>& grad_out, const Tensor<T>& x, const Tensor<T>& w, Tensor<T>* grad_x,
                   Tensor<T>& grad_w, Tensor<T>& grad_b) {
  check_conv_shapes(x.shape(), w.shape(), grad_b.size());
  if (grad_out.shape() != std::vector<std::size_t>{x.n(), w.dim(0), x.h(), x.w()})
    throw Error(ErrorCode::ShapeMismatch, "conv grad_out " + shape_string(grad_out.shape()));
  if (grad_w.shape() != w.shape()) throw Error(ErrorCode::ShapeMismatch, "conv grad_w shape");
  const std::size_t batch = x.n(), in_c = x.c(), out_c = w.dim(0);
  const int h = static_cast<int>(x.h()), wd = static_cast<int>(x.w()), k = static_cast<int>(w.dim(2));
  const int pixels = h * wd;
  const int kdim = static_cast<int>(in_c) * k * k;
  if (grad_x) *grad_x = Tensor<T>(x.shape());
  std::vector<T> col(k == 3 ? static_cast<std::size_t>(pixels) * kdim : 0);
  std::vector<T> gcol(grad_x && k == 3 ? col.size() : 0);
  const std::vector<T> ones(static_cast<std::size_t>(pixels), T(1));
  for (std::size_t n = 0; n < batch; ++n) {
    const T* xn = x.data() + n * in_c * pixels;
    const T* gy = grad_out.data() + n * out_c * pixels;
    const T* cn = xn;
    if (k == 3) {
      im2col(xn, in_c, h, wd, col.data());
      cn = col.data();
    }
    gemm(false, true, static_cast<int>(out_c), kdim, pixels, T(1), gy, pixels, cn, pixels, T(1), grad_w.data(), kdim);
    gemv(static_cast<int>(out_c), pixels, gy, ones.data(), grad_b.data());
    if (grad_x) {
      T* gx = grad_x->data() + n * in_c * pixels;
      T* dst = k == 3 ? gcol.data() : gx;
      gemm(true, false, kdim, pixels, static_cast<int>(out_c), T(1), w.data(), kdim, gy, pixels, T(0), dst, pixels);
      if (k == 3) col2im(gcol.data(), in_c, h, wd, gx);
    }
  }
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  return y;
}

template <typename T>
Tensor<T> relu_backward(Tensor<T> grad_out, const Tensor<T>& x) {
  if (grad_out.shape() != x.shape()) throw Error(ErrorCode::ShapeMismatch, "relu grad shape");
  T* g = grad_out.data();
  const T* xs = x.data();
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = xs[i] > T(0) ? g[i] : T(0);
  return grad_out;
}

template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& x, double rate, Mode mode, std::uint64_t seed, Tensor<T>& mask) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorCode::InvalidValue, "dropout rate must lie in [0,1)");
  if (mode == Mode::eval || rate == 0.0) {
    mask = Tensor<T>(x.shape(), T(1));
    return x;
  }
  mask = Tensor<T>(x.shape());
  Tensor<T> y(x.shape());
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  // counter-based splitmix64 stream; an element is dropped when its 53-bit
  // uniform falls below rate
  const auto cut = static_cast<std::uint64_t>(std::ldexp(rate, 53));
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::uint64_t z = seed + (i + 1) * 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    mask[i] = (z >> 11) < cut ? T(0) : keep_scale;
    y[i] = x[i] * mask[i];
  }
  return y;
}

template <typename T>
Tensor<T> dropout_backward(Tensor<T> grad_out, const Tensor<T>& mask) {
  if (grad_out.shape() != mask.shape()) throw Error(ErrorCode::ShapeMismatch, "dropout grad shape");
  T* g = grad_out.data();
  const T* m = mask.data();
  for (std::size_t i = 0; i < grad_out.size(); ++i) g[i] *= m[i];
  return grad_out;
}

template <typename T>
Tensor<T> maxpool2_forward(const Tensor<T>& x, std::vector<std::uint8_t>& argmax) {
  require_rank4(x.shape(), "maxpool input");
  if (x.h() % 2 || x.w() % 2)
    throw Error(ErrorCode::OddSpatialDims, "maxpool needs even dims, got " + shape_string(x.shape()));
  const std::size_t oh = x.h() / 2, ow = x.w() / 2;
  Tensor<T> y({x.n(), x.c(), oh, ow});
  argmax.assign(y.size(), 0);
  const std::size_t planes = x.n() * x.c();
  for (std::size_t pl = 0; pl < planes; ++pl) {
    const T* src = x.data() + pl * x.h() * x.w();
    T* dst = y.data() + pl * oh * ow;
    std::uint8_t* am = argmax.data() + pl * oh * ow;
    for (std::size_t r = 0; r < oh; ++r) {
      for (std::size_t c = 0; c < ow; ++c) {
        const T* base = src + 2 * r * x.w() + 2 * c;
        const T cand[4] = {base[0], base[1], base[x.w()], base[x.w() + 1]};
        std::uint8_t best = 0;
        for (std::uint8_t k = 1; k < 4; ++k)
          if (cand[k] > cand[best]) best = k;
        dst[r * ow + c] = cand[best];
        am[r * ow + c] = best;
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> maxpool2_backward(const Tensor<T>& grad_out, const std::vector<std::uint8_t>& argmax) {
  require_rank4(grad_out.shape(), "maxpool grad");
  if (argmax.size() != grad_out.size()) throw Error(ErrorCode::ShapeMismatch, "maxpool argmax size");
  const std::size_t oh = grad_out.h(), ow = grad_out.w();
  Tensor<T> g({grad_out.n(), grad_out.c(), 2 * oh, 2 * ow});
  const std::size_t planes = grad_out.n() * grad_out.c();
  for (std::size_t pl = 0; pl < planes; ++pl) {
    T* dst = g.data() + pl * 4 * oh * ow;
    for (std::size_t r = 0; r < oh; ++r) {
      for (std::size_t c = 0; c < ow; ++c) {
        const std::size_t i = pl * oh * ow + r * ow + c;
        const std::uint8_t k = argmax[i];
        dst[(2 * r + k / 2) * 2 * ow + 2 * c + k % 2] = grad_out[i];
      }
    }
  }
  return g;
}

template <typename T>
Tensor<T> upsample2_forward(const Tensor<T>& x) {
  require_rank4(x.shape(), "upsample input");
  const std::size_t h = x.h(), w = x.w();
  Tensor<T> y({x.n(), x.c(), 2 * h, 2 * w});
  const std::size_t planes = x.n() * x.c();
  for (std::size_t pl = 0; pl < planes; ++pl) {
    const T* src = x.data() + pl * h * w;
    T* dst = y.data() + pl * 4 * h * w;
    for (std::size_t r = 0; r < 2 * h; ++r)
      for (std::size_t c = 0; c < 2 * w; ++c) dst[r * 2 * w + c] = src[(r / 2) * w + c / 2];
  }
  return y;
}

template <typename T>
Tensor<T> upsample2_backward(const Tensor<T>& grad_out) {
  require_rank4(grad_out.shape(), "upsample grad");
  if (grad_out.h() % 2 || grad_out.w() % 2) throw Error(ErrorCode::OddSpatialDims, "upsample grad dims");
  const std::size_t h = grad_out.h() / 2, w = grad_out.w() / 2;
  Tensor<T> g({grad_out.n(), grad_out.c(), h, w});
  const std::size_t planes = grad_out.n() * grad_out.c();
  for (std::size_t pl = 0; pl < planes; ++pl) {
    const T* src = grad_out.data() + pl * 4 * h * w;
    T* dst = g.data() + pl * h * w;
    for (std::size_t r = 0; r < 2 * h; ++r)
      for (std::size_t c = 0; c < 2 * w; ++c) dst[(r / 2) * w + c / 2] += src[r * 2 * w + c];
  }
  return g;
}

template <typename T>
Tensor<T> concat_forward(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank4(a.shape(), "concat input");
  require_rank4(b.shape(), "concat input");
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w())
    throw Error(ErrorCode::ShapeMismatch, "concat " + shape_string(a.shape()) + " with " + shape_string(b.shape()));
  Tensor<T> y({a.n(), a.c() + b.c(), a.h(), a.w()});
  const std::size_t plane = a.h() * a.w();
  for (std::size_t n = 0; n < a.n(); ++n) {
    T* dst = y.data() + n * y.c() * plane;
    std::copy_n(a.data() + n * a.c() * plane, a.c() * plane, dst);
    std::copy_n(b.data() + n * b.c() * plane, b.c() * plane, dst + a.c() * plane);
  }
  return y;
}

template <typename T>
void concat_backward(const Tensor<T>& grad_out, std::size_t channels_a, Tensor<T>& grad_a, Tensor<T>& grad_b) {
  require_rank4(grad_out.shape(), "concat grad");
  if (channels_a > grad_out.c()) throw Error(ErrorCode::ShapeMismatch, "concat split");
  const std::size_t cb = grad_out.c() - channels_a, plane = grad_out.h() * grad_out.w();
  grad_a = Tensor<T>({grad_out.n(), channels_a, grad_out.h(), grad_out.w()});
  grad_b = Tensor<T>({grad_out.n(), cb, grad_out.h(), grad_out.w()});
  for (std::size_t n = 0; n < grad_out.n(); ++n) {
    const T* src = grad_out.data() + n * grad_out.c() * plane;
    std::copy_n(src, channels_a * plane, grad_a.data() + n * channels_a * plane);
    std::copy_n(src + channels_a * plane, cb * plane, grad_b.data() + n * cb * plane);
  }
}

template <typename T>
Tensor<T> add_forward(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    throw Error(ErrorCode::ShapeMismatch, "add " + shape_string(a.shape()) + " with " + shape_string(b.shape()));
  Tensor<T> y(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] + b[i];
  return y;
}

template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                            Tensor<T>& running_mean, Tensor<T>& running_var, Mode mode, BatchNormCache& cache) {
  require_rank4(x.shape(), "batchnorm input");
  const std::size_t channels = x.c(), plane = x.h() * x.w(), batch = x.n();
  if (gamma.size() != channels || beta.size() != channels || running_mean.size() != channels ||
      running_var.size() != channels)
    throw Error(ErrorCode::ShapeMismatch, "batchnorm parameters do not match channels");
  cache.mean.assign(channels, 0.0);
  cache.inv_std.assign(channels, 0.0);
  cache.batch_stats = mode == Mode::train;
  const double count = static_cast<double>(batch * plane);
  for (std::size_t c = 0; c < channels; ++c) {
    double mean, var;
    if (mode == Mode::train) {
      double s = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const T* p = x.data() + (n * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) s += p[i];
      }
      mean = s / count;
      double ss = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const T* p = x.data() + (n * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) ss += (p[i] - mean) * (p[i] - mean);
      }
      var = ss / count;
      running_mean[c] = static_cast<T>(kBatchNormMomentum * running_mean[c] + (1.0 - kBatchNormMomentum) * mean);
      running_var[c] = static_cast<T>(kBatchNormMomentum * running_var[c] + (1.0 - kBatchNormMomentum) * var);
    } else {
      mean = running_mean[c];
      var = running_var[c];
    }
    cache.mean[c] = mean;
    cache.inv_std[c] = 1.0 / std::sqrt(var + kBatchNormEps);
  }
  Tensor<T> y(x.shape());
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const T* p = x.data() + (n * channels + c) * plane;
      T* q = y.data() + (n * channels + c) * plane;
      const double g = gamma[c] * cache.inv_std[c], m = cache.mean[c], bt = beta[c];
      for (std::size_t i = 0; i < plane; ++i) q[i] = static_cast<T>((p[i] - m) * g + bt);
    }
  }
  return y;
}

template <typename T>
Tensor<T> batchnorm_backward(const Tensor<T>& grad_out, const Tensor<T>& x, const Tensor<T>& gamma,
                             const BatchNormCache& cache, Tensor<T>& grad_gamma, Tensor<T>& grad_beta) {
  if (grad_out.shape() != x.shape()) throw Error(ErrorCode::ShapeMismatch, "batchnorm grad shape");
  const std::size_t channels = x.c(), plane = x.h() * x.w(), batch = x.n();
  const double count = static_cast<double>(batch * plane);
  Tensor<T> gx(x.shape());
  for (std::size_t c = 0; c < channels; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    const double m = cache.mean[c], is = cache.inv_std[c];
    for (std::size_t n = 0; n < batch; ++n) {
      const T* p = x.data() + (n * channels + c) * plane;
      const T* g = grad_out.data() + (n * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_g += g[i];
        sum_gx += g[i] * (p[i] - m) * is;
      }
    }
    grad_beta[c] += static_cast<T>(sum_g);
    grad_gamma[c] += static_cast<T>(sum_gx);
    if (!cache.batch_stats) {
      // running statistics are constants: the map is affine per channel
      for (std::size_t n = 0; n < batch; ++n) {
        const T* g = grad_out.data() + (n * channels + c) * plane;
        T* q = gx.data() + (n * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) q[i] = static_cast<T>(g[i] * gamma[c] * is);
      }
      continue;
    }
    const double scale = gamma[c] * is / count;
    for (std::size_t n = 0; n < batch; ++n) {
      const T* p = x.data() + (n * channels + c) * plane;
      const T* g = grad_out.data() + (n * channels + c) * plane;
      T* q = gx.data() + (n * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double xhat = (p[i] - m) * is;
        q[i] = static_cast<T>(scale * (count * g[i] - sum_g - xhat * sum_gx));
      }
    }
  }
  return gx;
}

template <typename T>
LossResult<T> softmax_xent(const Tensor<T>& logits, std::span<const std::uint8_t> labels) {
  require_rank4(logits.shape(), "logits");
  if (logits.c() != 2) throw Error(ErrorCode::ShapeMismatch, "softmax_xent needs 2 channels");
  const std::size_t plane = logits.h() * logits.w(), batch = logits.n();
  if (labels.size() != batch * plane) throw Error(ErrorCode::ShapeMismatch, "label count differs from logits");
  LossResult<T> r;
  r.grad = Tensor<T>(logits.shape());
  const double inv_count = 1.0 / static_cast<double>(batch * plane);
  double total = 0.0;
  for (std::size_t n = 0; n < batch; ++n) {
    const T* z0 = logits.data() + n * 2 * plane;
    const T* z1 = z0 + plane;
    T* g0 = r.grad.data() + n * 2 * plane;
    T* g1 = g0 + plane;
    for (std::size_t i = 0; i < plane; ++i) {
      const std::uint8_t y = labels[n * plane + i];
      // loss = softplus(z_other - z_true)
      const double d = y ? double(z0[i]) - double(z1[i]) : double(z1[i]) - double(z0[i]);
      total += std::max(d, 0.0) + std::log1p(std::exp(-std::abs(d)));
      const double p1 = 1.0 / (1.0 + std::exp(double(z0[i]) - double(z1[i])));
      g1[i] = static_cast<T>((p1 - y) * inv_count);
      g0[i] = static_cast<T>(((1.0 - p1) - (1 - y)) * inv_count);
    }
  }
  r.loss = total * inv_count;
  return r;
}

template <typename T>
std::vector<float> softmax_channel(const Tensor<T>& logits, std::size_t channel) {
  require_rank4(logits.shape(), "logits");
  if (logits.c() != 2 || channel > 1) throw Error(ErrorCode::ShapeMismatch, "softmax_channel needs 2 channels");
  const std::size_t plane = logits.h() * logits.w();
  std::vector<float> out(logits.n() * plane);
  for (std::size_t n = 0; n < logits.n(); ++n) {
    const T* z0 = logits.data() + n * 2 * plane;
    const T* z1 = z0 + plane;
    for (std::size_t i = 0; i < plane; ++i) {
      const double d = channel == 1 ? double(z0[i]) - double(z1[i]) : double(z1[i]) - double(z0[i]);
      out[n * plane + i] = static_cast<float>(1.0 / (1.0 + std::exp(d)));
    }
  }
  return out;
}

#define VSEG_INSTANTIATE_OPS(T)                                                                                    \
  template void check_finite(const Tensor<T>&, std::string_view);                                                  \
  template Tensor<T> conv_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                           \
  template void conv_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>*, Tensor<T>&,        \
                              Tensor<T>&);                                                                         \
  template Tensor<T> relu_forward(const Tensor<T>&);                                                               \
  template Tensor<T> relu_backward(Tensor<T>, const Tensor<T>&);                                                   \
  template Tensor<T> dropout_forward(const Tensor<T>&, double, Mode, std::uint64_t, Tensor<T>&);                  \
  template Tensor<T> dropout_backward(Tensor<T>, const Tensor<T>&);                                                \
  template Tensor<T> maxpool2_forward(const Tensor<T>&, std::vector<std::uint8_t>&);                               \
  template Tensor<T> maxpool2_backward(const Tensor<T>&, const std::vector<std::uint8_t>&);                        \
  template Tensor<T> upsample2_forward(const Tensor<T>&);                                                          \
  template Tensor<T> upsample2_backward(const Tensor<T>&);                                                         \
  template Tensor<T> concat_forward(const Tensor<T>&, const Tensor<T>&);                                           \
  template void concat_backward(const Tensor<T>&, std::size_t, Tensor<T>&, Tensor<T>&);                           \
  template Tensor<T> add_forward(const Tensor<T>&, const Tensor<T>&);                                              \
  template Tensor<T> batchnorm_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>&,          \
                                       Tensor<T>&, Mode, BatchNormCache&);                                         \
  template Tensor<T> batchnorm_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                      \
                                        const BatchNormCache&, Tensor<T>&, Tensor<T>&);                            \
  template LossResult<T> softmax_xent(const Tensor<T>&, std::span<const std::uint8_t>);                            \
  template std::vector<float> softmax_channel(const Tensor<T>&, std::size_t);

VSEG_INSTANTIATE_OPS(float)
VSEG_INSTANTIATE_OPS(double)

}  // namespace vseg::nn
