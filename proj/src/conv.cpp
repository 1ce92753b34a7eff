#include "cylin/conv.hpp"

#include <cmath>

#include <Eigen/Core>

namespace cylin {

std::string_view to_string(PadMode mode) {
  switch (mode) {
    case PadMode::ZeroBoth:
      return "zero";
    case PadMode::CircularAzimuth:
      return "circular";
    case PadMode::CircularAzimuthMirrorPolar:
      return "circular_mirror";
  }
  return "?";
}

PadMode parse_pad_mode(std::string_view text) {
  if (text == "zero") return PadMode::ZeroBoth;
  if (text == "circular") return PadMode::CircularAzimuth;
  if (text == "circular_mirror") return PadMode::CircularAzimuthMirrorPolar;
  throw ConfigError("unknown pad mode '" + std::string(text) + "' (zero|circular|circular_mirror)");
}

namespace {

constexpr long kOutside = -1;

// Source row for padded row r, or kOutside for a zero row.
long source_row(long r, long h, PadMode mode) {
  if (r >= 0 && r < h) return r;
  if (mode != PadMode::CircularAzimuthMirrorPolar) return kOutside;
  return r < 0 ? -r : 2 * (h - 1) - r;
}

long source_col(long q, long w, PadMode mode) {
  if (q >= 0 && q < w) return q;
  if (mode == PadMode::ZeroBoth) return kOutside;
  return ((q % w) + w) % w;
}

void check_pad_amounts(const Shape& s, PadMode mode, std::size_t m, std::size_t n) {
  if (mode != PadMode::ZeroBoth && n > s.w) {
    throw ParameterError("circular padding of " + std::to_string(n) + " columns exceeds width " +
                         std::to_string(s.w));
  }
  if (mode == PadMode::CircularAzimuthMirrorPolar && m > 0 && m >= s.h) {
    throw ParameterError("mirror padding of " + std::to_string(m) + " rows needs height > " +
                         std::to_string(m));
  }
}

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Gathers one padded sample into a [C*KH*KW, Ho*Wo] matrix. Kernel taps are
// read in flipped order so that the product with the weight matrix evaluates
// the convolution sum with offsets s*x - k*d.
template <class T>
void im2col(const T* padded, std::size_t channels, std::size_t hp, std::size_t wp,
            const ConvGeometry& g, std::size_t ho, std::size_t wo, T* col) {
  const std::size_t kh = g.kernel_h, kw = g.kernel_w;
  const std::size_t p = ho * wo;
  for (std::size_t c = 0; c < channels; ++c) {
    const T* plane = padded + c * hp * wp;
    for (std::size_t i = 0; i < kh; ++i) {
      const std::size_t dy = (kh - 1 - i) * g.dilation_h;
      for (std::size_t j = 0; j < kw; ++j) {
        const std::size_t dx = (kw - 1 - j) * g.dilation_w;
        T* row = col + ((c * kh + i) * kw + j) * p;
        for (std::size_t y = 0; y < ho; ++y) {
          const T* src = plane + (g.stride_h * y + dy) * wp + dx;
          T* dst = row + y * wo;
          if (g.stride_w == 1) {
            std::copy_n(src, wo, dst);
          } else {
            for (std::size_t x = 0; x < wo; ++x) dst[x] = src[g.stride_w * x];
          }
        }
      }
    }
  }
}

template <class T>
void col2im(const T* col, std::size_t channels, std::size_t hp, std::size_t wp,
            const ConvGeometry& g, std::size_t ho, std::size_t wo, T* padded) {
  const std::size_t kh = g.kernel_h, kw = g.kernel_w;
  const std::size_t p = ho * wo;
  for (std::size_t c = 0; c < channels; ++c) {
    T* plane = padded + c * hp * wp;
    for (std::size_t i = 0; i < kh; ++i) {
      const std::size_t dy = (kh - 1 - i) * g.dilation_h;
      for (std::size_t j = 0; j < kw; ++j) {
        const std::size_t dx = (kw - 1 - j) * g.dilation_w;
        const T* row = col + ((c * kh + i) * kw + j) * p;
        for (std::size_t y = 0; y < ho; ++y) {
          T* dst = plane + (g.stride_h * y + dy) * wp + dx;
          const T* src = row + y * wo;
          for (std::size_t x = 0; x < wo; ++x) dst[g.stride_w * x] += src[x];
        }
      }
    }
  }
}

template <class T>
void check_conv_input(const Tensor<T>& input, const ConvLayer<T>& layer) {
  layer.geometry.validate();
  const Shape s = input.shape();
  if (s.c != layer.geometry.in_channels) {
    throw ShapeError("conv expects " + std::to_string(layer.geometry.in_channels) +
                     " input channels, got " + std::to_string(s.c));
  }
  if (s.h == 0 || s.w == 0) throw ShapeError("conv input has an empty spatial axis");
  if (layer.weight.shape() != layer.geometry.weight_shape()) {
    throw ShapeError("conv weight " + layer.weight.shape().str() + " does not match geometry " +
                     layer.geometry.weight_shape().str());
  }
  if (layer.bias.shape() != Shape{1, layer.geometry.out_channels, 1, 1}) {
    throw ShapeError("conv bias must be [1, C', 1, 1]");
  }
}

}  // namespace

void ConvGeometry::validate() const {
  if (kernel_h % 2 == 0 || kernel_w % 2 == 0) throw ParameterError("kernel extents must be odd");
  if (stride_h == 0 || stride_w == 0 || dilation_h == 0 || dilation_w == 0) {
    throw ParameterError("stride and dilation must be positive");
  }
  if (in_channels == 0 || out_channels == 0) throw ParameterError("conv channel counts must be positive");
}

template <class T>
Tensor<T> pad(const Tensor<T>& input, PadMode mode, std::size_t m, std::size_t n) {
  const Shape s = input.shape();
  check_pad_amounts(s, mode, m, n);
  const std::size_t hp = s.h + 2 * m, wp = s.w + 2 * n;
  Tensor<T> out({s.n, s.c, hp, wp});
  const long h = static_cast<long>(s.h), w = static_cast<long>(s.w);
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      auto src = input.plane(b, c);
      auto dst = out.plane(b, c);
      for (std::size_t r = 0; r < hp; ++r) {
        const long sr = source_row(static_cast<long>(r) - static_cast<long>(m), h, mode);
        if (sr == kOutside) continue;
        const T* srow = src.data() + sr * w;
        T* drow = dst.data() + r * wp;
        std::copy_n(srow, s.w, drow + n);
        for (std::size_t q = 0; q < n; ++q) {
          const long left = source_col(static_cast<long>(q) - static_cast<long>(n), w, mode);
          const long right = source_col(w + static_cast<long>(q), w, mode);
          if (left != kOutside) drow[q] = srow[left];
          if (right != kOutside) drow[n + s.w + q] = srow[right];
        }
      }
    }
  }
  return out;
}

template <class T>
Tensor<T> pad_adjoint(const Tensor<T>& grad_padded, PadMode mode, std::size_t m, std::size_t n) {
  const Shape sp = grad_padded.shape();
  if (sp.h < 2 * m || sp.w < 2 * n) throw ShapeError("pad_adjoint: padded tensor too small");
  const Shape s{sp.n, sp.c, sp.h - 2 * m, sp.w - 2 * n};
  check_pad_amounts(s, mode, m, n);
  Tensor<T> out(s);
  const long h = static_cast<long>(s.h), w = static_cast<long>(s.w);
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      auto src = grad_padded.plane(b, c);
      auto dst = out.plane(b, c);
      for (std::size_t r = 0; r < sp.h; ++r) {
        const long sr = source_row(static_cast<long>(r) - static_cast<long>(m), h, mode);
        if (sr == kOutside) continue;
        for (std::size_t q = 0; q < sp.w; ++q) {
          const long sc = source_col(static_cast<long>(q) - static_cast<long>(n), w, mode);
          if (sc == kOutside) continue;
          dst[sr * w + sc] += src[r * sp.w + q];
        }
      }
    }
  }
  return out;
}

template <class T>
ConvLayer<T> ConvLayer<T>::zeros(const ConvGeometry& geometry) {
  geometry.validate();
  return {geometry, Tensor<T>(geometry.weight_shape()), Tensor<T>({1, geometry.out_channels, 1, 1})};
}

template <class T>
ConvLayer<T> ConvLayer<T>::random(const ConvGeometry& geometry, Rng& rng, double gain) {
  ConvLayer layer = zeros(geometry);
  const double fan_in = static_cast<double>(geometry.in_channels * geometry.kernel_h * geometry.kernel_w);
  layer.weight = rng_normal<T>(rng, geometry.weight_shape(), 0.0, gain / std::sqrt(fan_in));
  return layer;
}

template <class T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvLayer<T>& layer) {
  check_conv_input(input, layer);
  const ConvGeometry& g = layer.geometry;
  const Shape s = input.shape();
  const std::size_t ho = g.out_h(s.h), wo = g.out_w(s.w);
  const std::size_t k = g.in_channels * g.kernel_h * g.kernel_w;
  const std::size_t p = ho * wo;

  const Tensor<T> padded = pad(input, g.pad_mode, g.pad_h(), g.pad_w());
  const std::size_t hp = padded.shape().h, wp = padded.shape().w;
  Tensor<T> out({s.n, g.out_channels, ho, wo});
  AlignedBuffer<T> col(k * p);

  Eigen::Map<const RowMat<T>> weight(layer.weight.data().data(), g.out_channels, k);
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bias(layer.bias.data().data(), g.out_channels);
  for (std::size_t b = 0; b < s.n; ++b) {
    im2col(padded.data().data() + b * s.c * hp * wp, s.c, hp, wp, g, ho, wo, col.data());
    Eigen::Map<const RowMat<T>> cols(col.data(), k, p);
    Eigen::Map<RowMat<T>> result(out.data().data() + b * g.out_channels * p, g.out_channels, p);
    result.noalias() = weight * cols;
    result.colwise() += bias;
  }
  require_finite(out, "conv2d_forward output");
  return out;
}

template <class T>
ConvGradients<T> conv2d_backward(const Tensor<T>& input, const ConvLayer<T>& layer,
                                 const Tensor<T>& grad_out) {
  check_conv_input(input, layer);
  const ConvGeometry& g = layer.geometry;
  const Shape s = input.shape();
  const std::size_t ho = g.out_h(s.h), wo = g.out_w(s.w);
  if (grad_out.shape() != Shape{s.n, g.out_channels, ho, wo}) {
    throw ShapeError("conv2d_backward: grad_out " + grad_out.shape().str() + " does not match output " +
                     Shape{s.n, g.out_channels, ho, wo}.str());
  }
  const std::size_t k = g.in_channels * g.kernel_h * g.kernel_w;
  const std::size_t p = ho * wo;

  const Tensor<T> padded = pad(input, g.pad_mode, g.pad_h(), g.pad_w());
  const Shape sp = padded.shape();
  Tensor<T> grad_padded(sp);
  ConvGradients<T> grads{{}, Tensor<T>(g.weight_shape()), Tensor<T>({1, g.out_channels, 1, 1})};
  AlignedBuffer<T> col(k * p);
  AlignedBuffer<T> grad_col(k * p);

  Eigen::Map<const RowMat<T>> weight(layer.weight.data().data(), g.out_channels, k);
  Eigen::Map<RowMat<T>> grad_weight(grads.weight.data().data(), g.out_channels, k);
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> grad_bias(grads.bias.data().data(), g.out_channels);
  for (std::size_t b = 0; b < s.n; ++b) {
    im2col(padded.data().data() + b * s.c * sp.h * sp.w, s.c, sp.h, sp.w, g, ho, wo, col.data());
    Eigen::Map<const RowMat<T>> cols(col.data(), k, p);
    Eigen::Map<const RowMat<T>> go(grad_out.data().data() + b * g.out_channels * p, g.out_channels, p);
    grad_weight.noalias() += go * cols.transpose();
    grad_bias += go.rowwise().sum();
    Eigen::Map<RowMat<T>> gc(grad_col.data(), k, p);
    gc.noalias() = weight.transpose() * go;
    col2im(grad_col.data(), s.c, sp.h, sp.w, g, ho, wo, grad_padded.data().data() + b * s.c * sp.h * sp.w);
  }
  grads.input = pad_adjoint(grad_padded, g.pad_mode, g.pad_h(), g.pad_w());
  require_finite(grads.input, "conv2d_backward input gradient");
  require_finite(grads.weight, "conv2d_backward weight gradient");
  return grads;
}

// ---------------------------------------------------------------------------

namespace {

template <class T, class F>
Tensor<T> map(const Tensor<T>& x, F f) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

template <class T, class F>
Tensor<T> zip(const Tensor<T>& x, const Tensor<T>& y, F f) {
  if (x.shape() != y.shape()) throw ShapeError("pointwise backward: shape mismatch");
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i], y[i]);
  return out;
}

template <class T>
T sigmoid_scalar(T x) {
  return x >= 0 ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

}  // namespace

template <class T>
Tensor<T> elu(const Tensor<T>& x) {
  return map(x, [](T v) { return v > 0 ? v : std::expm1(v); });
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return map(x, [](T v) { return sigmoid_scalar(v); });
}

template <class T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  return map(x, [slope](T v) { return v > 0 ? v : slope * v; });
}

template <class T>
Tensor<T> tanh(const Tensor<T>& x) {
  return map(x, [](T v) { return std::tanh(v); });
}

template <class T>
Tensor<T> elu_backward(const Tensor<T>& x, const Tensor<T>& grad) {
  return zip(x, grad, [](T v, T g) { return v > 0 ? g : g * std::exp(v); });
}

template <class T>
Tensor<T> sigmoid_backward(const Tensor<T>& x, const Tensor<T>& grad) {
  return zip(x, grad, [](T v, T g) {
    const T s = sigmoid_scalar(v);
    return g * s * (T(1) - s);
  });
}

template <class T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& grad, T slope) {
  return zip(x, grad, [slope](T v, T g) { return v > 0 ? g : slope * g; });
}

template <class T>
Tensor<T> tanh_backward_from_output(const Tensor<T>& y, const Tensor<T>& grad) {
  return zip(y, grad, [](T v, T g) { return g * (T(1) - v * v); });
}

// ---------------------------------------------------------------------------

namespace {

// Feature and gate branches share the input, so both are evaluated as one
// convolution with the output channels stacked [feature; gate].
template <class T>
ConvLayer<T> stack_branches(const GatedConvLayer<T>& layer) {
  ConvGeometry g = layer.feature.geometry;
  g.out_channels *= 2;
  ConvLayer<T> both = ConvLayer<T>::zeros(g);
  const std::size_t wn = layer.feature.weight.size();
  std::copy_n(layer.feature.weight.data().begin(), wn, both.weight.data().begin());
  std::copy_n(layer.gate.weight.data().begin(), wn, both.weight.data().begin() + wn);
  const std::size_t bn = layer.feature.bias.size();
  std::copy_n(layer.feature.bias.data().begin(), bn, both.bias.data().begin());
  std::copy_n(layer.gate.bias.data().begin(), bn, both.bias.data().begin() + bn);
  return both;
}

}  // namespace

template <class T>
GatedConvLayer<T> GatedConvLayer<T>::zeros(const ConvGeometry& geometry) {
  return {ConvLayer<T>::zeros(geometry), ConvLayer<T>::zeros(geometry)};
}

template <class T>
GatedConvLayer<T> GatedConvLayer<T>::random(const ConvGeometry& geometry, Rng& rng) {
  GatedConvLayer layer{ConvLayer<T>::random(geometry, rng, std::sqrt(2.0)),
                       ConvLayer<T>::random(geometry, rng, 1.0)};
  return layer;
}

template <class T>
void GatedConvLayer<T>::validate() const {
  if (!(feature.geometry == gate.geometry)) {
    throw ConfigError("gated conv: feature and gate branches have different geometry");
  }
}

template <class T>
Tensor<T> gated_conv_forward(const Tensor<T>& input, const GatedConvLayer<T>& layer,
                             GatedConvCache<T>* cache) {
  layer.validate();
  const Tensor<T> both = conv2d_forward(input, stack_branches(layer));
  const std::size_t c = layer.feature.geometry.out_channels;
  Tensor<T> feature_pre = slice_channels(both, 0, c);
  Tensor<T> gate_pre = slice_channels(both, c, c);
  Tensor<T> out = mul(elu(feature_pre), sigmoid(gate_pre));
  if (cache) {
    cache->feature_pre = std::move(feature_pre);
    cache->gate_pre = std::move(gate_pre);
  }
  return out;
}

template <class T>
GatedConvGradients<T> gated_conv_backward(const Tensor<T>& input, const GatedConvLayer<T>& layer,
                                          const Tensor<T>& grad_out, const GatedConvCache<T>* cache) {
  layer.validate();
  GatedConvCache<T> local;
  if (!cache) {
    gated_conv_forward(input, layer, &local);
    cache = &local;
  }
  const Tensor<T> act_feature = elu(cache->feature_pre);
  const Tensor<T> act_gate = sigmoid(cache->gate_pre);
  const Tensor<T> grad_feature_pre = elu_backward(cache->feature_pre, mul(grad_out, act_gate));
  const Tensor<T> grad_gate_pre = sigmoid_backward(cache->gate_pre, mul(grad_out, act_feature));

  ConvGradients<T> g = conv2d_backward(input, stack_branches(layer),
                                       concat_channels(grad_feature_pre, grad_gate_pre));
  const std::size_t wn = layer.feature.weight.size();
  const std::size_t bn = layer.feature.bias.size();
  GatedConvGradients<T> out;
  out.input = std::move(g.input);
  out.feature.weight = Tensor<T>(layer.feature.weight.shape(),
                                 std::vector<T>(g.weight.data().begin(), g.weight.data().begin() + wn));
  out.gate.weight = Tensor<T>(layer.gate.weight.shape(),
                              std::vector<T>(g.weight.data().begin() + wn, g.weight.data().end()));
  out.feature.bias = Tensor<T>(layer.feature.bias.shape(),
                               std::vector<T>(g.bias.data().begin(), g.bias.data().begin() + bn));
  out.gate.bias = Tensor<T>(layer.gate.bias.shape(),
                            std::vector<T>(g.bias.data().begin() + bn, g.bias.data().end()));
  return out;
}

// ---------------------------------------------------------------------------

template <class T>
InstanceNormLayer<T> InstanceNormLayer<T>::identity(std::size_t channels, double epsilon) {
  if (!(epsilon > 0.0)) throw ParameterError("instance norm epsilon must be positive");
  return {Tensor<T>({1, channels, 1, 1}, T(1)), Tensor<T>({1, channels, 1, 1}, T(0)), epsilon};
}

namespace {

template <class T>
void check_norm(const Tensor<T>& input, const InstanceNormLayer<T>& layer) {
  const Shape s = input.shape();
  if (s.plane() == 0) throw ShapeError("instance norm needs H*W >= 1");
  if (layer.gamma.shape() != Shape{1, s.c, 1, 1} || layer.beta.shape() != Shape{1, s.c, 1, 1}) {
    throw ShapeError("instance norm parameters do not match " + std::to_string(s.c) + " channels");
  }
  if (!(layer.epsilon > 0.0)) throw ParameterError("instance norm epsilon must be positive");
}

// Mean and 1/sqrt(var + eps) of one plane, accumulated in double.
template <class T>
std::pair<double, double> plane_moments(std::span<const T> x, double epsilon) {
  double m = 0.0;
  for (T v : x) m += v;
  m /= static_cast<double>(x.size());
  double var = 0.0;
  for (T v : x) var += (v - m) * (v - m);
  var /= static_cast<double>(x.size());
  return {m, 1.0 / std::sqrt(var + epsilon)};
}

}  // namespace

template <class T>
Tensor<T> instance_norm_forward(const Tensor<T>& input, const InstanceNormLayer<T>& layer) {
  check_norm(input, layer);
  const Shape s = input.shape();
  Tensor<T> out(s);
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      auto x = input.plane(b, c);
      auto y = out.plane(b, c);
      const auto [m, inv] = plane_moments(x, layer.epsilon);
      const double gamma = layer.gamma[c], beta = layer.beta[c];
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = static_cast<T>((x[i] - m) * inv * gamma + beta);
    }
  }
  require_finite(out, "instance_norm_forward output");
  return out;
}

template <class T>
InstanceNormGradients<T> instance_norm_backward(const Tensor<T>& input, const InstanceNormLayer<T>& layer,
                                                const Tensor<T>& grad_out) {
  check_norm(input, layer);
  const Shape s = input.shape();
  if (grad_out.shape() != s) throw ShapeError("instance_norm_backward: gradient shape mismatch");
  InstanceNormGradients<T> g{Tensor<T>(s), Tensor<T>({1, s.c, 1, 1}), Tensor<T>({1, s.c, 1, 1})};
  const double count = static_cast<double>(s.plane());
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      auto x = input.plane(b, c);
      auto go = grad_out.plane(b, c);
      auto gi = g.input.plane(b, c);
      const auto [m, inv] = plane_moments(x, layer.epsilon);
      const double gamma = layer.gamma[c];
      double sum_g = 0.0, sum_gx = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double xhat = (x[i] - m) * inv;
        sum_g += go[i];
        sum_gx += go[i] * xhat;
      }
      g.gamma[c] += static_cast<T>(sum_gx);
      g.beta[c] += static_cast<T>(sum_g);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double xhat = (x[i] - m) * inv;
        gi[i] = static_cast<T>(gamma * inv * (go[i] - sum_g / count - xhat * sum_gx / count));
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

template <class T>
Tensor<T> upsample_nearest2x(const Tensor<T>& input) {
  const Shape s = input.shape();
  Tensor<T> out({s.n, s.c, 2 * s.h, 2 * s.w});
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      auto src = input.plane(b, c);
      auto dst = out.plane(b, c);
      for (std::size_t y = 0; y < 2 * s.h; ++y) {
        for (std::size_t x = 0; x < 2 * s.w; ++x) dst[y * 2 * s.w + x] = src[(y / 2) * s.w + x / 2];
      }
    }
  }
  return out;
}

template <class T>
Tensor<T> upsample_nearest2x_backward(const Tensor<T>& grad_out) {
  const Shape s = grad_out.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0) throw ShapeError("upsample backward needs even extents");
  Tensor<T> out({s.n, s.c, s.h / 2, s.w / 2});
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      auto src = grad_out.plane(b, c);
      auto dst = out.plane(b, c);
      for (std::size_t y = 0; y < s.h; ++y) {
        for (std::size_t x = 0; x < s.w; ++x) dst[(y / 2) * (s.w / 2) + x / 2] += src[y * s.w + x];
      }
    }
  }
  return out;
}

#define CYLIN_INSTANTIATE(T)                                                                          \
  template Tensor<T> pad(const Tensor<T>&, PadMode, std::size_t, std::size_t);                        \
  template Tensor<T> pad_adjoint(const Tensor<T>&, PadMode, std::size_t, std::size_t);                \
  template struct ConvLayer<T>;                                                                       \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const ConvLayer<T>&);                           \
  template ConvGradients<T> conv2d_backward(const Tensor<T>&, const ConvLayer<T>&, const Tensor<T>&); \
  template Tensor<T> elu(const Tensor<T>&);                                                           \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                       \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                                 \
  template Tensor<T> tanh(const Tensor<T>&);                                                          \
  template Tensor<T> elu_backward(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> sigmoid_backward(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> leaky_relu_backward(const Tensor<T>&, const Tensor<T>&, T);                      \
  template Tensor<T> tanh_backward_from_output(const Tensor<T>&, const Tensor<T>&);                   \
  template struct GatedConvLayer<T>;                                                                  \
  template Tensor<T> gated_conv_forward(const Tensor<T>&, const GatedConvLayer<T>&,                   \
                                        GatedConvCache<T>*);                                          \
  template GatedConvGradients<T> gated_conv_backward(const Tensor<T>&, const GatedConvLayer<T>&,      \
                                                     const Tensor<T>&, const GatedConvCache<T>*);     \
  template struct InstanceNormLayer<T>;                                                               \
  template Tensor<T> instance_norm_forward(const Tensor<T>&, const InstanceNormLayer<T>&);            \
  template InstanceNormGradients<T> instance_norm_backward(const Tensor<T>&,                          \
                                                           const InstanceNormLayer<T>&,               \
                                                           const Tensor<T>&);                         \
  template Tensor<T> upsample_nearest2x(const Tensor<T>&);                                            \
  template Tensor<T> upsample_nearest2x_backward(const Tensor<T>&);

CYLIN_INSTANTIATE(float)
CYLIN_INSTANTIATE(double)

#undef CYLIN_INSTANTIATE

}  // namespace cylin
