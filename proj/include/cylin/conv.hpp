#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "cylin/tensor.hpp"

namespace cylin {

/// Border handling for the two spatial axes.
enum class PadMode {
  ZeroBoth,                    ///< zeros on both axes (vanilla convolution)
  CircularAzimuth,             ///< wrap on W, zeros on H (cylinder convolution)
  CircularAzimuthMirrorPolar,  ///< wrap on W, reflect on H without repeating the edge row
};

std::string_view to_string(PadMode mode);
PadMode parse_pad_mode(std::string_view text);

inline bool wraps_azimuth(PadMode mode) { return mode != PadMode::ZeroBoth; }

/// Pads `m` rows top and bottom, `n` columns left and right.
/// Circular columns are taken modulo W; mirrored rows map row -1 to row 1.
template <class T>
Tensor<T> pad(const Tensor<T>& input, PadMode mode, std::size_t m, std::size_t n);

/// Adjoint of pad(): folds a gradient on the padded grid back onto the
/// original grid, accumulating wrapped and reflected contributions.
template <class T>
Tensor<T> pad_adjoint(const Tensor<T>& grad_padded, PadMode mode, std::size_t m, std::size_t n);

struct ConvGeometry {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_h = 3;  // 2M+1, polar extent
  std::size_t kernel_w = 3;  // 2N+1, azimuthal extent
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  std::size_t dilation_h = 1;
  std::size_t dilation_w = 1;
  PadMode pad_mode = PadMode::CircularAzimuth;

  // "Same" padding: M*d_h rows, N*d_w columns.
  std::size_t pad_h() const { return (kernel_h / 2) * dilation_h; }
  std::size_t pad_w() const { return (kernel_w / 2) * dilation_w; }
  std::size_t out_h(std::size_t h) const { return (h + stride_h - 1) / stride_h; }
  std::size_t out_w(std::size_t w) const { return (w + stride_w - 1) / stride_w; }
  Shape weight_shape() const { return {out_channels, in_channels, kernel_h, kernel_w}; }

  /// Throws ParameterError for even kernels or zero strides/dilations.
  void validate() const;
  bool operator==(const ConvGeometry&) const = default;
};

/// One convolution layer. `weight` is [C', C, KH, KW], `bias` is [1, C', 1, 1].
///
/// The forward pass follows the cylinder-convolution sum literally:
///   out(t, h, w) = bias_t + sum_{c,i,j} weight(t, c, i, j) *
///                  F(c, s_h*h - (i - M)*d_h, wrap(s_w*w - (j - N)*d_w))
/// i.e. a true (flipped-kernel) convolution, where "wrap" is the modulo on
/// the azimuth for circular modes and zero extension otherwise.
template <class T>
struct ConvLayer {
  ConvGeometry geometry;
  Tensor<T> weight;
  Tensor<T> bias;

  /// Zero-initialised parameters.
  static ConvLayer zeros(const ConvGeometry& geometry);
  /// Gaussian weights with std = gain / sqrt(fan_in), zero bias.
  static ConvLayer random(const ConvGeometry& geometry, Rng& rng, double gain = 1.0);
};

template <class T>
struct ConvGradients {
  Tensor<T> input;
  Tensor<T> weight;
  Tensor<T> bias;
};

template <class T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvLayer<T>& layer);

/// Exact adjoint of conv2d_forward with respect to input, weight and bias.
template <class T>
ConvGradients<T> conv2d_backward(const Tensor<T>& input, const ConvLayer<T>& layer,
                                 const Tensor<T>& grad_out);

// ---------------------------------------------------------------------------
// Pointwise nonlinearities

template <class T>
Tensor<T> elu(const Tensor<T>& x);
template <class T>
Tensor<T> sigmoid(const Tensor<T>& x);
template <class T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope);
template <class T>
Tensor<T> tanh(const Tensor<T>& x);

/// grad * d/dx f(x) for the nonlinearities above; `x` is the pre-activation.
template <class T>
Tensor<T> elu_backward(const Tensor<T>& x, const Tensor<T>& grad);
template <class T>
Tensor<T> sigmoid_backward(const Tensor<T>& x, const Tensor<T>& grad);
template <class T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& grad, T slope);
/// Takes the activation y = tanh(x), not x.
template <class T>
Tensor<T> tanh_backward_from_output(const Tensor<T>& y, const Tensor<T>& grad);

// ---------------------------------------------------------------------------
// Gated convolution: elu(feature(F)) * sigmoid(gate(F))

template <class T>
struct GatedConvLayer {
  ConvLayer<T> feature;
  ConvLayer<T> gate;

  static GatedConvLayer zeros(const ConvGeometry& geometry);
  static GatedConvLayer random(const ConvGeometry& geometry, Rng& rng);
  /// Throws ConfigError when the two branches disagree on geometry.
  void validate() const;
};

template <class T>
struct GatedConvCache {
  Tensor<T> feature_pre;
  Tensor<T> gate_pre;
};

template <class T>
struct GatedConvGradients {
  Tensor<T> input;
  ConvGradients<T> feature;  // .input left empty
  ConvGradients<T> gate;     // .input left empty
};

template <class T>
Tensor<T> gated_conv_forward(const Tensor<T>& input, const GatedConvLayer<T>& layer,
                             GatedConvCache<T>* cache = nullptr);

/// Recomputes the pre-activations unless a cache from the forward pass is given.
template <class T>
GatedConvGradients<T> gated_conv_backward(const Tensor<T>& input, const GatedConvLayer<T>& layer,
                                          const Tensor<T>& grad_out,
                                          const GatedConvCache<T>* cache = nullptr);

// ---------------------------------------------------------------------------
// Instance normalisation with per-channel affine parameters.

template <class T>
struct InstanceNormLayer {
  Tensor<T> gamma;  // [1, C, 1, 1]
  Tensor<T> beta;   // [1, C, 1, 1]
  double epsilon = 1e-5;

  static InstanceNormLayer identity(std::size_t channels, double epsilon = 1e-5);
};

template <class T>
struct InstanceNormGradients {
  Tensor<T> input;
  Tensor<T> gamma;
  Tensor<T> beta;
};

template <class T>
Tensor<T> instance_norm_forward(const Tensor<T>& input, const InstanceNormLayer<T>& layer);

template <class T>
InstanceNormGradients<T> instance_norm_backward(const Tensor<T>& input,
                                                const InstanceNormLayer<T>& layer,
                                                const Tensor<T>& grad_out);

// ---------------------------------------------------------------------------
// Resampling

template <class T>
Tensor<T> upsample_nearest2x(const Tensor<T>& input);

/// Adjoint of upsample_nearest2x: sums each 2x2 block.
template <class T>
Tensor<T> upsample_nearest2x_backward(const Tensor<T>& grad_out);

}  // namespace cylin
