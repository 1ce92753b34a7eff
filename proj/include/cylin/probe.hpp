#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "cylin/conv.hpp"
#include "cylin/net.hpp"
#include "cylin/tensor.hpp"

namespace cylin {

/// A sequential stack of convolutions with an optional pointwise activation
/// between layers. The smallest network the probes operate on.
template <class T>
struct LayerStack {
  enum class Activation { None, Elu };

  std::vector<ConvLayer<T>> layers;
  Activation activation = Activation::None;

  Tensor<T> forward(const Tensor<T>& input) const;
  /// Returns every layer's output, first layer first.
  std::vector<Tensor<T>> forward_all(const Tensor<T>& input) const;
  Tensor<T> input_gradient(const Tensor<T>& input, const Tensor<T>& grad_out) const;
};

/// Exposes a generator as a single-tensor network: the input is the image
/// channels followed by the mask channel.
template <class T>
struct GeneratorProbe {
  const Generator<T>& generator;

  Tensor<T> forward(const Tensor<T>& input) const;
  Tensor<T> input_gradient(const Tensor<T>& input, const Tensor<T>& grad_out) const;
};

struct PixelTarget {
  std::size_t h = 0;  // polar row
  std::size_t w = 0;  // azimuth column
};

/// Channel-summed |d out(T) / d in(S)| over source pixels S, [1, 1, H, W].
template <class T>
struct InfluenceMap {
  Tensor<T> values;
  PixelTarget target;
};

/// Exact Jacobian row for one output pixel by backpropagating a one-hot
/// gradient. `Net` provides forward(x) and input_gradient(x, g).
template <class T, class Net>
InfluenceMap<T> influence_map(const Net& net, const Tensor<T>& input, PixelTarget target,
                              std::size_t out_channel = 0) {
  if (input.shape().n != 1) throw ShapeError("influence_map expects a single-sample input");
  const Tensor<T> out = net.forward(input);
  const Shape so = out.shape();
  if (target.h >= so.h || target.w >= so.w || out_channel >= so.c) {
    throw ParameterError("influence target outside the output bounds " + so.str());
  }
  Tensor<T> one_hot(so);
  one_hot(0, out_channel, target.h, target.w) = T(1);
  const Tensor<T> grad = net.input_gradient(input, one_hot);
  const Shape si = grad.shape();
  InfluenceMap<T> im{Tensor<T>({1, 1, si.h, si.w}), target};
  for (std::size_t c = 0; c < si.c; ++c) {
    auto g = grad.plane(0, c);
    auto dst = im.values.plane(0, 0);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += std::abs(g[i]);
  }
  return im;
}

/// Column means of an influence map.
template <class T>
std::vector<double> influence_column_means(const InfluenceMap<T>& im);

/// Max over adjacent column pairs, including the (W-1, 0) seam pair, of the
/// column-mean jump, normalised by the map's maximum. 0 for an all-zero map.
template <class T>
double wraparound_continuity(const InfluenceMap<T>& im);

/// The seam pair's term of wraparound_continuity alone.
template <class T>
double seam_jump(const InfluenceMap<T>& im);

enum class Axis { Azimuth, Polar };

/// Reference profile for the line statistic.
enum class LineReference {
  Interior,  ///< median over the middle 50% of indices along the axis
  All,       ///< median over every index; shift-invariant on a cylinder
};

/// Per-pixel deviation from the reference profile, averaged over batch and
/// channels: [1, 1, H, W]. For Azimuth the reference of row h is the median
/// of F(n,c,h,.) over the reference columns.
template <class T>
TensorD line_deviation_field(const Tensor<T>& feature, Axis axis, LineReference ref = LineReference::Interior);

/// Mean of the deviation field along the other axis: one entry per column
/// (Azimuth) or per row (Polar).
template <class T>
std::vector<double> line_pattern_stat(const Tensor<T>& feature, Axis axis,
                                      LineReference ref = LineReference::Interior);

/// Sum of the azimuthal and polar deviation fields.
template <class T>
TensorD grid_pattern(const Tensor<T>& feature, LineReference ref = LineReference::Interior);

/// Least-squares polynomial profile of a sequence.
struct PositionalProfile {
  std::vector<double> values;
  std::size_t degree = 0;
  /// Coefficients in the scaled variable t = (2x - (x_min + x_max)) / (x_max - x_min).
  std::vector<double> scaled_coefficients;
  /// The same polynomial expanded in the raw index x (constant term first).
  std::vector<double> coefficients;
  double residual_rms = 0.0;

  double evaluate(double x) const;
};

/// Fit at indices 0..n-1.
PositionalProfile fit_positional_profile(std::span<const double> values, std::size_t degree);
/// Fit at explicit abscissae. All-equal abscissae is a NumericError.
PositionalProfile fit_positional_profile(std::span<const double> x, std::span<const double> values,
                                         std::size_t degree);

enum class KernelClass { Horizontal, Vertical, HplusV, Other };

std::string_view to_string(KernelClass kc);

struct KernelVariances {
  double within_row = 0.0;  // mean over rows of the variance inside each row
  double within_col = 0.0;
  double total = 0.0;
};

KernelVariances kernel_variances(std::span<const double> kernel, std::size_t rows, std::size_t cols);

/// Horizontal when only the within-row ratio is below tau, Vertical when only
/// the within-column ratio is, HplusV when both are (including constant
/// kernels), Other otherwise.
KernelClass classify_kernel(std::span<const double> kernel, std::size_t rows, std::size_t cols, double tau = 0.1);

struct KernelCensus {
  std::size_t horizontal = 0;
  std::size_t vertical = 0;
  std::size_t both = 0;
  std::size_t other = 0;
};

/// Classifies every [KH, KW] slice of a [C', C, KH, KW] weight.
template <class T>
KernelCensus classify_weight(const Tensor<T>& weight, double tau, std::vector<KernelClass>* per_kernel = nullptr);

}  // namespace cylin
