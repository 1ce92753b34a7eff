// Shared test oracles. Nothing here calls into the library's convolution or
// padding code, so the loops below act as independent references.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>

#include "cylin/conv.hpp"
#include "cylin/tensor.hpp"

namespace cylin::test {

inline TensorD random_tensor(Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  return rng_uniform<double>(rng, s, lo, hi);
}

/// Sum of elementwise products.
template <class T>
double dot(const Tensor<T>& a, const Tensor<T>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

/// Central differences of a scalar function with respect to every entry of x.
inline TensorD numeric_gradient(const std::function<double(const TensorD&)>& f, const TensorD& x, double h = 1e-5) {
  TensorD g(x.shape());
  TensorD probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = probe[i];
    probe[i] = keep + h;
    const double fp = f(probe);
    probe[i] = keep - h;
    const double fm = f(probe);
    probe[i] = keep;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// max_i |a_i - n_i| / max(|a_i|, |n_i|, floor). The floor keeps entries
/// whose true gradient is ~0 from dividing roundoff by roundoff.
inline double max_relative_error(const TensorD& analytic, const TensorD& numeric, double floor = 1e-3) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

/// Convolution by direct summation with explicit index arithmetic:
///   out(n,t,y,x) = b_t + sum_c sum_i sum_j K(t,c,i,j) F(n,c, s_h y - (i-M) d_h, s_w x - (j-N) d_w)
/// where an out-of-range azimuth index wraps modulo W in the circular modes
/// and reads zero otherwise, and an out-of-range polar index reads zero or
/// reflects (row -1 -> row 1).
template <class T>
Tensor<T> naive_conv(const Tensor<T>& F, const ConvLayer<T>& layer) {
  const ConvGeometry& g = layer.geometry;
  const Shape s = F.shape();
  const long H = static_cast<long>(s.h), W = static_cast<long>(s.w);
  const long M = static_cast<long>(g.kernel_h / 2), N = static_cast<long>(g.kernel_w / 2);
  const std::size_t ho = (s.h + g.stride_h - 1) / g.stride_h, wo = (s.w + g.stride_w - 1) / g.stride_w;
  Tensor<T> out({s.n, g.out_channels, ho, wo});
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t t = 0; t < g.out_channels; ++t) {
      for (std::size_t y = 0; y < ho; ++y) {
        for (std::size_t x = 0; x < wo; ++x) {
          double acc = layer.bias(0, t, 0, 0);
          for (std::size_t c = 0; c < g.in_channels; ++c) {
            for (long i = 0; i < static_cast<long>(g.kernel_h); ++i) {
              for (long j = 0; j < static_cast<long>(g.kernel_w); ++j) {
                long r = static_cast<long>(g.stride_h * y) - (i - M) * static_cast<long>(g.dilation_h);
                long q = static_cast<long>(g.stride_w * x) - (j - N) * static_cast<long>(g.dilation_w);
                if (g.pad_mode == PadMode::ZeroBoth) {
                  if (q < 0 || q >= W) continue;
                } else {
                  q = ((q % W) + W) % W;
                }
                if (r < 0 || r >= H) {
                  if (g.pad_mode != PadMode::CircularAzimuthMirrorPolar) continue;
                  r = r < 0 ? -r : 2 * (H - 1) - r;
                }
                acc += static_cast<double>(layer.weight(t, c, i, j)) * static_cast<double>(F(n, c, r, q));
              }
            }
          }
          out(n, t, y, x) = static_cast<T>(acc);
        }
      }
    }
  }
  return out;
}

/// Max over (n, c, h) of the spread of a row along W.
template <class T>
double azimuth_spread(const Tensor<T>& t) {
  const Shape s = t.shape();
  double worst = 0.0;
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      for (std::size_t h = 0; h < s.h; ++h) {
        double lo = t(n, c, h, 0), hi = lo;
        for (std::size_t w = 1; w < s.w; ++w) {
          lo = std::min(lo, static_cast<double>(t(n, c, h, w)));
          hi = std::max(hi, static_cast<double>(t(n, c, h, w)));
        }
        worst = std::max(worst, hi - lo);
      }
    }
  }
  return worst;
}

/// Tensor whose rows are constant along W.
inline TensorD azimuth_constant(Shape s, std::uint64_t seed) {
  Rng rng(seed);
  TensorD t(s);
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      for (std::size_t h = 0; h < s.h; ++h) {
        const double v = 2.0 * rng.uniform() - 1.0;
        for (std::size_t w = 0; w < s.w; ++w) t(n, c, h, w) = v;
      }
    }
  }
  return t;
}

}  // namespace cylin::test
