#include "cylin/metrics.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace cylin {

template <class T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak) {
  if (a.shape() != b.shape()) throw ShapeError("psnr: shape mismatch");
  if (a.empty()) throw ShapeError("psnr of empty tensors");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.size());
  if (mse < 1e-12) return 99.0;
  return std::min(99.0, 10.0 * std::log10(peak * peak / mse));
}

namespace {

constexpr std::size_t kWindow = 11;

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> g{};
  double s = 0.0;
  for (std::size_t i = 0; i < kWindow; ++i) {
    const double x = static_cast<double>(i) - 5.0;
    g[i] = std::exp(-x * x / (2.0 * 1.5 * 1.5));
    s += g[i];
  }
  for (double& v : g) v /= s;
  return g;
}

// Valid-mode separable filtering of an h x w plane.
std::vector<double> filter_valid(const std::vector<double>& x, std::size_t h, std::size_t w,
                                 const std::array<double, kWindow>& g) {
  const std::size_t wo = w - kWindow + 1, ho = h - kWindow + 1;
  std::vector<double> tmp(h * wo, 0.0), out(ho * wo, 0.0);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < wo; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kWindow; ++k) acc += g[k] * x[r * w + c + k];
      tmp[r * wo + c] = acc;
    }
  }
  for (std::size_t r = 0; r < ho; ++r) {
    for (std::size_t c = 0; c < wo; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kWindow; ++k) acc += g[k] * tmp[(r + k) * wo + c];
      out[r * wo + c] = acc;
    }
  }
  return out;
}

}  // namespace

template <class T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, double peak) {
  if (a.shape() != b.shape()) throw ShapeError("ssim: shape mismatch");
  const Shape s = a.shape();
  if (s.h < kWindow || s.w < kWindow) throw ShapeError("ssim needs planes of at least 11x11");
  const auto g = gaussian_taps();
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  double total = 0.0;
  std::vector<double> x(s.plane()), y(s.plane()), xx(s.plane()), yy(s.plane()), xy(s.plane());
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      auto pa = a.plane(n, c);
      auto pb = b.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) {
        x[i] = pa[i];
        y[i] = pb[i];
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
      }
      const auto mx = filter_valid(x, s.h, s.w, g);
      const auto my = filter_valid(y, s.h, s.w, g);
      const auto sxx = filter_valid(xx, s.h, s.w, g);
      const auto syy = filter_valid(yy, s.h, s.w, g);
      const auto sxy = filter_valid(xy, s.h, s.w, g);
      double acc = 0.0;
      for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = sxx[i] - mx[i] * mx[i];
        const double vy = syy[i] - my[i] * my[i];
        const double cxy = sxy[i] - mx[i] * my[i];
        acc += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2)) /
               ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
      }
      total += acc / static_cast<double>(mx.size());
    }
  }
  return total / static_cast<double>(s.n * s.c);
}

template <class T>
double seam_metric(const Tensor<T>& image) {
  const Shape s = image.shape();
  if (s.w < 4) throw ShapeError("seam_metric needs W >= 4");
  double seam = 0.0, interior = 0.0;
  std::size_t rows = 0;
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      auto p = image.plane(n, c);
      for (std::size_t h = 0; h < s.h; ++h) {
        const auto* row = p.data() + h * s.w;
        seam += std::abs(static_cast<double>(row[0]) - static_cast<double>(row[s.w - 1]));
        for (std::size_t w = 0; w + 1 < s.w; ++w) {
          interior += std::abs(static_cast<double>(row[w + 1]) - static_cast<double>(row[w]));
        }
        ++rows;
      }
    }
  }
  seam /= static_cast<double>(rows);
  interior /= static_cast<double>(rows * (s.w - 1));
  if (interior == 0.0) return seam == 0.0 ? 1.0 : seam / 1e-12;
  return seam / interior;
}

template double psnr(const Tensor<float>&, const Tensor<float>&, double);
template double psnr(const Tensor<double>&, const Tensor<double>&, double);
template double ssim(const Tensor<float>&, const Tensor<float>&, double);
template double ssim(const Tensor<double>&, const Tensor<double>&, double);
template double seam_metric(const Tensor<float>&);
template double seam_metric(const Tensor<double>&);

}  // namespace cylin
