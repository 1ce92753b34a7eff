#pragma once

#include "cylin/tensor.hpp"

namespace cylin {

/// 10 log10(peak^2 / MSE), capped at 99 dB when MSE < 1e-12. The default
/// peak matches the [-1, 1] value range.
template <class T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak = 2.0);

/// Mean SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, over the valid window positions of every (n, c) plane, then
/// averaged over planes. Planes smaller than the window are a ShapeError.
template <class T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, double peak = 2.0);

/// Mean |col_0 - col_{W-1}| divided by the mean adjacent-column |difference|
/// over the interior pairs (w, w+1), w = 0..W-2. Returns 1 when both are 0.
template <class T>
double seam_metric(const Tensor<T>& image);

}  // namespace cylin
