#include "cylin/probe.hpp"

#include <algorithm>
#include <cmath>

namespace cylin {

template <class T>
Tensor<T> LayerStack<T>::forward(const Tensor<T>& input) const {
  Tensor<T> x = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = conv2d_forward(x, layers[i]);
    if (activation == Activation::Elu && i + 1 < layers.size()) x = elu(x);
  }
  return x;
}

template <class T>
std::vector<Tensor<T>> LayerStack<T>::forward_all(const Tensor<T>& input) const {
  std::vector<Tensor<T>> outs;
  Tensor<T> x = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = conv2d_forward(x, layers[i]);
    if (activation == Activation::Elu && i + 1 < layers.size()) x = elu(x);
    outs.push_back(x);
  }
  return outs;
}

template <class T>
Tensor<T> LayerStack<T>::input_gradient(const Tensor<T>& input, const Tensor<T>& grad_out) const {
  std::vector<Tensor<T>> inputs;
  std::vector<Tensor<T>> pre;
  Tensor<T> x = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    inputs.push_back(x);
    Tensor<T> y = conv2d_forward(x, layers[i]);
    pre.push_back(y);
    x = activation == Activation::Elu && i + 1 < layers.size() ? elu(y) : y;
  }
  Tensor<T> g = grad_out;
  for (std::size_t i = layers.size(); i-- > 0;) {
    if (activation == Activation::Elu && i + 1 < layers.size()) g = elu_backward(pre[i], g);
    g = conv2d_backward(inputs[i], layers[i], g).input;
  }
  return g;
}

template <class T>
Tensor<T> GeneratorProbe<T>::forward(const Tensor<T>& input) const {
  const std::size_t c = generator.config().image_channels;
  return generator.predict(slice_channels(input, 0, c), slice_channels(input, c, 1));
}

template <class T>
Tensor<T> GeneratorProbe<T>::input_gradient(const Tensor<T>& input, const Tensor<T>& grad_out) const {
  const std::size_t c = generator.config().image_channels;
  GeneratorCache<T> cache;
  generator.predict(slice_channels(input, 0, c), slice_channels(input, c, 1), &cache);
  auto g = generator.backward(cache, grad_out);
  return concat_channels(g.image, g.mask);
}

// ---------------------------------------------------------------------------

template <class T>
std::vector<double> influence_column_means(const InfluenceMap<T>& im) {
  const Shape s = im.values.shape();
  std::vector<double> cols(s.w, 0.0);
  for (std::size_t h = 0; h < s.h; ++h) {
    for (std::size_t w = 0; w < s.w; ++w) cols[w] += im.values(0, 0, h, w);
  }
  for (double& v : cols) v /= static_cast<double>(s.h);
  return cols;
}

template <class T>
double wraparound_continuity(const InfluenceMap<T>& im) {
  const double peak = max_abs(im.values);
  if (peak == 0.0) return 0.0;
  const auto cols = influence_column_means(im);
  double worst = 0.0;
  for (std::size_t w = 0; w < cols.size(); ++w) {
    worst = std::max(worst, std::abs(cols[w] - cols[(w + 1) % cols.size()]));
  }
  return worst / peak;
}

template <class T>
double seam_jump(const InfluenceMap<T>& im) {
  const double peak = max_abs(im.values);
  if (peak == 0.0) return 0.0;
  const auto cols = influence_column_means(im);
  return std::abs(cols.back() - cols.front()) / peak;
}

// ---------------------------------------------------------------------------

namespace {

double median(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<long>(mid));
  return 0.5 * (lower + upper);
}

// Index range [first, last) of the reference slice along an axis of length n.
std::pair<std::size_t, std::size_t> reference_range(std::size_t n, LineReference ref) {
  if (ref == LineReference::All) return {0, n};
  const std::size_t q = n / 4;
  return {q, n - q};
}

}  // namespace

template <class T>
TensorD line_deviation_field(const Tensor<T>& feature, Axis axis, LineReference ref) {
  const Shape s = feature.shape();
  if (s.h < 3 || s.w < 3) throw ShapeError("line statistics need spatial extents >= 3");
  TensorD field({1, 1, s.h, s.w});
  std::vector<double> buf;
  const double norm = 1.0 / static_cast<double>(s.n * s.c);
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      auto x = feature.plane(b, c);
      if (axis == Axis::Azimuth) {
        const auto [lo, hi] = reference_range(s.w, ref);
        for (std::size_t h = 0; h < s.h; ++h) {
          buf.assign(x.begin() + h * s.w + lo, x.begin() + h * s.w + hi);
          const double m = median(buf);
          for (std::size_t w = 0; w < s.w; ++w) field(0, 0, h, w) += norm * std::abs(x[h * s.w + w] - m);
        }
      } else {
        const auto [lo, hi] = reference_range(s.h, ref);
        for (std::size_t w = 0; w < s.w; ++w) {
          buf.clear();
          for (std::size_t h = lo; h < hi; ++h) buf.push_back(x[h * s.w + w]);
          const double m = median(buf);
          for (std::size_t h = 0; h < s.h; ++h) field(0, 0, h, w) += norm * std::abs(x[h * s.w + w] - m);
        }
      }
    }
  }
  return field;
}

template <class T>
std::vector<double> line_pattern_stat(const Tensor<T>& feature, Axis axis, LineReference ref) {
  const TensorD field = line_deviation_field(feature, axis, ref);
  const Shape s = field.shape();
  if (axis == Axis::Azimuth) {
    std::vector<double> out(s.w, 0.0);
    for (std::size_t h = 0; h < s.h; ++h) {
      for (std::size_t w = 0; w < s.w; ++w) out[w] += field(0, 0, h, w) / static_cast<double>(s.h);
    }
    return out;
  }
  std::vector<double> out(s.h, 0.0);
  for (std::size_t h = 0; h < s.h; ++h) {
    for (std::size_t w = 0; w < s.w; ++w) out[h] += field(0, 0, h, w) / static_cast<double>(s.w);
  }
  return out;
}

template <class T>
TensorD grid_pattern(const Tensor<T>& feature, LineReference ref) {
  return add(line_deviation_field(feature, Axis::Azimuth, ref), line_deviation_field(feature, Axis::Polar, ref));
}

// ---------------------------------------------------------------------------

double PositionalProfile::evaluate(double x) const {
  double acc = 0.0;
  for (std::size_t k = coefficients.size(); k-- > 0;) acc = acc * x + coefficients[k];
  return acc;
}

namespace {

// Gaussian elimination with partial pivoting on a small dense system.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, std::size_t n) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    }
    if (std::abs(a[piv * n + col]) < 1e-14) throw NumericError("polynomial fit: singular normal equations");
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[piv * n + j]);
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      for (std::size_t j = col; j < n; ++j) a[r * n + j] -= f * a[col * n + j];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double acc = b[r];
    for (std::size_t j = r + 1; j < n; ++j) acc -= a[r * n + j] * x[j];
    x[r] = acc / a[r * n + r];
  }
  return x;
}

}  // namespace

PositionalProfile fit_positional_profile(std::span<const double> values, std::size_t degree) {
  std::vector<double> x(values.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  return fit_positional_profile(x, values, degree);
}

PositionalProfile fit_positional_profile(std::span<const double> x, std::span<const double> values,
                                         std::size_t degree) {
  if (x.size() != values.size()) throw ShapeError("fit_positional_profile: abscissae/values length mismatch");
  if (values.size() <= degree) throw ParameterError("fit_positional_profile: need more samples than the degree");
  const auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
  const double xmin = *xmin_it, xmax = *xmax_it;
  if (!(xmax > xmin)) throw NumericError("fit_positional_profile: all abscissae are equal");
  const double a = 2.0 / (xmax - xmin);
  const double b = -(xmin + xmax) / (xmax - xmin);

  const std::size_t p = degree + 1;
  std::vector<double> ata(p * p, 0.0), aty(p, 0.0), powers(p);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = a * x[i] + b;
    powers[0] = 1.0;
    for (std::size_t k = 1; k < p; ++k) powers[k] = powers[k - 1] * t;
    for (std::size_t r = 0; r < p; ++r) {
      aty[r] += powers[r] * values[i];
      for (std::size_t c = 0; c < p; ++c) ata[r * p + c] += powers[r] * powers[c];
    }
  }
  PositionalProfile prof;
  prof.values.assign(values.begin(), values.end());
  prof.degree = degree;
  prof.scaled_coefficients = solve_dense(std::move(ata), std::move(aty), p);

  // Expand sum_k c_k (a x + b)^k in powers of x.
  prof.coefficients.assign(p, 0.0);
  std::vector<double> basis{1.0};  // coefficients of (a x + b)^k
  for (std::size_t k = 0; k < p; ++k) {
    for (std::size_t j = 0; j < basis.size(); ++j) prof.coefficients[j] += prof.scaled_coefficients[k] * basis[j];
    std::vector<double> next(basis.size() + 1, 0.0);
    for (std::size_t j = 0; j < basis.size(); ++j) {
      next[j] += b * basis[j];
      next[j + 1] += a * basis[j];
    }
    basis = std::move(next);
  }

  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = a * x[i] + b;
    double fit = 0.0;
    for (std::size_t k = p; k-- > 0;) fit = fit * t + prof.scaled_coefficients[k];
    sq += (values[i] - fit) * (values[i] - fit);
  }
  prof.residual_rms = std::sqrt(sq / static_cast<double>(x.size()));
  return prof;
}

// ---------------------------------------------------------------------------

std::string_view to_string(KernelClass kc) {
  switch (kc) {
    case KernelClass::Horizontal:
      return "horizontal";
    case KernelClass::Vertical:
      return "vertical";
    case KernelClass::HplusV:
      return "h+v";
    case KernelClass::Other:
      return "other";
  }
  return "?";
}

KernelVariances kernel_variances(std::span<const double> k, std::size_t rows, std::size_t cols) {
  if (k.size() != rows * cols) throw ShapeError("kernel_variances: size mismatch");
  auto variance = [](auto get, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += get(i);
    m /= static_cast<double>(n);
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) v += (get(i) - m) * (get(i) - m);
    return v / static_cast<double>(n);
  };
  KernelVariances kv;
  for (std::size_t r = 0; r < rows; ++r) {
    kv.within_row += variance([&](std::size_t j) { return k[r * cols + j]; }, cols);
  }
  kv.within_row /= static_cast<double>(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    kv.within_col += variance([&](std::size_t i) { return k[i * cols + c]; }, rows);
  }
  kv.within_col /= static_cast<double>(cols);
  kv.total = variance([&](std::size_t i) { return k[i]; }, k.size());
  return kv;
}

KernelClass classify_kernel(std::span<const double> kernel, std::size_t rows, std::size_t cols, double tau) {
  if (rows < 2 || cols < 2) throw ParameterError("classify_kernel needs at least a 2x2 kernel");
  if (!(tau > 0.0)) throw ParameterError("classify_kernel: tau must be positive");
  const KernelVariances kv = kernel_variances(kernel, rows, cols);
  if (kv.total < 1e-12) return KernelClass::HplusV;
  const bool rows_flat = kv.within_row / kv.total < tau;
  const bool cols_flat = kv.within_col / kv.total < tau;
  if (rows_flat && cols_flat) return KernelClass::HplusV;
  if (rows_flat) return KernelClass::Horizontal;
  if (cols_flat) return KernelClass::Vertical;
  return KernelClass::Other;
}

template <class T>
KernelCensus classify_weight(const Tensor<T>& weight, double tau, std::vector<KernelClass>* per_kernel) {
  const Shape s = weight.shape();
  KernelCensus census;
  std::vector<double> k(s.h * s.w);
  for (std::size_t o = 0; o < s.n; ++o) {
    for (std::size_t i = 0; i < s.c; ++i) {
      auto src = weight.plane(o, i);
      std::copy(src.begin(), src.end(), k.begin());
      const KernelClass kc = classify_kernel(k, s.h, s.w, tau);
      if (per_kernel) per_kernel->push_back(kc);
      switch (kc) {
        case KernelClass::Horizontal:
          ++census.horizontal;
          break;
        case KernelClass::Vertical:
          ++census.vertical;
          break;
        case KernelClass::HplusV:
          ++census.both;
          break;
        case KernelClass::Other:
          ++census.other;
          break;
      }
    }
  }
  return census;
}

#define CYLIN_INSTANTIATE(T)                                                                  \
  template struct LayerStack<T>;                                                              \
  template struct GeneratorProbe<T>;                                                          \
  template std::vector<double> influence_column_means(const InfluenceMap<T>&);                \
  template double wraparound_continuity(const InfluenceMap<T>&);                              \
  template double seam_jump(const InfluenceMap<T>&);                                          \
  template TensorD line_deviation_field(const Tensor<T>&, Axis, LineReference);               \
  template std::vector<double> line_pattern_stat(const Tensor<T>&, Axis, LineReference);      \
  template TensorD grid_pattern(const Tensor<T>&, LineReference);                             \
  template KernelCensus classify_weight(const Tensor<T>&, double, std::vector<KernelClass>*);

CYLIN_INSTANTIATE(float)
CYLIN_INSTANTIATE(double)

#undef CYLIN_INSTANTIATE

}  // namespace cylin
