#include "cylin/tensor.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>

namespace cylin {

std::string Shape::str() const {
  return "[" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + "]";
}

template <class T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(shape), data_(shape.size(), fill) {}

template <class T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) : shape_(shape), data_(values.begin(), values.end()) {
  if (data_.size() != shape_.size()) {
    throw ShapeError("tensor " + shape_.str() + " needs " + std::to_string(shape_.size()) +
                     " values, got " + std::to_string(data_.size()));
  }
}

template <class T>
void Tensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <class T>
bool all_finite(const Tensor<T>& t) {
  for (T v : t.data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <class T>
void require_finite(const Tensor<T>& t, std::string_view what) {
  if (!all_finite(t)) throw NumericError("non-finite value in " + std::string(what));
}

namespace {

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, std::string_view op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape " + a.shape().str() + " vs " + b.shape().str());
  }
}

}  // namespace

template <class T>
Tensor<T> circular_shift_azimuth(const Tensor<T>& t, long k) {
  const Shape s = t.shape();
  Tensor<T> out(s);
  if (s.w == 0) return out;
  const long width = static_cast<long>(s.w);
  const std::size_t shift = static_cast<std::size_t>(((k % width) + width) % width);
  const std::size_t rows = s.n * s.c * s.h;
  auto src = t.data();
  auto dst = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * s.w;
    for (std::size_t w = 0; w < s.w; ++w) dst[base + (w + shift) % s.w] = src[base + w];
  }
  return out;
}

template <class T>
bool assert_close(const Tensor<T>& a, const Tensor<T>& b, double atol, double rtol) {
  require_same_shape(a, b, "assert_close");
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    const double y = b[i];
    if (!(std::abs(x - y) <= atol + rtol * std::abs(y))) return false;
  }
  return true;
}

template <class T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return m;
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

template <class T>
void add_inplace(Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add_inplace");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

template <class T>
double sum(const Tensor<T>& t) {
  double s = 0.0;
  for (T v : t.data()) s += v;
  return s;
}

template <class T>
double mean(const Tensor<T>& t) {
  if (t.empty()) throw ShapeError("mean of empty tensor");
  return sum(t) / static_cast<double>(t.size());
}

template <class T>
double max_abs(const Tensor<T>& t) {
  double m = 0.0;
  for (T v : t.data()) m = std::max(m, std::abs(static_cast<double>(v)));
  return m;
}

template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape sa = a.shape();
  const Shape sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
    throw ShapeError("concat_channels: " + sa.str() + " vs " + sb.str());
  }
  Tensor<T> out({sa.n, sa.c + sb.c, sa.h, sa.w});
  const std::size_t pa = sa.c * sa.plane();
  const std::size_t pb = sb.c * sb.plane();
  for (std::size_t n = 0; n < sa.n; ++n) {
    std::copy_n(a.data().begin() + n * pa, pa, out.data().begin() + n * (pa + pb));
    std::copy_n(b.data().begin() + n * pb, pb, out.data().begin() + n * (pa + pb) + pa);
  }
  return out;
}

template <class T>
Tensor<T> slice_channels(const Tensor<T>& t, std::size_t begin, std::size_t count) {
  const Shape s = t.shape();
  if (begin + count > s.c) throw ShapeError("slice_channels out of range for " + s.str());
  Tensor<T> out({s.n, count, s.h, s.w});
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < count; ++c) {
      auto src = t.plane(n, begin + c);
      std::copy(src.begin(), src.end(), out.plane(n, c).begin());
    }
  }
  return out;
}

template <class T>
Tensor<T> gather_channels(const Tensor<T>& t, std::span<const std::size_t> channels) {
  const Shape s = t.shape();
  Tensor<T> out({s.n, channels.size(), s.h, s.w});
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < channels.size(); ++c) {
      if (channels[c] >= s.c) throw ShapeError("gather_channels index out of range");
      auto src = t.plane(n, channels[c]);
      std::copy(src.begin(), src.end(), out.plane(n, c).begin());
    }
  }
  return out;
}

template <class T>
Tensor<T> batch_item(const Tensor<T>& t, std::size_t n) {
  const Shape s = t.shape();
  if (n >= s.n) throw ShapeError("batch_item out of range");
  const std::size_t per = s.c * s.plane();
  Tensor<T> out({1, s.c, s.h, s.w});
  std::copy_n(t.data().begin() + n * per, per, out.data().begin());
  return out;
}

template <class T>
Tensor<T> stack_batch(std::span<const Tensor<T>> items) {
  if (items.empty()) return {};
  Shape s = items.front().shape();
  if (s.n != 1) throw ShapeError("stack_batch expects batch-1 items");
  Tensor<T> out({items.size(), s.c, s.h, s.w});
  const std::size_t per = s.c * s.plane();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].shape() != s) throw ShapeError("stack_batch: mismatched item shapes");
    std::copy_n(items[i].data().begin(), per, out.data().begin() + i * per);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw ParameterError("Rng::below(0)");
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

template <class T>
Tensor<T> rng_normal(Rng& rng, Shape shape, double mean_value, double stddev) {
  if (!(stddev >= 0.0)) throw ParameterError("rng_normal: negative standard deviation");
  Tensor<T> out(shape);
  for (auto& v : out.data()) v = static_cast<T>(mean_value + stddev * rng.normal());
  return out;
}

template <class T>
Tensor<T> rng_uniform(Rng& rng, Shape shape, double lo, double hi) {
  Tensor<T> out(shape);
  for (auto& v : out.data()) v = static_cast<T>(lo + (hi - lo) * rng.uniform());
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kCyltHeader = 4 + 1 + 4 * 4;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <class U>
void put_le(std::vector<std::uint8_t>& out, U bits) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

template <class U>
U get_le(std::span<const std::uint8_t> bytes, std::size_t at) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[at + i]) << (8 * i);
  return v;
}

void check_cylt_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kCyltHeader || bytes[0] != 'C' || bytes[1] != 'Y' || bytes[2] != 'L' ||
      bytes[3] != 'T') {
    throw ConfigError("not a CYLT tensor");
  }
  if (bytes[4] > 1) throw ConfigError("CYLT: unknown dtype " + std::to_string(bytes[4]));
}

}  // namespace

template <class T>
std::vector<std::uint8_t> encode_cylt(const Tensor<T>& t) {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  std::vector<std::uint8_t> out{'C', 'Y', 'L', 'T'};
  out.push_back(static_cast<std::uint8_t>(std::is_same_v<T, float> ? CyltDtype::F32 : CyltDtype::F64));
  const Shape s = t.shape();
  for (std::size_t d : {s.n, s.c, s.h, s.w}) {
    if (d > UINT32_MAX) throw ShapeError("CYLT dimension exceeds u32");
    put_u32(out, static_cast<std::uint32_t>(d));
  }
  out.reserve(out.size() + t.size() * sizeof(T));
  for (T v : t.data()) {
    if constexpr (std::is_same_v<T, float>) {
      put_le(out, std::bit_cast<std::uint32_t>(v));
    } else {
      put_le(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  return out;
}

CyltDtype cylt_dtype(std::span<const std::uint8_t> bytes) {
  check_cylt_header(bytes);
  return static_cast<CyltDtype>(bytes[4]);
}

template <class T>
Tensor<T> decode_cylt(std::span<const std::uint8_t> bytes) {
  const CyltDtype dtype = cylt_dtype(bytes);
  Shape s{get_le<std::uint32_t>(bytes, 5), get_le<std::uint32_t>(bytes, 9),
          get_le<std::uint32_t>(bytes, 13), get_le<std::uint32_t>(bytes, 17)};
  const std::size_t width = dtype == CyltDtype::F32 ? 4 : 8;
  if (bytes.size() != kCyltHeader + s.size() * width) {
    throw ConfigError("CYLT: payload size does not match dims " + s.str());
  }
  Tensor<T> out(s);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::size_t at = kCyltHeader + i * width;
    if (dtype == CyltDtype::F32) {
      out[i] = static_cast<T>(std::bit_cast<float>(get_le<std::uint32_t>(bytes, at)));
    } else {
      out[i] = static_cast<T>(std::bit_cast<double>(get_le<std::uint64_t>(bytes, at)));
    }
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("write failed for " + path.string());
}

template <class T>
void write_cylt(const std::filesystem::path& path, const Tensor<T>& t) {
  write_file_bytes(path, encode_cylt(t));
}

template <class T>
Tensor<T> read_cylt(const std::filesystem::path& path) {
  return decode_cylt<T>(read_file_bytes(path));
}

#define CYLIN_INSTANTIATE(T)                                                                  \
  template class Tensor<T>;                                                                   \
  template bool all_finite(const Tensor<T>&);                                                 \
  template void require_finite(const Tensor<T>&, std::string_view);                           \
  template Tensor<T> circular_shift_azimuth(const Tensor<T>&, long);                          \
  template bool assert_close(const Tensor<T>&, const Tensor<T>&, double, double);             \
  template double max_abs_diff(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> scale(const Tensor<T>&, T);                                              \
  template void add_inplace(Tensor<T>&, const Tensor<T>&);                                    \
  template double sum(const Tensor<T>&);                                                      \
  template double mean(const Tensor<T>&);                                                     \
  template double max_abs(const Tensor<T>&);                                                  \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> slice_channels(const Tensor<T>&, std::size_t, std::size_t);              \
  template Tensor<T> gather_channels(const Tensor<T>&, std::span<const std::size_t>);         \
  template Tensor<T> batch_item(const Tensor<T>&, std::size_t);                               \
  template Tensor<T> stack_batch(std::span<const Tensor<T>>);                                 \
  template Tensor<T> rng_normal(Rng&, Shape, double, double);                                 \
  template Tensor<T> rng_uniform(Rng&, Shape, double, double);                                \
  template std::vector<std::uint8_t> encode_cylt(const Tensor<T>&);                           \
  template Tensor<T> decode_cylt(std::span<const std::uint8_t>);                              \
  template void write_cylt(const std::filesystem::path&, const Tensor<T>&);                   \
  template Tensor<T> read_cylt(const std::filesystem::path&);

CYLIN_INSTANTIATE(float)
CYLIN_INSTANTIATE(double)

#undef CYLIN_INSTANTIATE

}  // namespace cylin
