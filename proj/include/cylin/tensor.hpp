#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <new>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cylin/errors.hpp"

namespace cylin {

/// 64-byte aligned storage. Vectorised kernels peel loops by address, so a
/// fixed alignment keeps results independent of where the heap puts a buffer.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t alignment{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, alignment); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

template <class T>
using AlignedBuffer = std::vector<T, AlignedAllocator<T>>;

/// Extents of a rank-4 tensor laid out as [batch, channel, polar, azimuth].
/// The last axis (w) is the one that wraps around on a panorama.
struct Shape {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t size() const { return n * c * h * w; }
  std::size_t plane() const { return h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense row-major rank-4 tensor. Float for training, double for gradient
/// checks.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> values);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  T& operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[index(n, c, h, w)];
  }
  const T& operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[index(n, c, h, w)];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T> values() const { return {data_.begin(), data_.end()}; }

  /// The (n, c) image plane.
  std::span<T> plane(std::size_t n, std::size_t c) {
    return std::span<T>(data_).subspan(index(n, c, 0, 0), shape_.plane());
  }
  std::span<const T> plane(std::size_t n, std::size_t c) const {
    return std::span<const T>(data_).subspan(index(n, c, 0, 0), shape_.plane());
  }

  void fill(T value);

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_{};
  AlignedBuffer<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

/// Throws NumericError naming `what` if any element is NaN or infinite.
template <class T>
void require_finite(const Tensor<T>& t, std::string_view what);

template <class T>
bool all_finite(const Tensor<T>& t);

/// out(n,c,h,w) = t(n,c,h,(w-k) mod W). Any integer k is accepted.
template <class T>
Tensor<T> circular_shift_azimuth(const Tensor<T>& t, long k);

/// true iff |a_i - b_i| <= atol + rtol*|b_i| for every element.
template <class T>
bool assert_close(const Tensor<T>& a, const Tensor<T>& b, double atol, double rtol);

template <class T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b);

// Elementwise helpers. Shapes must match exactly; there is no broadcasting.
template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> scale(const Tensor<T>& a, T s);
template <class T>
void add_inplace(Tensor<T>& a, const Tensor<T>& b);

template <class T>
double sum(const Tensor<T>& t);
template <class T>
double mean(const Tensor<T>& t);
template <class T>
double max_abs(const Tensor<T>& t);

/// Concatenates along the channel axis.
template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

/// Channels [begin, begin+count).
template <class T>
Tensor<T> slice_channels(const Tensor<T>& t, std::size_t begin, std::size_t count);

/// Channels in the given order.
template <class T>
Tensor<T> gather_channels(const Tensor<T>& t, std::span<const std::size_t> channels);

/// Batch element n as a [1, C, H, W] tensor.
template <class T>
Tensor<T> batch_item(const Tensor<T>& t, std::size_t n);

/// Stacks [1, C, H, W] tensors along the batch axis.
template <class T>
Tensor<T> stack_batch(std::span<const Tensor<T>> items);

// ---------------------------------------------------------------------------
// Random numbers

/// splitmix64-seeded xoshiro256** generator. The stream depends only on the
/// seed, never on the platform or standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  /// Standard normal via Box-Muller; the second variate of each pair is kept
  /// for the next call.
  double normal();

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Gaussian tensor with the given moments. std < 0 is a ParameterError.
template <class T>
Tensor<T> rng_normal(Rng& rng, Shape shape, double mean, double stddev);

template <class T>
Tensor<T> rng_uniform(Rng& rng, Shape shape, double lo, double hi);

// ---------------------------------------------------------------------------
// CYLT files
//
//   "CYLT" | u8 dtype (0 = f32, 1 = f64) | u32le N C H W | values (LE)

enum class CyltDtype : std::uint8_t { F32 = 0, F64 = 1 };

template <class T>
std::vector<std::uint8_t> encode_cylt(const Tensor<T>& t);

/// Decodes into T; values stored in the other precision are converted.
template <class T>
Tensor<T> decode_cylt(std::span<const std::uint8_t> bytes);

CyltDtype cylt_dtype(std::span<const std::uint8_t> bytes);

template <class T>
void write_cylt(const std::filesystem::path& path, const Tensor<T>& t);

template <class T>
Tensor<T> read_cylt(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace cylin
