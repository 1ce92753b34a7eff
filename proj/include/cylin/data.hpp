#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cylin/tensor.hpp"

namespace cylin {

/// Known-region layout: a band of round(fraction * W) columns centred in
/// azimuth, so the unknown region straddles the wrap seam.
struct MaskSpec {
  std::size_t numerator = 1;
  std::size_t denominator = 2;

  double fraction() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
  /// Accepts "p/q" or a decimal in (0, 1].
  static MaskSpec parse(std::string_view text);
  std::string str() const;
  void validate() const;
};

/// round-half-up(fraction * W).
std::size_t known_columns(const MaskSpec& spec, std::size_t width);

/// First known column; the band is [start, start + known) modulo W.
std::size_t known_start(const MaskSpec& spec, std::size_t width);

/// Binary [1, 1, H, W] mask, 1 = known.
TensorF make_mask(const MaskSpec& spec, std::size_t height, std::size_t width);

enum class SynthFamily {
  Stripes,  ///< wrapped sinusoidal stripes with an integer azimuthal frequency
  Fourier,  ///< random low-frequency cyclic Fourier texture
  Horizon,  ///< polar colour gradient with wrapped Gaussian blobs
};

std::string_view to_string(SynthFamily f);
SynthFamily parse_synth_family(std::string_view text);

struct SyntheticPanoramaSpec {
  SynthFamily family = SynthFamily::Stripes;
  std::uint64_t seed = 0;
  std::size_t height = 64;
  std::size_t width = 128;
  std::size_t frequency = 0;  // stripes only; 0 draws 1..3 from the seed
  MaskSpec mask;
};

/// The continuous field an image is sampled from. Periodic in `w` with
/// period W, so field(h, W) == field(h, 0).
class SynthField {
 public:
  explicit SynthField(const SyntheticPanoramaSpec& spec);
  double operator()(std::size_t channel, double h, double w) const;

 private:
  struct Wave {
    double amplitude;
    double kx;     // whole periods over W
    double ky;     // polar wavenumber in half periods over H
    double phase;
  };
  struct Blob {
    double amplitude[3];
    double h, w, sigma;
  };
  SyntheticPanoramaSpec spec_;
  std::vector<Wave> waves_[3];
  std::vector<Blob> blobs_;
  double top_[3] = {};
  double bottom_[3] = {};
};

struct PanoSample {
  TensorF image;  // [1, 3, H, W] in [-1, 1]
  TensorF mask;   // [1, 1, H, W]
  std::string provenance;

  /// image with unknown pixels zeroed.
  TensorF masked() const;
};

PanoSample synth_panorama(const SyntheticPanoramaSpec& spec);

TensorF mask_image(const TensorF& image, const TensorF& mask);

struct Dataset {
  std::vector<PanoSample> train;
  std::vector<PanoSample> validation;
};

/// `count` training and `val_count` validation samples with consecutive seeds
/// starting at `seed` (validation seeds follow the training ones).
Dataset make_synthetic_dataset(const SyntheticPanoramaSpec& base, std::size_t count, std::size_t val_count);

}  // namespace cylin
