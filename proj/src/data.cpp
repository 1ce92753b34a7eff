#include "cylin/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

namespace cylin {

namespace {

std::size_t parse_count(std::string_view text) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("not a non-negative integer: '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

MaskSpec MaskSpec::parse(std::string_view text) {
  MaskSpec spec;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    spec.numerator = parse_count(text.substr(0, slash));
    spec.denominator = parse_count(text.substr(slash + 1));
  } else {
    double f = 0.0;
    try {
      f = std::stod(std::string(text));
    } catch (const std::exception&) {
      throw ConfigError("mask fraction must be p/q or a decimal, got '" + std::string(text) + "'");
    }
    spec.denominator = 1000000;
    spec.numerator = static_cast<std::size_t>(std::llround(f * 1e6));
  }
  spec.validate();
  return spec;
}

std::string MaskSpec::str() const { return std::to_string(numerator) + "/" + std::to_string(denominator); }

void MaskSpec::validate() const {
  if (denominator == 0 || numerator == 0 || numerator > denominator) {
    throw ParameterError("mask fraction must lie in (0, 1], got " + str());
  }
}

std::size_t known_columns(const MaskSpec& spec, std::size_t width) {
  spec.validate();
  return (2 * spec.numerator * width + spec.denominator) / (2 * spec.denominator);
}

std::size_t known_start(const MaskSpec& spec, std::size_t width) {
  const std::size_t k = known_columns(spec, width);
  return (width / 2 + width - k / 2) % width;
}

TensorF make_mask(const MaskSpec& spec, std::size_t height, std::size_t width) {
  const std::size_t k = known_columns(spec, width);
  const std::size_t start = known_start(spec, width);
  TensorF mask({1, 1, height, width});
  for (std::size_t h = 0; h < height; ++h) {
    for (std::size_t i = 0; i < k; ++i) mask(0, 0, h, (start + i) % width) = 1.0f;
  }
  return mask;
}

std::string_view to_string(SynthFamily f) {
  switch (f) {
    case SynthFamily::Stripes:
      return "stripes";
    case SynthFamily::Fourier:
      return "fourier";
    case SynthFamily::Horizon:
      return "horizon";
  }
  return "?";
}

SynthFamily parse_synth_family(std::string_view text) {
  for (SynthFamily f : {SynthFamily::Stripes, SynthFamily::Fourier, SynthFamily::Horizon}) {
    if (text == to_string(f)) return f;
  }
  throw ConfigError("unknown synthetic family '" + std::string(text) + "' (stripes|fourier|horizon)");
}

SynthField::SynthField(const SyntheticPanoramaSpec& spec) : spec_(spec) {
  if (spec.height == 0 || spec.width == 0) throw ParameterError("synthetic panorama needs H, W >= 1");
  Rng rng(spec.seed ^ 0x5eed5eed5eedULL);
  const double two_pi = 2.0 * std::numbers::pi;
  switch (spec.family) {
    case SynthFamily::Stripes: {
      const double f = spec.frequency > 0 ? static_cast<double>(spec.frequency) : 1.0 + static_cast<double>(rng.below(3));
      const double slant = static_cast<double>(rng.below(3)) - 1.0;
      for (auto& waves : waves_) {
        waves.push_back({0.5 + 0.4 * rng.uniform(), f, 2.0 * slant, two_pi * rng.uniform()});
      }
      break;
    }
    case SynthFamily::Fourier: {
      for (auto& waves : waves_) {
        double total = 0.0;
        for (int kx = 0; kx <= 3; ++kx) {
          for (int ky = 0; ky <= 2; ++ky) {
            if (kx == 0 && ky == 0) continue;
            const double a = rng.normal() / (1.0 + kx * kx + ky * ky);
            waves.push_back({a, static_cast<double>(kx), static_cast<double>(ky), two_pi * rng.uniform()});
            total += std::abs(a);
          }
        }
        for (auto& w : waves) w.amplitude *= 0.9 / total;
      }
      break;
    }
    case SynthFamily::Horizon: {
      for (int c = 0; c < 3; ++c) {
        top_[c] = -0.2 + 0.8 * rng.uniform();
        bottom_[c] = -0.8 + 0.6 * rng.uniform();
      }
      const std::size_t count = 2 + rng.below(3);
      for (std::size_t i = 0; i < count; ++i) {
        Blob b{};
        for (double& a : b.amplitude) a = 0.8 * (rng.uniform() - 0.5);
        b.h = rng.uniform() * static_cast<double>(spec.height);
        b.w = rng.uniform() * static_cast<double>(spec.width);
        b.sigma = (0.05 + 0.1 * rng.uniform()) * static_cast<double>(spec.width);
        blobs_.push_back(b);
      }
      break;
    }
  }
}

double SynthField::operator()(std::size_t channel, double h, double w) const {
  const double two_pi = 2.0 * std::numbers::pi;
  const double width = static_cast<double>(spec_.width);
  const double height = static_cast<double>(spec_.height);
  switch (spec_.family) {
    case SynthFamily::Stripes: {
      const Wave& s = waves_[channel].front();
      return s.amplitude * std::sin(two_pi * (s.kx * w / width + s.ky * h / (2.0 * height)) + s.phase);
    }
    case SynthFamily::Fourier: {
      double v = 0.0;
      for (const Wave& s : waves_[channel]) {
        v += s.amplitude * std::cos(two_pi * s.kx * w / width + std::numbers::pi * s.ky * h / height + s.phase);
      }
      return v;
    }
    case SynthFamily::Horizon: {
      const double t = height > 1 ? h / (height - 1) : 0.0;
      double v = top_[channel] + (bottom_[channel] - top_[channel]) * t;
      for (const Blob& b : blobs_) {
        double dw = std::fmod(std::abs(w - b.w), width);
        dw = std::min(dw, width - dw);
        const double dh = h - b.h;
        v += b.amplitude[channel] * std::exp(-(dw * dw + dh * dh) / (2.0 * b.sigma * b.sigma));
      }
      return std::clamp(v, -1.0, 1.0);
    }
  }
  return 0.0;
}

TensorF PanoSample::masked() const { return mask_image(image, mask); }

TensorF mask_image(const TensorF& image, const TensorF& mask) {
  const Shape s = image.shape();
  if (mask.shape() != Shape{s.n, 1, s.h, s.w}) throw ShapeError("mask does not match image " + s.str());
  TensorF out(s);
  for (std::size_t b = 0; b < s.n; ++b) {
    auto m = mask.plane(b, 0);
    for (std::size_t c = 0; c < s.c; ++c) {
      auto src = image.plane(b, c);
      auto dst = out.plane(b, c);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] * m[i];
    }
  }
  return out;
}

PanoSample synth_panorama(const SyntheticPanoramaSpec& spec) {
  const SynthField field(spec);
  PanoSample sample;
  sample.image = TensorF({1, 3, spec.height, spec.width});
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t h = 0; h < spec.height; ++h) {
      for (std::size_t w = 0; w < spec.width; ++w) {
        sample.image(0, c, h, w) = static_cast<float>(field(c, static_cast<double>(h), static_cast<double>(w)));
      }
    }
  }
  sample.mask = make_mask(spec.mask, spec.height, spec.width);
  sample.provenance = std::string(to_string(spec.family)) + ":seed=" + std::to_string(spec.seed);
  return sample;
}

Dataset make_synthetic_dataset(const SyntheticPanoramaSpec& base, std::size_t count, std::size_t val_count) {
  Dataset ds;
  SyntheticPanoramaSpec spec = base;
  for (std::size_t i = 0; i < count + val_count; ++i) {
    spec.seed = base.seed + i;
    (i < count ? ds.train : ds.validation).push_back(synth_panorama(spec));
  }
  return ds;
}

}  // namespace cylin
