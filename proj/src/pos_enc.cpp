#include "cylin/pos_enc.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace cylin {

std::string_view to_string(SpeMode mode) { return mode == SpeMode::Index ? "index" : "cyclic"; }

SpeMode parse_spe_mode(std::string_view text) {
  if (text == "index") return SpeMode::Index;
  if (text == "cyclic") return SpeMode::Cyclic;
  throw ConfigError("unknown SPE mode '" + std::string(text) + "' (index|cyclic)");
}

std::string_view to_string(PeGroup group) {
  switch (group) {
    case PeGroup::RA:
      return "RA";
    case PeGroup::RP:
      return "RP";
    case PeGroup::AA:
      return "AA";
    case PeGroup::AP:
      return "AP";
    case PeGroup::ALL:
      return "ALL";
  }
  return "?";
}

PeGroup parse_pe_group(std::string_view text) {
  for (PeGroup g : {PeGroup::RA, PeGroup::RP, PeGroup::AA, PeGroup::AP, PeGroup::ALL}) {
    if (text == to_string(g)) return g;
  }
  throw ConfigError("unknown PE group '" + std::string(text) + "' (RA|RP|AA|AP|ALL)");
}

double spe_frequency(std::size_t k, std::size_t pairs) {
  const double d = 2.0 * static_cast<double>(pairs);
  return std::pow(10000.0, -2.0 * static_cast<double>(k) / d);
}

double spe_azimuth_frequency(std::size_t k, std::size_t pairs, std::size_t width, SpeMode mode) {
  const double omega = spe_frequency(k, pairs);
  if (mode == SpeMode::Index) return omega;
  const double two_pi = 2.0 * std::numbers::pi;
  const double periods = std::max(1.0, std::round(omega * static_cast<double>(width) / two_pi));
  return two_pi * periods / static_cast<double>(width);
}

SpeVolume build_spe(std::size_t height, std::size_t width, std::size_t az_pairs, std::size_t pol_pairs,
                    SpeMode mode) {
  if (height == 0 || width == 0 || az_pairs == 0 || pol_pairs == 0) {
    throw ParameterError("build_spe: dimensions and pair counts must be >= 1");
  }
  SpeVolume spe{TensorD({1, 2 * (az_pairs + pol_pairs), height, width}), az_pairs, pol_pairs, mode};
  for (std::size_t k = 0; k < az_pairs; ++k) {
    const double omega = spe_azimuth_frequency(k, az_pairs, width, mode);
    for (std::size_t w = 0; w < width; ++w) {
      const double a = omega * static_cast<double>(w);
      const double s = std::sin(a), c = std::cos(a);
      for (std::size_t h = 0; h < height; ++h) {
        spe.data(0, 2 * k, h, w) = s;
        spe.data(0, 2 * k + 1, h, w) = c;
      }
    }
  }
  const std::size_t base = 2 * az_pairs;
  for (std::size_t k = 0; k < pol_pairs; ++k) {
    const double omega = spe_frequency(k, pol_pairs);
    for (std::size_t h = 0; h < height; ++h) {
      const double a = omega * static_cast<double>(h);
      const double s = std::sin(a), c = std::cos(a);
      for (std::size_t w = 0; w < width; ++w) {
        spe.data(0, base + 2 * k, h, w) = s;
        spe.data(0, base + 2 * k + 1, h, w) = c;
      }
    }
  }
  return spe;
}

std::vector<std::size_t> group_channels(std::size_t az_pairs, std::size_t pol_pairs, PeGroup group) {
  std::vector<std::size_t> out;
  auto take = [&out](std::size_t base, std::size_t first_pair, std::size_t last_pair) {
    for (std::size_t k = first_pair; k < last_pair; ++k) {
      out.push_back(base + 2 * k);
      out.push_back(base + 2 * k + 1);
    }
  };
  const std::size_t az_split = az_pairs / 2;
  const std::size_t pol_split = pol_pairs / 2;
  const std::size_t pol_base = 2 * az_pairs;
  switch (group) {
    case PeGroup::RA:
      take(0, 0, az_split);
      break;
    case PeGroup::AA:
      take(0, az_split, az_pairs);
      break;
    case PeGroup::RP:
      take(pol_base, 0, pol_split);
      break;
    case PeGroup::AP:
      take(pol_base, pol_split, pol_pairs);
      break;
    case PeGroup::ALL:
      take(0, 0, az_pairs);
      take(pol_base, 0, pol_pairs);
      break;
  }
  return out;
}

template <class T>
Tensor<T> select_group(const SpeVolume& spe, PeGroup group) {
  const auto channels = group_channels(spe.az_pairs, spe.pol_pairs, group);
  return gather_channels(spe.data, channels).template cast<T>();
}

template <class T>
LearnablePeLayer<T> LearnablePeLayer<T>::zeros(std::size_t feature_channels, std::size_t spe_channels,
                                               PeGroup group) {
  return {Tensor<T>({feature_channels, spe_channels, 1, 1}), group};
}

template <class T>
LearnablePeLayer<T> LearnablePeLayer<T>::random(std::size_t feature_channels, std::size_t spe_channels,
                                                PeGroup group, Rng& rng, double stddev) {
  return {rng_normal<T>(rng, {feature_channels, spe_channels, 1, 1}, 0.0, stddev), group};
}

namespace {

template <class T>
void check_pe(const Tensor<T>& input_like, const Tensor<T>& spe_sel, const LearnablePeLayer<T>& layer) {
  const Shape s = input_like.shape();
  const Shape p = spe_sel.shape();
  if (p.n != 1 || p.h != s.h || p.w != s.w) {
    throw ShapeError("positional volume " + p.str() + " does not match feature resolution " + s.str());
  }
  if (layer.weight.shape() != Shape{s.c, p.c, 1, 1}) {
    throw ShapeError("K_pe " + layer.weight.shape().str() + " does not map " + std::to_string(p.c) +
                     " SPE channels to " + std::to_string(s.c) + " feature channels");
  }
}

// K_pe * spe_sel as a [1, C, H, W] map.
template <class T>
Tensor<T> positional_map(const Tensor<T>& spe_sel, const Tensor<T>& weight) {
  const Shape p = spe_sel.shape();
  const std::size_t channels = weight.shape().n;
  Tensor<T> map({1, channels, p.h, p.w});
  for (std::size_t c = 0; c < channels; ++c) {
    auto dst = map.plane(0, c);
    for (std::size_t j = 0; j < p.c; ++j) {
      const T k = weight[c * p.c + j];
      if (k == T(0)) continue;
      auto src = spe_sel.plane(0, j);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += k * src[i];
    }
  }
  return map;
}

}  // namespace

template <class T>
Tensor<T> learnable_pe_apply(const Tensor<T>& input, const Tensor<T>& spe_sel, const LearnablePeLayer<T>& layer) {
  check_pe(input, spe_sel, layer);
  const Tensor<T> map = positional_map(spe_sel, layer.weight);
  Tensor<T> out = input;
  const Shape s = input.shape();
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      auto dst = out.plane(b, c);
      auto src = map.plane(0, c);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
  require_finite(out, "learnable_pe_apply output");
  return out;
}

template <class T>
LearnablePeGradients<T> learnable_pe_backward(const Tensor<T>& spe_sel, const LearnablePeLayer<T>& layer,
                                              const Tensor<T>& grad_out) {
  check_pe(grad_out, spe_sel, layer);
  const Shape s = grad_out.shape();
  const std::size_t sel = spe_sel.shape().c;
  LearnablePeGradients<T> g{grad_out, Tensor<T>(layer.weight.shape())};
  for (std::size_t c = 0; c < s.c; ++c) {
    for (std::size_t j = 0; j < sel; ++j) {
      auto pe = spe_sel.plane(0, j);
      double acc = 0.0;
      for (std::size_t b = 0; b < s.n; ++b) {
        auto go = grad_out.plane(b, c);
        for (std::size_t i = 0; i < go.size(); ++i) acc += static_cast<double>(go[i]) * pe[i];
      }
      g.weight[c * sel + j] = static_cast<T>(acc);
    }
  }
  return g;
}

#define CYLIN_INSTANTIATE(T)                                                                         \
  template Tensor<T> select_group(const SpeVolume&, PeGroup);                                        \
  template struct LearnablePeLayer<T>;                                                               \
  template Tensor<T> learnable_pe_apply(const Tensor<T>&, const Tensor<T>&, const LearnablePeLayer<T>&); \
  template LearnablePeGradients<T> learnable_pe_backward(const Tensor<T>&, const LearnablePeLayer<T>&,  \
                                                         const Tensor<T>&);

CYLIN_INSTANTIATE(float)
CYLIN_INSTANTIATE(double)

#undef CYLIN_INSTANTIATE

}  // namespace cylin
