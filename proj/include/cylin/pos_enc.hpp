#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "cylin/conv.hpp"
#include "cylin/tensor.hpp"

namespace cylin {

/// How pixel positions become phase angles.
enum class SpeMode {
  Index,   ///< theta, phi are raw pixel indices
  Cyclic,  ///< azimuthal frequencies snapped to whole periods over W
};

std::string_view to_string(SpeMode mode);
SpeMode parse_spe_mode(std::string_view text);

/// Channel groups of the positional-encoding ablation: relative (high
/// frequency) or absolute (low frequency), azimuthal or polar.
enum class PeGroup { RA, RP, AA, AP, ALL };

std::string_view to_string(PeGroup group);
PeGroup parse_pe_group(std::string_view text);

/// 2D sinusoidal positional encoding, [1, 2*az_pairs + 2*pol_pairs, H, W].
///
/// Channel 2k / 2k+1 hold sin / cos of omega_k * theta for k < az_pairs,
/// followed by the same layout for the polar angle phi. Per axis with
/// `pairs` frequency pairs, omega_k = 10000^(-2k / (2*pairs)).
struct SpeVolume {
  TensorD data;
  std::size_t az_pairs = 0;
  std::size_t pol_pairs = 0;
  SpeMode mode = SpeMode::Index;

  std::size_t channels() const { return 2 * (az_pairs + pol_pairs); }
};

/// omega_k for an axis carrying `pairs` frequency pairs.
double spe_frequency(std::size_t k, std::size_t pairs);

/// The azimuthal angular frequency actually used for pair k at width W.
double spe_azimuth_frequency(std::size_t k, std::size_t pairs, std::size_t width, SpeMode mode);

SpeVolume build_spe(std::size_t height, std::size_t width, std::size_t az_pairs, std::size_t pol_pairs,
                    SpeMode mode = SpeMode::Index);

/// Channel indices of a group, in volume order. Relative pairs are the first
/// floor(pairs/2) frequencies of an axis, absolute pairs the rest.
std::vector<std::size_t> group_channels(std::size_t az_pairs, std::size_t pol_pairs, PeGroup group);

template <class T>
Tensor<T> select_group(const SpeVolume& spe, PeGroup group);

/// 1x1 mixing of selected SPE channels into a feature map's channels.
/// `weight` is [C, C_sel, 1, 1]; there is no bias.
template <class T>
struct LearnablePeLayer {
  Tensor<T> weight;
  PeGroup group = PeGroup::AP;

  static LearnablePeLayer zeros(std::size_t feature_channels, std::size_t spe_channels, PeGroup group);
  static LearnablePeLayer random(std::size_t feature_channels, std::size_t spe_channels, PeGroup group,
                                 Rng& rng, double stddev = 0.1);
};

/// F_in + (K_pe * spe_sel), the positional map broadcast over the batch.
template <class T>
Tensor<T> learnable_pe_apply(const Tensor<T>& input, const Tensor<T>& spe_sel,
                             const LearnablePeLayer<T>& layer);

template <class T>
struct LearnablePeGradients {
  Tensor<T> input;
  Tensor<T> weight;
};

template <class T>
LearnablePeGradients<T> learnable_pe_backward(const Tensor<T>& spe_sel, const LearnablePeLayer<T>& layer,
                                              const Tensor<T>& grad_out);

}  // namespace cylin
