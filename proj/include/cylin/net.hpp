#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cylin/conv.hpp"
#include "cylin/pos_enc.hpp"
#include "cylin/tensor.hpp"

namespace cylin {

// ---------------------------------------------------------------------------
// Generator: U-Net of gated convolutions.
//
// Encoder stage k (k = 0..S-1): [x += K_pe * SPE] -> gated conv (stride 2 for
// k > 0) -> instance norm. Decoder stage S-1 refines the bottleneck; decoder
// stage k < S-1 upsamples the previous decoder output 2x, concatenates encoder
// stage k and applies gated conv -> instance norm. A plain conv + tanh maps
// the last decoder output back to image channels.

struct GeneratorConfig {
  std::size_t image_channels = 3;
  std::vector<std::size_t> channels{32, 64, 128, 256, 256};
  std::size_t kernel = 3;
  PadMode pad_mode = PadMode::CircularAzimuth;
  std::optional<PeGroup> pe_group = PeGroup::AP;
  SpeMode spe_mode = SpeMode::Index;
  std::size_t spe_pairs = 4;  // frequency pairs per axis
  bool paste_known = true;
  double norm_epsilon = 1e-5;

  std::size_t stages() const { return channels.size(); }
  std::size_t stride_product() const { return std::size_t{1} << (stages() - 1); }
  /// Channels entering encoder stage k.
  std::size_t encoder_input_channels(std::size_t k) const;
  /// Channels entering decoder stage k.
  std::size_t decoder_input_channels(std::size_t k) const;
  /// Number of SPE channels selected by pe_group (0 when disabled).
  std::size_t pe_channels() const;
  void validate() const;
};

template <class T>
struct EncoderStage {
  std::optional<LearnablePeLayer<T>> pe;
  GatedConvLayer<T> conv;
  InstanceNormLayer<T> norm;
};

template <class T>
struct DecoderStage {
  GatedConvLayer<T> conv;
  InstanceNormLayer<T> norm;
};

/// All trainable tensors of a generator. Gradients use the same type, so a
/// parameter set and its gradient enumerate in lockstep.
template <class T>
struct GeneratorParams {
  std::vector<EncoderStage<T>> encoder;
  std::vector<DecoderStage<T>> decoder;  // decoder[k] runs at encoder[k]'s resolution
  ConvLayer<T> head;

  using Visitor = std::function<void(const std::string&, Tensor<T>&)>;
  using ConstVisitor = std::function<void(const std::string&, const Tensor<T>&)>;
  void for_each(const Visitor& f);
  void for_each(const ConstVisitor& f) const;

  GeneratorParams zeros_like() const;
  std::size_t parameter_count() const;
};

template <class T>
struct GeneratorCache;

template <class T>
class Generator {
 public:
  Generator(const GeneratorConfig& config, Rng& rng);
  Generator(const GeneratorConfig& config, GeneratorParams<T> params);

  const GeneratorConfig& config() const { return config_; }
  GeneratorParams<T>& params() { return params_; }
  const GeneratorParams<T>& params() const { return params_; }

  /// Raw tanh prediction, before any compositing of known pixels.
  Tensor<T> predict(const Tensor<T>& masked_image, const Tensor<T>& mask,
                    GeneratorCache<T>* cache = nullptr) const;

  struct Gradients {
    GeneratorParams<T> params;
    Tensor<T> image;
    Tensor<T> mask;
  };
  /// Gradients of <grad_out, predict(...)> for the cached forward pass.
  Gradients backward(const GeneratorCache<T>& cache, const Tensor<T>& grad_out) const;

  /// SPE channels injected before encoder stage k for an input of H x W.
  Tensor<T> stage_spe(std::size_t k, std::size_t height, std::size_t width) const;

  template <class U>
  Generator<U> cast() const;

 private:
  GeneratorConfig config_;
  GeneratorParams<T> params_;
};

template <class T>
struct GeneratorCache {
  Tensor<T> mask;
  std::vector<Tensor<T>> enc_spe;       // selected SPE per encoder stage
  std::vector<Tensor<T>> enc_in;        // stage input after positional embedding
  std::vector<GatedConvCache<T>> enc_gate;
  std::vector<Tensor<T>> enc_conv;      // gated conv output, pre-norm
  std::vector<Tensor<T>> enc_out;       // post-norm
  std::vector<Tensor<T>> dec_in;
  std::vector<GatedConvCache<T>> dec_gate;
  std::vector<Tensor<T>> dec_conv;
  std::vector<Tensor<T>> dec_out;
  Tensor<T> output;                     // tanh(head)
};

/// mask * input + (1 - mask) * prediction, mask broadcast over channels.
template <class T>
Tensor<T> paste_known(const Tensor<T>& input, const Tensor<T>& mask, const Tensor<T>& prediction);

/// Completed image; composites known pixels when config().paste_known.
template <class T>
Tensor<T> generator_forward(const Generator<T>& gen, const Tensor<T>& masked_image, const Tensor<T>& mask);

// ---------------------------------------------------------------------------
// Spectral normalisation

struct SpectralNormState {
  std::vector<double> u;  // left singular vector estimate, length C_out
};

struct SpectralNormResult {
  double sigma = 1.0;
  std::vector<double> u;
  std::vector<double> v;
};

/// Power iteration on W viewed as [rows, cols] (row-major). Updates `state`
/// and returns sigma = u^T W v with the final u, v. A zero matrix gives
/// sigma = 1.
SpectralNormResult spectral_estimate(std::span<const double> matrix, std::size_t rows, std::size_t cols,
                                     SpectralNormState& state, std::size_t iterations);

/// W / sigma_hat for a weight tensor reshaped to [C_out, rest].
template <class T>
Tensor<T> spectral_normalize(const Tensor<T>& weight, SpectralNormState& state, std::size_t iterations,
                             SpectralNormResult* result = nullptr);

SpectralNormState make_spectral_state(std::size_t rows, Rng& rng);

// ---------------------------------------------------------------------------
// Discriminator: stride-2 convs with leaky ReLU, then a 1-channel patch head.

struct DiscriminatorConfig {
  std::size_t image_channels = 3;
  std::vector<std::size_t> channels{32, 64, 128};
  std::size_t kernel = 3;
  PadMode pad_mode = PadMode::CircularAzimuth;
  double slope = 0.2;
  std::size_t train_iterations = 1;
  std::size_t eval_iterations = 50;

  std::size_t stride_product() const { return std::size_t{1} << channels.size(); }
};

template <class T>
struct DiscriminatorCache {
  std::vector<Tensor<T>> inputs;        // per layer
  std::vector<Tensor<T>> pre;           // per layer, pre-activation
  std::vector<Tensor<T>> normalized;    // spectrally normalised weights
  std::vector<SpectralNormResult> sn;
};

template <class T>
class Discriminator {
 public:
  Discriminator(const DiscriminatorConfig& config, Rng& rng);

  const DiscriminatorConfig& config() const { return config_; }
  std::vector<ConvLayer<T>>& layers() { return layers_; }
  const std::vector<ConvLayer<T>>& layers() const { return layers_; }
  std::vector<SpectralNormState>& states() { return states_; }
  const std::vector<SpectralNormState>& states() const { return states_; }

  /// Normalises every weight (advancing the power iteration) and scores the
  /// image patch-wise.
  Tensor<T> forward(const Tensor<T>& image, std::size_t iterations, DiscriminatorCache<T>* cache = nullptr);

  struct Gradients {
    std::vector<ConvLayer<T>> layers;
    Tensor<T> input;
  };
  /// Gradients with the power-iteration vectors held fixed.
  Gradients backward(const DiscriminatorCache<T>& cache, const Tensor<T>& grad_scores) const;

  using Visitor = std::function<void(const std::string&, Tensor<T>&)>;
  void for_each(const Visitor& f);
  static void for_each_layer(std::vector<ConvLayer<T>>& layers, const Visitor& f);

 private:
  DiscriminatorConfig config_;
  std::vector<ConvLayer<T>> layers_;
  std::vector<SpectralNormState> states_;
};

template <class T>
Tensor<T> discriminator_forward(Discriminator<T>& disc, const Tensor<T>& image, std::size_t iterations);

}  // namespace cylin
