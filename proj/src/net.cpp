#include "cylin/net.hpp"

#include <cmath>
#include <numeric>

namespace cylin {

std::size_t GeneratorConfig::encoder_input_channels(std::size_t k) const {
  return k == 0 ? image_channels + 1 : channels[k - 1];
}

std::size_t GeneratorConfig::decoder_input_channels(std::size_t k) const {
  return k + 1 == stages() ? channels[k] : channels[k + 1] + channels[k];
}

std::size_t GeneratorConfig::pe_channels() const {
  if (!pe_group) return 0;
  return group_channels(spe_pairs, spe_pairs, *pe_group).size();
}

void GeneratorConfig::validate() const {
  if (channels.empty()) throw ConfigError("generator needs at least one stage");
  if (image_channels == 0) throw ConfigError("generator needs at least one image channel");
  for (std::size_t c : channels) {
    if (c == 0) throw ConfigError("generator stage channel counts must be positive");
  }
  if (kernel % 2 == 0) throw ConfigError("generator kernel must be odd");
  if (pe_group && spe_pairs == 0) throw ConfigError("positional embedding needs spe_pairs >= 1");
}

// ---------------------------------------------------------------------------

template <class T>
void GeneratorParams<T>::for_each(const Visitor& f) {
  for (std::size_t k = 0; k < encoder.size(); ++k) {
    const std::string p = "enc" + std::to_string(k) + ".";
    if (encoder[k].pe) f(p + "pe.weight", encoder[k].pe->weight);
    f(p + "feature.weight", encoder[k].conv.feature.weight);
    f(p + "feature.bias", encoder[k].conv.feature.bias);
    f(p + "gate.weight", encoder[k].conv.gate.weight);
    f(p + "gate.bias", encoder[k].conv.gate.bias);
    f(p + "norm.gamma", encoder[k].norm.gamma);
    f(p + "norm.beta", encoder[k].norm.beta);
  }
  for (std::size_t k = 0; k < decoder.size(); ++k) {
    const std::string p = "dec" + std::to_string(k) + ".";
    f(p + "feature.weight", decoder[k].conv.feature.weight);
    f(p + "feature.bias", decoder[k].conv.feature.bias);
    f(p + "gate.weight", decoder[k].conv.gate.weight);
    f(p + "gate.bias", decoder[k].conv.gate.bias);
    f(p + "norm.gamma", decoder[k].norm.gamma);
    f(p + "norm.beta", decoder[k].norm.beta);
  }
  f("head.weight", head.weight);
  f("head.bias", head.bias);
}

template <class T>
void GeneratorParams<T>::for_each(const ConstVisitor& f) const {
  const_cast<GeneratorParams*>(this)->for_each(Visitor([&f](const std::string& name, Tensor<T>& t) { f(name, t); }));
}

template <class T>
GeneratorParams<T> GeneratorParams<T>::zeros_like() const {
  GeneratorParams out = *this;
  out.for_each(Visitor([](const std::string&, Tensor<T>& t) { t.fill(T(0)); }));
  return out;
}

template <class T>
std::size_t GeneratorParams<T>::parameter_count() const {
  std::size_t n = 0;
  for_each(ConstVisitor([&n](const std::string&, const Tensor<T>& t) { n += t.size(); }));
  return n;
}

template <class T>
Generator<T>::Generator(const GeneratorConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const std::size_t stages = config_.stages();
  const std::size_t k_size = config_.kernel;
  for (std::size_t k = 0; k < stages; ++k) {
    EncoderStage<T> stage;
    const std::size_t in = config_.encoder_input_channels(k);
    if (config_.pe_group) {
      stage.pe = LearnablePeLayer<T>::random(in, config_.pe_channels(), *config_.pe_group, rng);
    }
    const std::size_t stride = k == 0 ? 1 : 2;
    stage.conv = GatedConvLayer<T>::random(
        {in, config_.channels[k], k_size, k_size, stride, stride, 1, 1, config_.pad_mode}, rng);
    stage.norm = InstanceNormLayer<T>::identity(config_.channels[k], config_.norm_epsilon);
    params_.encoder.push_back(std::move(stage));
  }
  for (std::size_t k = 0; k < stages; ++k) {
    DecoderStage<T> stage;
    stage.conv = GatedConvLayer<T>::random(
        {config_.decoder_input_channels(k), config_.channels[k], k_size, k_size, 1, 1, 1, 1, config_.pad_mode}, rng);
    stage.norm = InstanceNormLayer<T>::identity(config_.channels[k], config_.norm_epsilon);
    params_.decoder.push_back(std::move(stage));
  }
  params_.head = ConvLayer<T>::random(
      {config_.channels[0], config_.image_channels, k_size, k_size, 1, 1, 1, 1, config_.pad_mode}, rng);
}

template <class T>
Generator<T>::Generator(const GeneratorConfig& config, GeneratorParams<T> params)
    : config_(config), params_(std::move(params)) {
  config_.validate();
  if (params_.encoder.size() != config_.stages() || params_.decoder.size() != config_.stages()) {
    throw ConfigError("generator parameters do not match the configured stage count");
  }
}

template <class T>
template <class U>
Generator<U> Generator<T>::cast() const {
  Rng unused(0);
  GeneratorConfig cfg = config_;
  Generator<U> out(cfg, unused);
  std::vector<const Tensor<T>*> src;
  params_.for_each(typename GeneratorParams<T>::ConstVisitor(
      [&src](const std::string&, const Tensor<T>& t) { src.push_back(&t); }));
  std::size_t i = 0;
  out.params().for_each(typename GeneratorParams<U>::Visitor(
      [&](const std::string&, Tensor<U>& t) { t = src[i++]->template cast<U>(); }));
  return out;
}

template <class T>
Tensor<T> Generator<T>::stage_spe(std::size_t k, std::size_t height, std::size_t width) const {
  if (!config_.pe_group) return {};
  const std::size_t factor = k == 0 ? 1 : (std::size_t{1} << (k - 1));
  const SpeVolume spe =
      build_spe(height / factor, width / factor, config_.spe_pairs, config_.spe_pairs, config_.spe_mode);
  return select_group<T>(spe, *config_.pe_group);
}

namespace {

template <class T>
void check_generator_inputs(const GeneratorConfig& cfg, const Tensor<T>& image, const Tensor<T>& mask) {
  const Shape si = image.shape(), sm = mask.shape();
  if (si.c != cfg.image_channels) {
    throw ShapeError("generator expects " + std::to_string(cfg.image_channels) + " image channels, got " +
                     std::to_string(si.c));
  }
  if (sm.n != si.n || sm.c != 1 || sm.h != si.h || sm.w != si.w) {
    throw ShapeError("mask " + sm.str() + " does not match image " + si.str());
  }
  const std::size_t div = cfg.stride_product();
  if (si.h == 0 || si.w == 0 || si.h % div != 0 || si.w % div != 0) {
    throw ShapeError("generator input " + si.str() + " must be divisible by " + std::to_string(div));
  }
}

}  // namespace

template <class T>
Tensor<T> Generator<T>::predict(const Tensor<T>& masked_image, const Tensor<T>& mask,
                                GeneratorCache<T>* cache) const {
  check_generator_inputs(config_, masked_image, mask);
  const std::size_t stages = config_.stages();
  const Shape s = masked_image.shape();
  GeneratorCache<T> local;
  GeneratorCache<T>& c = cache ? *cache : local;
  c = GeneratorCache<T>{};
  c.mask = mask;
  c.enc_gate.resize(stages);
  c.dec_gate.resize(stages);
  c.dec_in.resize(stages);
  c.dec_conv.resize(stages);
  c.dec_out.resize(stages);

  Tensor<T> x = concat_channels(masked_image, mask);
  for (std::size_t k = 0; k < stages; ++k) {
    const auto& stage = params_.encoder[k];
    Tensor<T> spe;
    if (stage.pe) {
      spe = stage_spe(k, s.h, s.w);
      x = learnable_pe_apply(x, spe, *stage.pe);
    }
    Tensor<T> conv = gated_conv_forward(x, stage.conv, &c.enc_gate[k]);
    Tensor<T> out = instance_norm_forward(conv, stage.norm);
    c.enc_spe.push_back(std::move(spe));
    c.enc_in.push_back(std::move(x));
    c.enc_conv.push_back(std::move(conv));
    c.enc_out.push_back(out);
    x = std::move(out);
  }
  for (std::size_t k = stages; k-- > 0;) {
    const auto& stage = params_.decoder[k];
    Tensor<T> in = k + 1 == stages ? c.enc_out[k] : concat_channels(upsample_nearest2x(x), c.enc_out[k]);
    Tensor<T> conv = gated_conv_forward(in, stage.conv, &c.dec_gate[k]);
    x = instance_norm_forward(conv, stage.norm);
    c.dec_in[k] = std::move(in);
    c.dec_conv[k] = std::move(conv);
    c.dec_out[k] = x;
  }
  c.output = tanh(conv2d_forward(x, params_.head));
  return c.output;
}

template <class T>
typename Generator<T>::Gradients Generator<T>::backward(const GeneratorCache<T>& c, const Tensor<T>& grad_out) const {
  const std::size_t stages = config_.stages();
  if (grad_out.shape() != c.output.shape()) throw ShapeError("generator backward: gradient shape mismatch");
  Gradients g{params_.zeros_like(), {}, {}};

  const Tensor<T> grad_head_pre = tanh_backward_from_output(c.output, grad_out);
  ConvGradients<T> head = conv2d_backward(c.dec_out[0], params_.head, grad_head_pre);
  g.params.head.weight = std::move(head.weight);
  g.params.head.bias = std::move(head.bias);

  std::vector<Tensor<T>> grad_dec_out(stages);
  std::vector<Tensor<T>> grad_enc_out(stages);
  grad_dec_out[0] = std::move(head.input);
  for (std::size_t k = 0; k < stages; ++k) {
    const auto& stage = params_.decoder[k];
    InstanceNormGradients<T> norm = instance_norm_backward(c.dec_conv[k], stage.norm, grad_dec_out[k]);
    GatedConvGradients<T> conv = gated_conv_backward(c.dec_in[k], stage.conv, norm.input, &c.dec_gate[k]);
    auto& gs = g.params.decoder[k];
    gs.norm.gamma = std::move(norm.gamma);
    gs.norm.beta = std::move(norm.beta);
    gs.conv.feature.weight = std::move(conv.feature.weight);
    gs.conv.feature.bias = std::move(conv.feature.bias);
    gs.conv.gate.weight = std::move(conv.gate.weight);
    gs.conv.gate.bias = std::move(conv.gate.bias);
    if (k + 1 == stages) {
      grad_enc_out[k] = std::move(conv.input);
    } else {
      const std::size_t up_channels = config_.channels[k + 1];
      grad_dec_out[k + 1] = upsample_nearest2x_backward(slice_channels(conv.input, 0, up_channels));
      grad_enc_out[k] = slice_channels(conv.input, up_channels, config_.channels[k]);
    }
  }

  for (std::size_t k = stages; k-- > 0;) {
    const auto& stage = params_.encoder[k];
    InstanceNormGradients<T> norm = instance_norm_backward(c.enc_conv[k], stage.norm, grad_enc_out[k]);
    GatedConvGradients<T> conv = gated_conv_backward(c.enc_in[k], stage.conv, norm.input, &c.enc_gate[k]);
    auto& gs = g.params.encoder[k];
    gs.norm.gamma = std::move(norm.gamma);
    gs.norm.beta = std::move(norm.beta);
    gs.conv.feature.weight = std::move(conv.feature.weight);
    gs.conv.feature.bias = std::move(conv.feature.bias);
    gs.conv.gate.weight = std::move(conv.gate.weight);
    gs.conv.gate.bias = std::move(conv.gate.bias);
    Tensor<T> grad_in = std::move(conv.input);
    if (stage.pe) {
      LearnablePeGradients<T> pe = learnable_pe_backward(c.enc_spe[k], *stage.pe, grad_in);
      gs.pe->weight = std::move(pe.weight);
      grad_in = std::move(pe.input);
    }
    if (k > 0) {
      add_inplace(grad_enc_out[k - 1], grad_in);
    } else {
      g.image = slice_channels(grad_in, 0, config_.image_channels);
      g.mask = slice_channels(grad_in, config_.image_channels, 1);
    }
  }
  return g;
}

template <class T>
Tensor<T> paste_known(const Tensor<T>& input, const Tensor<T>& mask, const Tensor<T>& prediction) {
  const Shape s = input.shape();
  if (prediction.shape() != s) throw ShapeError("paste_known: prediction shape mismatch");
  if (mask.shape() != Shape{s.n, 1, s.h, s.w}) throw ShapeError("paste_known: mask shape mismatch");
  Tensor<T> out(s);
  for (std::size_t b = 0; b < s.n; ++b) {
    auto m = mask.plane(b, 0);
    for (std::size_t c = 0; c < s.c; ++c) {
      auto in = input.plane(b, c);
      auto pr = prediction.plane(b, c);
      auto dst = out.plane(b, c);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = m[i] * in[i] + (T(1) - m[i]) * pr[i];
    }
  }
  return out;
}

template <class T>
Tensor<T> generator_forward(const Generator<T>& gen, const Tensor<T>& masked_image, const Tensor<T>& mask) {
  for (T v : mask.data()) {
    if (v != T(0) && v != T(1)) throw ParameterError("mask values must be 0 or 1");
  }
  for (T v : masked_image.data()) {
    if (!(v >= T(-1) && v <= T(1))) throw ParameterError("generator input must lie in [-1, 1]");
  }
  Tensor<T> pred = gen.predict(masked_image, mask);
  return gen.config().paste_known ? paste_known(masked_image, mask, pred) : pred;
}

// ---------------------------------------------------------------------------

namespace {

double normalize_in_place(std::vector<double>& x) {
  double n = 0.0;
  for (double v : x) n += v * v;
  n = std::sqrt(n);
  if (n > 1e-300) {
    for (double& v : x) v /= n;
  }
  return n;
}

}  // namespace

SpectralNormState make_spectral_state(std::size_t rows, Rng& rng) {
  SpectralNormState state{std::vector<double>(rows)};
  for (double& v : state.u) v = rng.normal();
  normalize_in_place(state.u);
  return state;
}

SpectralNormResult spectral_estimate(std::span<const double> w, std::size_t rows, std::size_t cols,
                                     SpectralNormState& state, std::size_t iterations) {
  if (w.size() != rows * cols) throw ShapeError("spectral_estimate: matrix size mismatch");
  if (iterations == 0) throw ParameterError("spectral normalisation needs at least one iteration");
  if (state.u.size() != rows) {
    // Deterministic fallback start vector.
    state.u.assign(rows, 1.0 / std::sqrt(static_cast<double>(rows)));
  }
  SpectralNormResult r;
  r.u = state.u;
  r.v.assign(cols, 0.0);
  bool zero = true;
  for (double x : w) zero = zero && x == 0.0;
  if (zero) {
    r.sigma = 1.0;
    return r;
  }
  std::vector<double> wv(rows);
  for (std::size_t it = 0; it < iterations; ++it) {
    std::fill(r.v.begin(), r.v.end(), 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) r.v[j] += w[i * cols + j] * r.u[i];
    }
    normalize_in_place(r.v);
    for (std::size_t i = 0; i < rows; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < cols; ++j) acc += w[i * cols + j] * r.v[j];
      wv[i] = acc;
    }
    r.u = wv;
    normalize_in_place(r.u);
  }
  double sigma = 0.0;
  for (std::size_t i = 0; i < rows; ++i) sigma += r.u[i] * wv[i];
  r.sigma = sigma > 0.0 ? sigma : 1.0;
  state.u = r.u;
  return r;
}

template <class T>
Tensor<T> spectral_normalize(const Tensor<T>& weight, SpectralNormState& state, std::size_t iterations,
                             SpectralNormResult* result) {
  const std::size_t rows = weight.shape().n;
  if (rows == 0) throw ShapeError("spectral_normalize: empty weight");
  const std::size_t cols = weight.size() / rows;
  std::vector<double> w(weight.data().begin(), weight.data().end());
  SpectralNormResult r = spectral_estimate(w, rows, cols, state, iterations);
  Tensor<T> out = scale(weight, static_cast<T>(1.0 / r.sigma));
  if (result) *result = std::move(r);
  return out;
}

template <class T>
Discriminator<T>::Discriminator(const DiscriminatorConfig& config, Rng& rng) : config_(config) {
  if (config_.channels.empty()) throw ConfigError("discriminator needs at least one conv layer");
  std::size_t in = config_.image_channels;
  for (std::size_t c : config_.channels) {
    layers_.push_back(ConvLayer<T>::random(
        {in, c, config_.kernel, config_.kernel, 2, 2, 1, 1, config_.pad_mode}, rng, std::sqrt(2.0)));
    states_.push_back(make_spectral_state(c, rng));
    in = c;
  }
  layers_.push_back(ConvLayer<T>::random({in, 1, config_.kernel, config_.kernel, 1, 1, 1, 1, config_.pad_mode}, rng));
  states_.push_back(make_spectral_state(1, rng));
}

template <class T>
Tensor<T> Discriminator<T>::forward(const Tensor<T>& image, std::size_t iterations, DiscriminatorCache<T>* cache) {
  DiscriminatorCache<T> local;
  DiscriminatorCache<T>& c = cache ? *cache : local;
  c = DiscriminatorCache<T>{};
  Tensor<T> x = image;
  const T slope = static_cast<T>(config_.slope);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    SpectralNormResult sn;
    ConvLayer<T> layer = layers_[i];
    layer.weight = spectral_normalize(layers_[i].weight, states_[i], iterations, &sn);
    Tensor<T> pre = conv2d_forward(x, layer);
    Tensor<T> next = i + 1 < layers_.size() ? leaky_relu(pre, slope) : pre;
    c.inputs.push_back(std::move(x));
    c.pre.push_back(std::move(pre));
    c.normalized.push_back(std::move(layer.weight));
    c.sn.push_back(std::move(sn));
    x = std::move(next);
  }
  return x;
}

template <class T>
typename Discriminator<T>::Gradients Discriminator<T>::backward(const DiscriminatorCache<T>& c,
                                                                const Tensor<T>& grad_scores) const {
  Gradients g;
  g.layers.resize(layers_.size());
  const T slope = static_cast<T>(config_.slope);
  Tensor<T> grad = grad_scores;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (i + 1 < layers_.size()) grad = leaky_relu_backward(c.pre[i], grad, slope);
    ConvLayer<T> layer = layers_[i];
    layer.weight = c.normalized[i];
    ConvGradients<T> cg = conv2d_backward(c.inputs[i], layer, grad);
    // d(W/sigma)/dW with sigma = u^T W v and u, v held fixed.
    const SpectralNormResult& sn = c.sn[i];
    const std::size_t rows = layer.weight.shape().n;
    const std::size_t cols = layer.weight.size() / rows;
    double inner = 0.0;
    for (std::size_t j = 0; j < cg.weight.size(); ++j) inner += static_cast<double>(cg.weight[j]) * layer.weight[j];
    Tensor<T> gw(cg.weight.shape());
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t q = 0; q < cols; ++q) {
        const std::size_t j = r * cols + q;
        gw[j] = static_cast<T>((cg.weight[j] - inner * sn.u[r] * sn.v[q]) / sn.sigma);
      }
    }
    g.layers[i] = ConvLayer<T>{layers_[i].geometry, std::move(gw), std::move(cg.bias)};
    grad = std::move(cg.input);
  }
  g.input = std::move(grad);
  return g;
}

template <class T>
void Discriminator<T>::for_each_layer(std::vector<ConvLayer<T>>& layers, const Visitor& f) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    f("conv" + std::to_string(i) + ".weight", layers[i].weight);
    f("conv" + std::to_string(i) + ".bias", layers[i].bias);
  }
}

template <class T>
void Discriminator<T>::for_each(const Visitor& f) {
  for_each_layer(layers_, f);
}

template <class T>
Tensor<T> discriminator_forward(Discriminator<T>& disc, const Tensor<T>& image, std::size_t iterations) {
  return disc.forward(image, iterations);
}

template struct GeneratorParams<float>;
template struct GeneratorParams<double>;
template class Generator<float>;
template class Generator<double>;
template Generator<double> Generator<float>::cast<double>() const;
template Generator<float> Generator<double>::cast<float>() const;
template Generator<float> Generator<float>::cast<float>() const;
template Tensor<float> paste_known(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> paste_known(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&);
template Tensor<float> generator_forward(const Generator<float>&, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> generator_forward(const Generator<double>&, const Tensor<double>&, const Tensor<double>&);
template Tensor<float> spectral_normalize(const Tensor<float>&, SpectralNormState&, std::size_t, SpectralNormResult*);
template Tensor<double> spectral_normalize(const Tensor<double>&, SpectralNormState&, std::size_t, SpectralNormResult*);
template class Discriminator<float>;
template class Discriminator<double>;
template Tensor<float> discriminator_forward(Discriminator<float>&, const Tensor<float>&, std::size_t);
template Tensor<double> discriminator_forward(Discriminator<double>&, const Tensor<double>&, std::size_t);

}  // namespace cylin
