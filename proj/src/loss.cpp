#include "cylin/loss.hpp"

#include <cmath>

namespace cylin {

template <class T>
LossValue<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target, const Tensor<T>* region) {
  const Shape s = pred.shape();
  if (target.shape() != s) throw ShapeError("l1_loss: " + s.str() + " vs " + target.shape().str());
  if (region && region->shape() != Shape{s.n, 1, s.h, s.w}) throw ShapeError("l1_loss: region mask shape mismatch");
  LossValue<T> out{0.0, Tensor<T>(s)};
  std::size_t count = 0;
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      auto p = pred.plane(b, c);
      auto t = target.plane(b, c);
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (region && region->plane(b, 0)[i] == T(0)) continue;
        out.value += std::abs(static_cast<double>(p[i]) - static_cast<double>(t[i]));
        ++count;
      }
    }
  }
  if (count == 0) throw ParameterError("l1_loss: empty region");
  out.value /= static_cast<double>(count);
  const T inv = static_cast<T>(1.0 / static_cast<double>(count));
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      auto p = pred.plane(b, c);
      auto t = target.plane(b, c);
      auto g = out.grad.plane(b, c);
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (region && region->plane(b, 0)[i] == T(0)) continue;
        g[i] = p[i] > t[i] ? inv : (p[i] < t[i] ? -inv : T(0));
      }
    }
  }
  return out;
}

std::string_view to_string(AdversarialLoss kind) { return kind == AdversarialLoss::Wasserstein ? "wgan" : "hinge"; }

AdversarialLoss parse_adversarial_loss(std::string_view text) {
  if (text == "wgan") return AdversarialLoss::Wasserstein;
  if (text == "hinge") return AdversarialLoss::Hinge;
  throw ConfigError("unknown adversarial loss '" + std::string(text) + "' (wgan|hinge)");
}

namespace {

double mean_of(std::span<const double> x) {
  if (x.empty()) throw ShapeError("adversarial loss on empty scores");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

template <class T>
std::vector<double> as_doubles(const Tensor<T>& t) {
  return {t.data().begin(), t.data().end()};
}

}  // namespace

AdversarialValues wgan_losses(std::span<const double> real, std::span<const double> fake) {
  if (real.size() != fake.size()) throw ShapeError("wgan_losses: score counts differ");
  const double mf = mean_of(fake);
  return {mf - mean_of(real), -mf};
}

AdversarialValues hinge_losses(std::span<const double> real, std::span<const double> fake) {
  if (real.size() != fake.size()) throw ShapeError("hinge_losses: score counts differ");
  double dr = 0.0, df = 0.0;
  for (double v : real) dr += std::max(0.0, 1.0 - v);
  for (double v : fake) df += std::max(0.0, 1.0 + v);
  return {dr / static_cast<double>(real.size()) + df / static_cast<double>(fake.size()), -mean_of(fake)};
}

template <class T>
AdversarialValues adversarial_losses(AdversarialLoss kind, const Tensor<T>& real, const Tensor<T>& fake) {
  const auto r = as_doubles(real), f = as_doubles(fake);
  return kind == AdversarialLoss::Wasserstein ? wgan_losses(r, f) : hinge_losses(r, f);
}

template <class T>
std::pair<Tensor<T>, Tensor<T>> adversarial_disc_grads(AdversarialLoss kind, const Tensor<T>& real,
                                                       const Tensor<T>& fake) {
  if (real.shape() != fake.shape()) throw ShapeError("adversarial scores differ in shape");
  const T inv = static_cast<T>(1.0 / static_cast<double>(real.size()));
  Tensor<T> gr(real.shape()), gf(fake.shape());
  for (std::size_t i = 0; i < real.size(); ++i) {
    if (kind == AdversarialLoss::Wasserstein) {
      gr[i] = -inv;
      gf[i] = inv;
    } else {
      gr[i] = real[i] < T(1) ? -inv : T(0);
      gf[i] = fake[i] > T(-1) ? inv : T(0);
    }
  }
  return {std::move(gr), std::move(gf)};
}

template <class T>
Tensor<T> adversarial_gen_grad(const Tensor<T>& fake) {
  return Tensor<T>(fake.shape(), static_cast<T>(-1.0 / static_cast<double>(fake.size())));
}

template <class T>
void adam_step(std::span<const ParamRef<T>> params, std::span<const Tensor<T>* const> grads, AdamState<T>& state,
               const AdamConfig& config) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: parameter/gradient count mismatch");
  if (!(config.lr > 0.0)) throw ParameterError("adam_step: learning rate must be positive");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i]->shape() != params[i].value->shape()) {
      throw ShapeError("adam_step: gradient shape mismatch for " + params[i].name);
    }
    if (!all_finite(*grads[i])) throw NumericError("non-finite gradient for parameter " + params[i].name);
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.value->shape());
      state.v.emplace_back(p.value->shape());
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: optimizer state does not match parameters");
  ++state.step;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].value->data();
    auto g = grads[i]->data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j];
      const double mj = config.beta1 * m[j] + (1.0 - config.beta1) * gj;
      const double vj = config.beta2 * v[j] + (1.0 - config.beta2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double mhat = mj / bc1;
      const double vhat = vj / bc2;
      p[j] = static_cast<T>(p[j] - config.lr * mhat / (std::sqrt(vhat) + config.epsilon));
    }
  }
}

#define CYLIN_INSTANTIATE(T)                                                                            \
  template LossValue<T> l1_loss(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*);                  \
  template AdversarialValues adversarial_losses(AdversarialLoss, const Tensor<T>&, const Tensor<T>&);   \
  template std::pair<Tensor<T>, Tensor<T>> adversarial_disc_grads(AdversarialLoss, const Tensor<T>&,    \
                                                                  const Tensor<T>&);                    \
  template Tensor<T> adversarial_gen_grad(const Tensor<T>&);                                            \
  template void adam_step(std::span<const ParamRef<T>>, std::span<const Tensor<T>* const>, AdamState<T>&, \
                          const AdamConfig&);

CYLIN_INSTANTIATE(float)
CYLIN_INSTANTIATE(double)

#undef CYLIN_INSTANTIATE

}  // namespace cylin
