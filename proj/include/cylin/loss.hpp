#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cylin/tensor.hpp"

namespace cylin {

template <class T>
struct LossValue {
  double value = 0.0;
  Tensor<T> grad;  // d value / d pred
};

/// Mean |pred - target| over the pixels where region (broadcast over
/// channels) is nonzero; the whole tensor when region is null. The
/// subgradient at exact ties is 0. An empty region is a ParameterError.
template <class T>
LossValue<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target, const Tensor<T>* region = nullptr);

enum class AdversarialLoss { Wasserstein, Hinge };

std::string_view to_string(AdversarialLoss kind);
AdversarialLoss parse_adversarial_loss(std::string_view text);

struct AdversarialValues {
  double disc = 0.0;
  double gen = 0.0;
};

/// disc = mean(fake) - mean(real), gen = -mean(fake).
AdversarialValues wgan_losses(std::span<const double> real, std::span<const double> fake);
/// disc = mean(relu(1 - real)) + mean(relu(1 + fake)), gen = -mean(fake).
AdversarialValues hinge_losses(std::span<const double> real, std::span<const double> fake);

template <class T>
AdversarialValues adversarial_losses(AdversarialLoss kind, const Tensor<T>& real, const Tensor<T>& fake);

/// d loss_disc / d real and d loss_disc / d fake.
template <class T>
std::pair<Tensor<T>, Tensor<T>> adversarial_disc_grads(AdversarialLoss kind, const Tensor<T>& real,
                                                       const Tensor<T>& fake);

/// d loss_gen / d fake (identical for both formulations).
template <class T>
Tensor<T> adversarial_gen_grad(const Tensor<T>& fake);

// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <class T>
struct ParamRef {
  std::string name;
  Tensor<T>* value = nullptr;
};

template <class T>
struct AdamState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  std::size_t step = 0;
};

/// One bias-corrected Adam update, in place. A non-finite gradient aborts
/// with a NumericError naming the parameter, before anything is modified.
template <class T>
void adam_step(std::span<const ParamRef<T>> params, std::span<const Tensor<T>* const> grads, AdamState<T>& state,
               const AdamConfig& config);

}  // namespace cylin
