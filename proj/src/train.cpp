#include "cylin/train.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "cylin/checkpoint.hpp"
#include "cylin/loss.hpp"
#include "cylin/metrics.hpp"

namespace cylin {

namespace fs = std::filesystem;

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string metrics_csv_header() { return "step,l1,l_adv,loss_total,seam,psnr,ssim"; }

std::string metrics_csv_row(const EvalRow& r) {
  return std::to_string(r.step) + "," + format_number(r.l1) + "," + format_number(r.l_adv) + "," +
         format_number(r.loss_total) + "," + format_number(r.seam) + "," + format_number(r.psnr) + "," +
         format_number(r.ssim);
}

std::string train_csv_header() { return "step,l1,l_adv,loss_total,l_disc"; }

std::string train_csv_row(const StepRow& r) {
  return std::to_string(r.step) + "," + format_number(r.l1) + "," + format_number(r.l_adv) + "," +
         format_number(r.loss_total) + "," + format_number(r.l_disc);
}

namespace {

TensorF unknown_region(const TensorF& mask) {
  TensorF r(mask.shape());
  for (std::size_t i = 0; i < mask.size(); ++i) r[i] = 1.0f - mask[i];
  return r;
}

std::vector<ParamRef<float>> param_refs(GeneratorParams<float>& p) {
  std::vector<ParamRef<float>> out;
  p.for_each([&](const std::string& name, Tensor<float>& t) { out.push_back({name, &t}); });
  return out;
}

std::vector<const Tensor<float>*> grad_ptrs(GeneratorParams<float>& g) {
  std::vector<const Tensor<float>*> out;
  g.for_each([&](const std::string&, Tensor<float>& t) { out.push_back(&t); });
  return out;
}

void check_finite(double v, const char* what, std::size_t step) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what + " at step " + std::to_string(step));
}

}  // namespace

double dataset_l1(const Generator<float>& gen, const std::vector<PanoSample>& samples) {
  if (samples.empty()) throw ParameterError("dataset_l1 on an empty sample set");
  double total = 0.0;
  for (const auto& s : samples) total += l1_loss(gen.predict(s.masked(), s.mask), s.image).value;
  return total / static_cast<double>(samples.size());
}

EvalRow evaluate(const Generator<float>& gen, const std::vector<PanoSample>& samples, const TrainConfig& train,
                 const Discriminator<float>* disc) {
  if (samples.empty()) throw ParameterError("evaluate on an empty sample set");
  EvalRow row;
  std::optional<Discriminator<float>> critic;
  if (disc) critic = *disc;
  for (const auto& s : samples) {
    const TensorF masked = s.masked();
    const TensorF pred = gen.predict(masked, s.mask);
    const TensorF region = unknown_region(s.mask);
    const bool any_unknown = sum(region) > 0.0;
    row.l1 += l1_loss(pred, s.image, any_unknown ? &region : nullptr).value;
    const TensorF done = paste_known(masked, s.mask, pred);
    row.seam += seam_metric(done);
    row.psnr += psnr(done, s.image);
    row.ssim += ssim(done, s.image);
    if (critic) {
      const TensorF scores = critic->forward(done, critic->config().eval_iterations);
      row.l_adv += -mean(scores);
    }
  }
  const double n = static_cast<double>(samples.size());
  row.l1 /= n;
  row.l_adv /= n;
  row.seam /= n;
  row.psnr /= n;
  row.ssim /= n;
  row.loss_total = train.lambda_gen * row.l1 + train.lambda_adv * row.l_adv;
  return row;
}

TrainResult train(const RunConfig& config, const Dataset& data, const TrainOptions& options) {
  config.validate();
  if (data.train.empty() || data.validation.empty()) throw ConfigError("training needs non-empty datasets");
  const TrainConfig& tc = config.train;

  Rng rng(tc.seed);
  TrainResult result{{}, {}, 0.0, Generator<float>(config.gen, rng), std::nullopt};
  Generator<float>& gen = result.generator;
  if (tc.adversarial) result.discriminator.emplace(config.disc, rng);

  const auto gen_params = param_refs(gen.params());
  std::vector<ParamRef<float>> disc_params;
  if (result.discriminator) {
    result.discriminator->for_each(
        [&](const std::string& name, Tensor<float>& t) { disc_params.push_back({name, &t}); });
  }
  AdamState<float> gen_state, disc_state;
  const AdamConfig gen_adam{tc.lr_gen};
  const AdamConfig disc_adam{tc.lr_disc};

  const fs::path ckpt_dir = config.out_dir / "checkpoint";
  std::ofstream metrics_out, steps_out;
  if (options.write_files) {
    fs::create_directories(config.out_dir);
    metrics_out.open(config.out_dir / "metrics.csv", std::ios::binary | std::ios::trunc);
    steps_out.open(config.out_dir / "train_loss.csv", std::ios::binary | std::ios::trunc);
    if (!metrics_out || !steps_out) throw ConfigError("cannot write logs in " + config.out_dir.string());
    metrics_out << metrics_csv_header() << "\n";
    steps_out << train_csv_header() << "\n";
  }
  auto disc_ptr = [&]() -> const Discriminator<float>* {
    return result.discriminator ? &*result.discriminator : nullptr;
  };
  auto log_eval = [&](std::size_t step) {
    EvalRow row = evaluate(gen, data.validation, tc, disc_ptr());
    row.step = step;
    check_finite(row.loss_total, "validation loss", step);
    result.eval.push_back(row);
    if (options.write_files) metrics_out << metrics_csv_row(row) << "\n" << std::flush;
    if (options.on_eval) options.on_eval(row);
  };
  auto save = [&](std::size_t step) {
    if (options.write_files) save_checkpoint(ckpt_dir, config, step, gen, disc_ptr());
  };

  log_eval(0);
  save(0);

  for (std::size_t step = 1; step <= tc.steps; ++step) {
    std::vector<TensorF> images, masks;
    for (std::size_t b = 0; b < tc.batch; ++b) {
      const auto& s = data.train[rng.below(data.train.size())];
      images.push_back(s.image);
      masks.push_back(s.mask);
    }
    const TensorF image = stack_batch<float>(images);
    const TensorF mask = stack_batch<float>(masks);
    const TensorF masked = mask_image(image, mask);

    GeneratorCache<float> cache;
    const TensorF pred = gen.predict(masked, mask, &cache);
    const auto l1 = l1_loss(pred, image);
    StepRow row{step, l1.value, 0.0, 0.0, 0.0};
    TensorF grad_out = scale(l1.grad, static_cast<float>(tc.lambda_gen));

    if (result.discriminator) {
      Discriminator<float>& disc = *result.discriminator;
      const std::size_t iters = config.disc.train_iterations;
      DiscriminatorCache<float> real_cache, fake_cache;
      const TensorF real_scores = disc.forward(image, iters, &real_cache);
      const TensorF fake_scores = disc.forward(pred, iters, &fake_cache);
      row.l_disc = adversarial_losses(tc.adv_loss, real_scores, fake_scores).disc;
      check_finite(row.l_disc, "discriminator loss", step);
      const auto [g_real, g_fake] = adversarial_disc_grads(tc.adv_loss, real_scores, fake_scores);
      auto gr = disc.backward(real_cache, g_real);
      const auto gf = disc.backward(fake_cache, g_fake);
      for (std::size_t i = 0; i < gr.layers.size(); ++i) {
        add_inplace(gr.layers[i].weight, gf.layers[i].weight);
        add_inplace(gr.layers[i].bias, gf.layers[i].bias);
      }
      std::vector<const Tensor<float>*> dg;
      Discriminator<float>::for_each_layer(gr.layers, [&](const std::string&, Tensor<float>& t) { dg.push_back(&t); });
      adam_step<float>(disc_params, dg, disc_state, disc_adam);

      DiscriminatorCache<float> gen_cache;
      const TensorF scores = disc.forward(pred, iters, &gen_cache);
      row.l_adv = -mean(scores);
      const auto through = disc.backward(gen_cache, adversarial_gen_grad(scores));
      add_inplace(grad_out, scale(through.input, static_cast<float>(tc.lambda_adv)));
    }
    row.loss_total = tc.lambda_gen * row.l1 + tc.lambda_adv * row.l_adv;
    check_finite(row.loss_total, "generator loss", step);

    auto grads = gen.backward(cache, grad_out);
    adam_step<float>(gen_params, grad_ptrs(grads.params), gen_state, gen_adam);

    result.steps.push_back(row);
    if (options.write_files) steps_out << train_csv_row(row) << "\n";
    if (step % tc.log_every == 0 || step == tc.steps) log_eval(step);
    if (tc.checkpoint_every && step % tc.checkpoint_every == 0 && step != tc.steps) save(step);
  }
  if (tc.steps > 0) save(tc.steps);

  result.final_train_l1 = dataset_l1(gen, data.train);
  if (options.write_files) {
    std::ofstream summary(config.out_dir / "summary.txt", std::ios::binary | std::ios::trunc);
    summary << "steps = " << tc.steps << "\n";
    summary << "final_train_l1 = " << format_number(result.final_train_l1) << "\n";
    const EvalRow& first = result.eval.front();
    const EvalRow& last = result.eval.back();
    summary << "initial_val_l1 = " << format_number(first.l1) << "\n";
    summary << "final_val_l1 = " << format_number(last.l1) << "\n";
    summary << "final_seam = " << format_number(last.seam) << "\n";
    summary << "final_psnr = " << format_number(last.psnr) << "\n";
    summary << "final_ssim = " << format_number(last.ssim) << "\n";
  }
  return result;
}

OutpaintResult outpaint(const Generator<float>& gen, const TensorF& image, const MaskSpec& spec,
                        const TensorF* ground_truth) {
  const Shape s = image.shape();
  if (s.n != 1 || s.c != gen.config().image_channels) throw ShapeError("outpaint expects [1, 3, H, W], got " + s.str());
  const std::size_t f = gen.config().stride_product();
  if (s.h % f || s.w % f) {
    throw ConfigError("image size " + std::to_string(s.w) + "x" + std::to_string(s.h) +
                      " is not divisible by the generator stride " + std::to_string(f));
  }
  const TensorF mask = make_mask(spec, s.h, s.w);
  const TensorF masked = mask_image(image, mask);
  OutpaintResult out;
  out.completed = paste_known(masked, mask, gen.predict(masked, mask));
  out.seam = seam_metric(out.completed);
  if (ground_truth) {
    if (ground_truth->shape() != s) throw ShapeError("ground truth shape differs from the input");
    out.psnr = psnr(out.completed, *ground_truth);
    out.ssim = ssim(out.completed, *ground_truth);
  }
  return out;
}

}  // namespace cylin
