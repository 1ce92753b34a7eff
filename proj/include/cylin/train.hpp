#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cylin/config.hpp"
#include "cylin/data.hpp"
#include "cylin/net.hpp"

namespace cylin {

/// One validation row of metrics.csv.
struct EvalRow {
  std::size_t step = 0;
  double l1 = 0.0;          // unknown region of the raw prediction (whole image if nothing is unknown)
  double l_adv = 0.0;       // generator adversarial term, 0 when adversarial training is off
  double loss_total = 0.0;  // lambda_gen * l1 + lambda_adv * l_adv
  double seam = 0.0;        // mean seam_metric of the completed images
  double psnr = 0.0;
  double ssim = 0.0;
};

/// One training step of train_loss.csv, measured on the sampled batch.
struct StepRow {
  std::size_t step = 0;  // 1-based: the row for step s precedes update s
  double l1 = 0.0;
  double l_adv = 0.0;
  double loss_total = 0.0;
  double l_disc = 0.0;
};

struct TrainResult {
  std::vector<EvalRow> eval;
  std::vector<StepRow> steps;
  double final_train_l1 = 0.0;  // full-image L1 over the whole training set after the last step
  Generator<float> generator;
  std::optional<Discriminator<float>> discriminator;
};

struct TrainOptions {
  bool write_files = true;  // metrics.csv, train_loss.csv, summary.txt and checkpoint/ under out_dir
  std::function<void(const EvalRow&)> on_eval;
};

/// Seeded training loop. A non-finite loss or gradient throws NumericError;
/// the checkpoint directory then still holds the last completed save.
TrainResult train(const RunConfig& config, const Dataset& data, const TrainOptions& options = {});

/// Validation metrics of `gen` on `samples`. `disc` (copied, so its
/// power-iteration state is untouched) supplies l_adv when non-null.
EvalRow evaluate(const Generator<float>& gen, const std::vector<PanoSample>& samples, const TrainConfig& train,
                 const Discriminator<float>* disc = nullptr);

/// Mean full-image L1 of the raw prediction over `samples`.
double dataset_l1(const Generator<float>& gen, const std::vector<PanoSample>& samples);

std::string format_number(double v);
std::string metrics_csv_header();
std::string metrics_csv_row(const EvalRow& row);
std::string train_csv_header();
std::string train_csv_row(const StepRow& row);

struct OutpaintResult {
  TensorF completed;  // [1, 3, H, W]
  double seam = 0.0;
  std::optional<double> psnr;
  std::optional<double> ssim;
};

/// Masks `image` with `mask`, runs the generator with known-pixel
/// compositing and scores the result. A resolution the generator cannot
/// process is a ConfigError.
OutpaintResult outpaint(const Generator<float>& gen, const TensorF& image, const MaskSpec& mask,
                        const TensorF* ground_truth = nullptr);

}  // namespace cylin
