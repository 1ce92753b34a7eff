#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cylin/checkpoint.hpp"
#include "cylin/config.hpp"
#include "cylin/data.hpp"
#include "cylin/image_io.hpp"
#include "cylin/loss.hpp"
#include "cylin/metrics.hpp"
#include "cylin/train.hpp"
#include "support.hpp"

using namespace cylin;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cylin_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig tiny_run(std::size_t steps) {
  RunConfig c;
  c.train.steps = steps;
  c.train.seed = 3;
  c.train.log_every = 2;
  c.train.lr_gen = 1e-3;
  c.data.base.height = 16;
  c.data.base.width = 32;
  c.data.count = 4;
  c.data.val_count = 2;
  c.gen.channels = {4, 4};
  c.gen.spe_pairs = 2;
  c.disc.channels = {4, 4};
  c.disc.eval_iterations = 5;
  return c;
}

Dataset tiny_data(const RunConfig& c) { return make_synthetic_dataset(c.data.base, c.data.count, c.data.val_count); }

// Independent SSIM: direct 2D Gaussian window, per pixel.
double reference_ssim(const TensorD& a, const TensorD& b, double peak) {
  double g[11], norm = 0.0;
  for (int i = 0; i < 11; ++i) norm += g[i] = std::exp(-(i - 5) * (i - 5) / (2.0 * 1.5 * 1.5));
  for (double& v : g) v /= norm;
  const double c1 = (0.01 * peak) * (0.01 * peak), c2 = (0.03 * peak) * (0.03 * peak);
  const Shape s = a.shape();
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      double acc = 0.0;
      std::size_t pix = 0;
      for (std::size_t y = 0; y + 11 <= s.h; ++y) {
        for (std::size_t x = 0; x + 11 <= s.w; ++x) {
          double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
          for (int i = 0; i < 11; ++i) {
            for (int j = 0; j < 11; ++j) {
              const double w = g[i] * g[j], va = a(n, c, y + i, x + j), vb = b(n, c, y + i, x + j);
              ma += w * va, mb += w * vb, saa += w * va * va, sbb += w * vb * vb, sab += w * va * vb;
            }
          }
          const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
          acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
          ++pix;
        }
      }
      total += acc / static_cast<double>(pix);
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace

TEST(Mask, Examples) {
  const TensorF full = make_mask(MaskSpec{1, 1}, 4, 8);
  for (float v : full.data()) EXPECT_EQ(v, 1.0f);

  const TensorF half = make_mask(MaskSpec{1, 2}, 2, 512);
  std::size_t known = 0;
  for (std::size_t w = 0; w < 512; ++w) {
    known += half(0, 0, 0, w) == 1.0f;
    EXPECT_EQ(half(0, 0, 0, w), (w >= 128 && w < 384) ? 1.0f : 0.0f);
    EXPECT_EQ(half(0, 0, 1, w), half(0, 0, 0, w));
  }
  EXPECT_EQ(known, 256u);

  const TensorF quarter = make_mask(MaskSpec{1, 4}, 1, 8);
  EXPECT_EQ(quarter.values(), (std::vector<float>{0, 0, 0, 1, 1, 0, 0, 0}));
}

TEST(Mask, FractionAccountingAndErrors) {
  for (std::size_t W : {8u, 16u, 100u, 128u}) {
    for (std::size_t q = 1; q <= 8; ++q) {
      for (std::size_t p = 1; p <= q; ++p) {
        const MaskSpec spec{p, q};
        EXPECT_EQ(known_columns(spec, W), static_cast<std::size_t>(std::llround(spec.fraction() * W)));
        double sum = 0.0;
        const TensorF m = make_mask(spec, 1, W);
        for (float v : m.data()) sum += v;
        EXPECT_EQ(sum, static_cast<double>(known_columns(spec, W)));
      }
    }
  }
  EXPECT_THROW(make_mask(MaskSpec{0, 2}, 2, 8), ParameterError);
  EXPECT_THROW(make_mask(MaskSpec{3, 2}, 2, 8), ParameterError);
  EXPECT_EQ(MaskSpec::parse("1/4").str(), "1/4");
}

TEST(Synth, StripesAreAzimuthPeriodic) {
  SyntheticPanoramaSpec spec;
  spec.frequency = 2;
  const SynthField field(spec);
  const PanoSample s = synth_panorama(spec);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t h = 0; h < spec.height; ++h) {
      EXPECT_NEAR(field(c, static_cast<double>(h), static_cast<double>(spec.width)), s.image(0, c, h, 0), 1e-6);
    }
  }
  EXPECT_LE(max_abs(s.image), 1.0);
}

TEST(Synth, DeterministicPerSeed) {
  for (SynthFamily f : {SynthFamily::Stripes, SynthFamily::Fourier, SynthFamily::Horizon}) {
    SyntheticPanoramaSpec spec;
    spec.family = f;
    spec.seed = 11;
    EXPECT_EQ(synth_panorama(spec).image, synth_panorama(spec).image);
    spec.seed = 12;
    const TensorF other = synth_panorama(spec).image;
    spec.seed = 11;
    EXPECT_NE(synth_panorama(spec).image, other);
  }
}

TEST(Synth, FourierSeamGradientBoundedByInterior) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SyntheticPanoramaSpec spec;
    spec.family = SynthFamily::Fourier;
    spec.seed = seed;
    spec.height = 16;
    spec.width = 64;
    const TensorF img = synth_panorama(spec).image;
    double seam = 0.0, interior = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t h = 0; h < 16; ++h) {
        seam = std::max(seam, static_cast<double>(std::abs(img(0, c, h, 0) - img(0, c, h, 63))));
        for (std::size_t w = 0; w + 1 < 64; ++w) {
          interior = std::max(interior, static_cast<double>(std::abs(img(0, c, h, w + 1) - img(0, c, h, w))));
        }
      }
    }
    // The seam pair is statistically one more interior pair, so it can edge
    // past the other 63 by sampling chance; allow a 5% margin.
    EXPECT_LE(seam, 1.05 * interior) << seed;
  }
}

TEST(Synth, DatasetUsesDistinctSeeds) {
  SyntheticPanoramaSpec base;
  base.height = 8;
  base.width = 16;
  const Dataset d = make_synthetic_dataset(base, 3, 2);
  ASSERT_EQ(d.train.size(), 3u);
  ASSERT_EQ(d.validation.size(), 2u);
  EXPECT_NE(d.train[0].image, d.train[1].image);
  EXPECT_NE(d.train[0].image, d.validation[0].image);
  EXPECT_EQ(d.train[0].masked(), mask_image(d.train[0].image, d.train[0].mask));
}

TEST(L1, Examples) {
  const TensorD t = test::random_tensor({1, 3, 4, 4}, 1);
  EXPECT_EQ(l1_loss(t, t).value, 0.0);
  EXPECT_EQ(max_abs(l1_loss(t, t).grad), 0.0);
  TensorD p = t;
  for (double& v : p.data()) v += 0.5;
  EXPECT_NEAR(l1_loss(p, t).value, 0.5, 1e-12);
}

TEST(L1, MatchesNaiveLoopWithRegion) {
  const TensorD a = test::random_tensor({2, 3, 5, 6}, 2), b = test::random_tensor({2, 3, 5, 6}, 3);
  TensorD region({2, 1, 5, 6});
  for (std::size_t i = 0; i < region.size(); ++i) region[i] = i % 3 == 0 ? 1.0 : 0.0;
  double sum = 0.0, count = 0.0, all = 0.0;
  for (std::size_t n = 0; n < 2; ++n) {
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t h = 0; h < 5; ++h) {
        for (std::size_t w = 0; w < 6; ++w) {
          const double d = std::abs(a(n, c, h, w) - b(n, c, h, w));
          all += d;
          if (region(n, 0, h, w) > 0.5) sum += d, count += 1.0;
        }
      }
    }
  }
  EXPECT_NEAR(l1_loss(a, b, &region).value, sum / count, 1e-7);
  EXPECT_NEAR(l1_loss(a, b).value, all / 180.0, 1e-7);
  const auto f = [&](const TensorD& x) { return l1_loss(x, b, &region).value; };
  EXPECT_LT(test::max_relative_error(l1_loss(a, b, &region).grad, test::numeric_gradient(f, a)), 1e-6);
  const TensorD empty({2, 1, 5, 6});
  EXPECT_THROW(l1_loss(a, b, &empty), ParameterError);
  EXPECT_THROW(l1_loss(a, test::random_tensor({2, 3, 5, 5}, 4)), ShapeError);
}

TEST(Adversarial, WassersteinExamples) {
  const std::vector<double> real{1, 3}, fake{0, 2}, zeros{0, 0};
  const auto v = wgan_losses(real, fake);
  EXPECT_EQ(v.disc, -1.0);
  EXPECT_EQ(v.gen, -1.0);
  EXPECT_EQ(wgan_losses(real, real).disc, 0.0);
  EXPECT_EQ(wgan_losses(real, zeros).gen, 0.0);
  const auto h = hinge_losses(real, fake);
  // mean(relu(1 - real)) + mean(relu(1 + fake)) = 0 + 2
  EXPECT_EQ(h.disc, 2.0);
  EXPECT_EQ(h.gen, -1.0);
  EXPECT_EQ(parse_adversarial_loss("hinge"), AdversarialLoss::Hinge);
}

TEST(Adversarial, GradientsMatchFiniteDifferences) {
  for (AdversarialLoss kind : {AdversarialLoss::Wasserstein, AdversarialLoss::Hinge}) {
    const TensorD real = test::random_tensor({2, 1, 2, 3}, 5, -2, 2), fake = test::random_tensor({2, 1, 2, 3}, 6, -2, 2);
    const auto [gr, gf] = adversarial_disc_grads(kind, real, fake);
    const auto fr = [&](const TensorD& r) { return adversarial_losses(kind, r, fake).disc; };
    const auto ff = [&](const TensorD& f) { return adversarial_losses(kind, real, f).disc; };
    EXPECT_LT(test::max_relative_error(gr, test::numeric_gradient(fr, real)), 1e-6);
    EXPECT_LT(test::max_relative_error(gf, test::numeric_gradient(ff, fake)), 1e-6);
    const auto fg = [&](const TensorD& f) { return adversarial_losses(kind, real, f).gen; };
    EXPECT_LT(test::max_relative_error(adversarial_gen_grad(fake), test::numeric_gradient(fg, fake)), 1e-6);
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  TensorD p = test::random_tensor({1, 2, 3, 4}, 7);
  const TensorD before = p, g(p.shape());
  const ParamRef<double> refs[] = {{"p", &p}};
  const TensorD* grads[] = {&g};
  AdamState<double> st;
  adam_step<double>(refs, grads, st, {});
  EXPECT_EQ(p, before);
  EXPECT_EQ(st.step, 1u);
}

TEST(Adam, QuadraticConverges) {
  TensorD x({1, 1, 1, 1}, 1.0);
  TensorD g(x.shape());
  const ParamRef<double> refs[] = {{"x", &x}};
  const TensorD* grads[] = {&g};
  AdamState<double> st;
  AdamConfig cfg;
  cfg.lr = 0.1;
  // Scalar reference Adam.
  double rx = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 200; ++t) {
    g[0] = 2.0 * x[0];
    adam_step<double>(refs, grads, st, cfg);
    const double rg = 2.0 * rx;
    m = 0.9 * m + 0.1 * rg;
    v = 0.999 * v + 0.001 * rg * rg;
    rx -= 0.1 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    ASSERT_NEAR(x[0], rx, 1e-12);
  }
  EXPECT_LT(std::abs(x[0]), 1e-3);
}

TEST(Adam, FirstStepMagnitudeIsLearningRate) {
  TensorD p = test::random_tensor({1, 1, 4, 4}, 8);
  const TensorD before = p, g = test::random_tensor({1, 1, 4, 4}, 9);
  const ParamRef<double> refs[] = {{"p", &p}};
  const TensorD* grads[] = {&g};
  AdamState<double> st;
  AdamConfig cfg;
  cfg.lr = 0.01;
  adam_step<double>(refs, grads, st, cfg);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_NEAR(before[i] - p[i], 0.01 * (g[i] > 0 ? 1.0 : -1.0), 1e-6);
  }
}

TEST(Adam, NonFiniteGradientNamesParameter) {
  TensorD p({1, 1, 1, 2});
  TensorD g({1, 1, 1, 2});
  g[1] = std::nan("");
  const ParamRef<double> refs[] = {{"enc0.gate.weight", &p}};
  const TensorD* grads[] = {&g};
  AdamState<double> st;
  try {
    adam_step<double>(refs, grads, st, {});
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("enc0.gate.weight"), std::string::npos);
  }
}

TEST(Metrics, PsnrExamples) {
  const TensorD a = test::random_tensor({1, 3, 8, 8}, 10);
  EXPECT_EQ(psnr(a, a), 99.0);
  TensorD b = a;
  for (double& v : b.data()) v += 0.2;
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
  const TensorD c = test::random_tensor({1, 3, 8, 8}, 11);
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mse += (a[i] - c[i]) * (a[i] - c[i]);
  mse /= static_cast<double>(a.size());
  EXPECT_NEAR(psnr(a, c), 10.0 * std::log10(4.0 / mse), 1e-9);
  EXPECT_NEAR(psnr(a, c), psnr(c, a), 1e-7);
}

TEST(Metrics, SsimMatchesReference) {
  const TensorD a = test::random_tensor({2, 3, 16, 20}, 12);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-6);
  TensorD b = a;
  const TensorD noise = test::random_tensor(a.shape(), 13, -0.3, 0.3);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] += noise[i];
  EXPECT_NEAR(ssim(a, b), reference_ssim(a, b, 2.0), 1e-5);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-7);
  const TensorD c = test::random_tensor(a.shape(), 14);
  const double s = ssim(a, c);
  EXPECT_GE(s, -1.0);
  EXPECT_LE(s, 1.0);
  EXPECT_NEAR(s, reference_ssim(a, c, 2.0), 1e-5);
  EXPECT_THROW(ssim(TensorD({1, 1, 8, 8}), TensorD({1, 1, 8, 8})), ShapeError);
}

TEST(Metrics, SeamExamples) {
  const TensorD flat = test::azimuth_constant({1, 3, 8, 16}, 15);
  EXPECT_EQ(seam_metric(flat), 1.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SyntheticPanoramaSpec spec;
    spec.seed = seed;
    const double s = seam_metric(synth_panorama(spec).image);
    EXPECT_GE(s, 0.5);
    EXPECT_LE(s, 2.0);
  }
  SyntheticPanoramaSpec spec;
  TensorF broken = synth_panorama(spec).image;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t h = 0; h < spec.height; ++h) {
      for (std::size_t w = 0; w <= spec.width / 2; ++w) broken(0, c, h, w) += 1.0f;
    }
  }
  EXPECT_GT(seam_metric(broken), 10.0);
  EXPECT_THROW(seam_metric(TensorD({1, 1, 2, 3})), ShapeError);
}

TEST(Config, RoundTripAndErrors) {
  RunConfig c = tiny_run(7);
  c.gen.pe_group.reset();
  c.gen.pad_mode = PadMode::ZeroBoth;
  c.train.adversarial = true;
  c.train.adv_loss = AdversarialLoss::Hinge;
  c.train.lr_gen = 3.25e-4;
  c.data.base.mask = MaskSpec{1, 4};
  const std::string text = to_string(c);
  const RunConfig back = parse_config(text);
  EXPECT_EQ(to_string(back), text);
  EXPECT_EQ(back.train.lr_gen, 3.25e-4);
  EXPECT_FALSE(back.gen.pe_group.has_value());

  const RunConfig d = parse_config("# comment\ntrain.steps = 5\n\ngen.channels = 8,16\n");
  EXPECT_EQ(d.train.steps, 5u);
  EXPECT_EQ(d.gen.channels, (std::vector<std::size_t>{8, 16}));
  EXPECT_EQ(d.train.lr_gen, 1e-4);
  EXPECT_EQ(d.train.lr_disc, 1e-3);
  EXPECT_EQ(d.train.batch, 2u);
  EXPECT_EQ(d.train.lambda_gen, 1.0);
  EXPECT_EQ(d.train.lambda_adv, 1e-2);

  EXPECT_THROW(parse_config("train.stepz = 5\n"), ConfigError);
  EXPECT_THROW(parse_config("train.steps = 5\ntrain.steps = 6\n"), ConfigError);
  EXPECT_THROW(parse_config("train.steps\n"), ConfigError);
  EXPECT_THROW(parse_config("train.lr_gen = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("gen.pad_mode = sideways\n"), ConfigError);
  EXPECT_THROW(parse_config("data.width = 102\ngen.channels = 4,4,4\n"), ConfigError);
}

TEST(Checkpoint, RoundTripAndMismatch) {
  const fs::path dir = scratch("ckpt") / "ck";
  RunConfig c = tiny_run(0);
  c.train.adversarial = true;
  Rng rng(1);
  const Generator<float> gen(c.gen, rng);
  Discriminator<float> disc(c.disc, rng);
  disc.forward(TensorF({1, 3, 16, 32}), 3);
  save_checkpoint(dir, c, 42, gen, &disc);
  const Checkpoint ck = load_checkpoint(dir);
  EXPECT_EQ(ck.step, 42u);
  EXPECT_EQ(to_string(ck.config), to_string(c));
  std::vector<TensorF> a, b;
  gen.params().for_each([&](const std::string&, const TensorF& t) { a.push_back(t); });
  ck.generator.params().for_each([&](const std::string&, const TensorF& t) { b.push_back(t); });
  EXPECT_EQ(a, b);
  ASSERT_TRUE(ck.discriminator.has_value());
  EXPECT_EQ(ck.discriminator->states()[0].u, disc.states()[0].u);
  EXPECT_EQ(ck.discriminator->layers()[1].weight, disc.layers()[1].weight);

  // Manifest claims a wider generator than the stored tensors.
  std::string manifest = slurp(dir / "manifest.txt");
  const std::string from = "gen.channels = 4,4", to = "gen.channels = 4,8";
  manifest.replace(manifest.find(from), from.size(), to);
  std::ofstream(dir / "manifest.txt", std::ios::binary) << manifest;
  EXPECT_THROW(load_checkpoint(dir), ConfigError);
  EXPECT_THROW(load_checkpoint(dir.parent_path() / "missing"), Error);
}

TEST(Train, ZeroStepsLogsInitialRowAndSavesInit) {
  RunConfig c = tiny_run(0);
  c.out_dir = scratch("zero");
  const TrainResult r = train(c, tiny_data(c));
  ASSERT_EQ(r.eval.size(), 1u);
  EXPECT_EQ(r.eval[0].step, 0u);
  EXPECT_TRUE(r.steps.empty());
  Rng rng(c.train.seed);
  const Generator<float> init(c.gen, rng);
  const Checkpoint ck = load_checkpoint(c.out_dir / "checkpoint");
  std::vector<TensorF> a, b;
  init.params().for_each([&](const std::string&, const TensorF& t) { a.push_back(t); });
  ck.generator.params().for_each([&](const std::string&, const TensorF& t) { b.push_back(t); });
  EXPECT_EQ(a, b);
  const std::string csv = slurp(c.out_dir / "metrics.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,l1,l_adv,loss_total,seam,psnr,ssim");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(Train, DeterministicAndDecomposed) {
  RunConfig c = tiny_run(6);
  c.train.adversarial = true;
  c.out_dir = scratch("det_a");
  const Dataset data = tiny_data(c);
  const TrainResult a = train(c, data);
  RunConfig c2 = c;
  c2.out_dir = scratch("det_b");
  const TrainResult b = train(c2, data);
  EXPECT_EQ(slurp(c.out_dir / "metrics.csv"), slurp(c2.out_dir / "metrics.csv"));
  EXPECT_EQ(slurp(c.out_dir / "train_loss.csv"), slurp(c2.out_dir / "train_loss.csv"));
  EXPECT_EQ(slurp(c.out_dir / "checkpoint" / "gen" / "head.weight.cylt"),
            slurp(c2.out_dir / "checkpoint" / "gen" / "head.weight.cylt"));
  ASSERT_EQ(a.steps.size(), 6u);
  for (const StepRow& s : a.steps) {
    EXPECT_NEAR(s.loss_total, c.train.lambda_gen * s.l1 + c.train.lambda_adv * s.l_adv, 1e-6);
    EXPECT_TRUE(std::isfinite(s.l_disc));
  }
  for (const EvalRow& e : a.eval) {
    EXPECT_NEAR(e.loss_total, c.train.lambda_gen * e.l1 + c.train.lambda_adv * e.l_adv, 1e-6);
    EXPECT_TRUE(std::isfinite(e.seam) && std::isfinite(e.psnr) && std::isfinite(e.ssim));
  }
  // Rows at 0, 2, 4, 6.
  EXPECT_EQ(a.eval.size(), 4u);
  EXPECT_EQ(a.eval.back().step, 6u);
  ASSERT_TRUE(a.discriminator.has_value());
}

TEST(Train, L1OnlyLearns) {
  RunConfig c = tiny_run(40);
  c.train.log_every = 40;
  c.out_dir = scratch("learn");
  const TrainResult r = train(c, tiny_data(c), {false, {}});
  EXPECT_LT(r.eval.back().l1, r.eval.front().l1);
  for (const StepRow& s : r.steps) EXPECT_EQ(s.l_adv, 0.0);
  EXPECT_FALSE(fs::exists(c.out_dir / "metrics.csv"));
}

TEST(Train, MaskAccounting) {
  RunConfig c = tiny_run(0);
  Rng rng(5);
  const Generator<float> gen(c.gen, rng);
  const Dataset data = tiny_data(c);
  for (const PanoSample& s : data.train) {
    const TensorF completed = generator_forward(gen, s.masked(), s.mask);
    TensorF unknown(s.mask.shape());
    for (std::size_t i = 0; i < unknown.size(); ++i) unknown[i] = 1.0f - s.mask[i];
    const double full = l1_loss(completed, s.image).value;
    const double region = l1_loss(completed, s.image, &unknown).value;
    EXPECT_LE(full, region + 1e-7);
    // The known half contributes nothing, so the full-image mean is exactly half.
    EXPECT_NEAR(full, 0.5 * region, 1e-6);
  }
}

TEST(Outpaint, FullMaskIsIdentityAndPpmRoundTrips) {
  RunConfig c = tiny_run(0);
  Rng rng(6);
  const Generator<float> gen(c.gen, rng);
  SyntheticPanoramaSpec spec;
  spec.height = 16;
  spec.width = 32;
  const TensorF img = synth_panorama(spec).image;
  const OutpaintResult r = outpaint(gen, img, MaskSpec{1, 1}, &img);
  EXPECT_EQ(r.completed, img);
  EXPECT_EQ(*r.psnr, 99.0);

  const fs::path dir = scratch("ppm");
  const Image8 bytes = tensor_to_image(outpaint(gen, img, MaskSpec{1, 2}).completed);
  write_ppm(dir / "o.ppm", bytes);
  EXPECT_EQ(read_ppm(dir / "o.ppm"), bytes);
  EXPECT_EQ(tensor_to_image(image_to_tensor(bytes)), bytes);
  EXPECT_THROW(outpaint(gen, TensorF({1, 3, 16, 31}), MaskSpec{1, 2}), ConfigError);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  const std::string bin = CYLINPAINT_BIN;
  auto run = [&](const std::string& args) {
    const int status = std::system((bin + " " + args + " > " + (dir / "log.txt").string() + " 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  std::ofstream(dir / "bad.cfg") << "train.nonsense = 1\n";
  std::ofstream(dir / "ok.cfg") << to_string(tiny_run(1));
  EXPECT_EQ(run("train --config " + (dir / "bad.cfg").string()), 2);
  EXPECT_EQ(run("train --config " + (dir / "missing.cfg").string()), 2);
  EXPECT_EQ(run("no-such-command"), 2);
  // Adam moves every weight by about lr, so this overflows on the first step.
  RunConfig blowup = tiny_run(3);
  blowup.train.lr_gen = 1e38;
  std::ofstream(dir / "nan.cfg") << to_string(blowup);
  EXPECT_EQ(run("train --quiet --config " + (dir / "nan.cfg").string() + " --out " + (dir / "nan").string()), 3);
  EXPECT_EQ(load_checkpoint(dir / "nan" / "checkpoint").step, 0u);
  EXPECT_EQ(run("train --quiet --config " + (dir / "ok.cfg").string() + " --out " + (dir / "run").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "run" / "metrics.csv"));
  EXPECT_EQ(run("synth --seed 1 --height 16 --width 32 --out " + (dir / "s.ppm").string()), 0);
  EXPECT_EQ(run("metrics --a " + (dir / "s.ppm").string() + " --b " + (dir / "s.ppm").string()), 0);
  EXPECT_NE(slurp(dir / "log.txt").find("99"), std::string::npos);
  EXPECT_EQ(run("outpaint --ckpt " + (dir / "run" / "checkpoint").string() + " --in " + (dir / "s.ppm").string() +
                " --out " + (dir / "o.ppm").string()),
            0);
}
