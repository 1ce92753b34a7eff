#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "cylin/net.hpp"
#include "support.hpp"

using namespace cylin;
using test::random_tensor;

namespace {

GeneratorConfig tiny_config(PadMode mode = PadMode::CircularAzimuth, std::optional<PeGroup> group = PeGroup::AP) {
  GeneratorConfig c;
  c.channels = {4, 4};
  c.pad_mode = mode;
  c.pe_group = group;
  c.spe_pairs = 2;
  return c;
}

TensorD half_mask(std::size_t n, std::size_t h, std::size_t w) {
  TensorD m({n, 1, h, w});
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = w / 4; x < 3 * w / 4; ++x) m(b, 0, y, x) = 1.0;
    }
  }
  return m;
}

// Randomises every parameter, including norm affines and PE weights, so no
// part of the network is left at a symmetric initial value.
void perturb(Generator<double>& gen, std::uint64_t seed) {
  Rng rng(seed);
  gen.params().for_each([&](const std::string& name, TensorD& t) {
    const bool affine = name.find("gamma") != std::string::npos;
    for (double& v : t.data()) v += affine ? 0.3 * rng.normal() : 0.2 * rng.normal();
  });
}

double largest_singular_value(const TensorD& w) {
  const std::size_t rows = w.shape().n, cols = w.size() / rows;
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = w[i * cols + j];
  }
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

}  // namespace

TEST(Generator, ShapeContractAtFullResolution) {
  GeneratorConfig c;
  c.channels = {2, 2, 2, 2, 2};
  Rng rng(1);
  const Generator<float> gen(c, rng);
  const TensorF x = random_tensor({1, 3, 256, 512}, 2).cast<float>();
  const TensorF mask = half_mask(1, 256, 512).cast<float>();
  const TensorF out = generator_forward(gen, mul(x, concat_channels(concat_channels(mask, mask), mask)), mask);
  EXPECT_EQ(out.shape(), (Shape{1, 3, 256, 512}));
  EXPECT_LE(max_abs(out), 1.0);
}

TEST(Generator, IndivisibleSizeIsShapeError) {
  Rng rng(3);
  const Generator<float> gen(tiny_config(), rng);
  EXPECT_THROW(gen.predict(TensorF({1, 3, 8, 15}), TensorF({1, 1, 8, 15})), ShapeError);
}

TEST(Generator, InputValidation) {
  Rng rng(4);
  const Generator<double> gen(tiny_config(), rng);
  TensorD x({1, 3, 8, 16});
  TensorD mask = half_mask(1, 8, 16);
  mask[0] = 0.5;
  EXPECT_THROW(generator_forward(gen, x, mask), ParameterError);
  mask[0] = 0.0;
  x[0] = 1.5;
  EXPECT_THROW(generator_forward(gen, x, mask), ParameterError);
}

TEST(Generator, PasteKnownCompositing) {
  Rng rng(5);
  const Generator<double> gen(tiny_config(), rng);
  const TensorD mask = half_mask(2, 8, 16);
  const TensorD x = mul(random_tensor({2, 3, 8, 16}, 6), concat_channels(concat_channels(mask, mask), mask));
  const TensorD out = generator_forward(gen, x, mask);
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < 128; ++i) {
        EXPECT_EQ(out.plane(b, c)[i] * mask.plane(b, 0)[i], x.plane(b, c)[i] * mask.plane(b, 0)[i]);
      }
    }
  }
}

TEST(Generator, ShiftCommutation) {
  for (std::optional<PeGroup> group : {std::optional<PeGroup>{}, std::optional<PeGroup>{PeGroup::AP}}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      GeneratorConfig c = tiny_config();
      c.channels = {4, 6, 6};
      c.pe_group = group;
      Rng rng(seed);
      Generator<double> gen(c, rng);
      perturb(gen, seed + 100);
      const Generator<float> g32 = gen.cast<float>();
      const TensorF x = random_tensor({1, 3, 8, 32}, seed + 200).cast<float>();
      const TensorF mask = half_mask(1, 8, 32).cast<float>();
      double worst = 0.0;
      for (long k = 4; k < 32; k += 4) {
        const TensorF a = g32.predict(circular_shift_azimuth(x, k), circular_shift_azimuth(mask, k));
        const TensorF b = circular_shift_azimuth(g32.predict(x, mask), k);
        worst = std::max(worst, max_abs_diff(a, b));
      }
      EXPECT_LT(worst, 1e-4) << "seed " << seed;
    }
  }
}

TEST(Generator, ZeroPaddingBreaksShiftCommutation) {
  GeneratorConfig c = tiny_config(PadMode::CircularAzimuth);
  c.channels = {4, 6, 6};
  Rng rng(7);
  Generator<double> cyl(c, rng);
  perturb(cyl, 8);
  c.pad_mode = PadMode::ZeroBoth;
  Rng rng2(7);
  Generator<double> zero(c, rng2);
  perturb(zero, 8);
  const TensorD x = random_tensor({1, 3, 8, 32}, 9);
  const TensorD mask = half_mask(1, 8, 32);
  auto deviation = [&](const Generator<double>& g) {
    return max_abs_diff(g.predict(circular_shift_azimuth(x, 8), circular_shift_azimuth(mask, 8)),
                        circular_shift_azimuth(g.predict(x, mask), 8));
  };
  EXPECT_GT(deviation(zero), 10.0 * std::max(deviation(cyl), 1e-12));
}

TEST(Generator, ConstantAzimuthSeamlessness) {
  for (PeGroup group : {PeGroup::AP, PeGroup::RP}) {
    GeneratorConfig c = tiny_config(PadMode::CircularAzimuth, group);
    c.channels = {4, 6, 6};
    Rng rng(10);
    Generator<double> gen(c, rng);
    perturb(gen, 11);
    const TensorD x = test::azimuth_constant({1, 3, 8, 16}, 12);
    TensorD mask({1, 1, 8, 16});
    for (std::size_t w = 0; w < 16; ++w) mask(0, 0, 2, w) = mask(0, 0, 5, w) = 1.0;
    const TensorF out = gen.cast<float>().predict(x.cast<float>(), mask.cast<float>());
    EXPECT_LT(test::azimuth_spread(out), 1e-5);
  }
}

TEST(Generator, EndToEndFiniteDifferences) {
  Rng rng(13);
  Generator<double> gen(tiny_config(), rng);
  perturb(gen, 14);
  const TensorD x = random_tensor({1, 3, 8, 16}, 15);
  const TensorD mask = half_mask(1, 8, 16);
  const TensorD go = random_tensor({1, 3, 8, 16}, 16);
  GeneratorCache<double> cache;
  gen.predict(x, mask, &cache);
  auto grads = gen.backward(cache, go);

  const auto fx = [&](const TensorD& xi) { return test::dot(gen.predict(xi, mask), go); };
  EXPECT_LT(test::max_relative_error(grads.image, test::numeric_gradient(fx, x)), 1e-5);

  std::vector<TensorD*> analytic;
  grads.params.for_each([&](const std::string&, TensorD& t) { analytic.push_back(&t); });
  std::size_t i = 0;
  gen.params().for_each([&](const std::string& name, TensorD& p) {
    const TensorD base = p;
    const auto f = [&](const TensorD& v) {
      p = v;
      const double r = test::dot(gen.predict(x, mask), go);
      p = base;
      return r;
    };
    EXPECT_LT(test::max_relative_error(*analytic[i++], test::numeric_gradient(f, base)), 1e-5) << name;
  });
}

TEST(Generator, ParameterNamesAndCounts) {
  Rng rng(17);
  const Generator<float> gen(tiny_config(), rng);
  std::vector<std::string> names;
  std::size_t total = 0;
  gen.params().for_each([&](const std::string& n, const TensorF& t) {
    names.push_back(n);
    total += t.size();
  });
  EXPECT_EQ(names.front(), "enc0.pe.weight");
  EXPECT_EQ(names.back(), "head.bias");
  EXPECT_EQ(total, gen.params().parameter_count());
  EXPECT_EQ(gen.params().zeros_like().parameter_count(), total);
}

TEST(SpectralNorm, Identity) {
  const TensorD eye({3, 3, 1, 1}, std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1});
  Rng rng(18);
  SpectralNormState st = make_spectral_state(3, rng);
  SpectralNormResult r;
  const TensorD out = spectral_normalize(eye, st, 1, &r);
  EXPECT_NEAR(r.sigma, 1.0, 1e-6);
  EXPECT_LT(max_abs_diff(out, eye), 1e-6);
}

TEST(SpectralNorm, Diagonal) {
  const TensorD d({2, 2, 1, 1}, std::vector<double>{3, 0, 0, 1});
  Rng rng(19);
  SpectralNormState st = make_spectral_state(2, rng);
  SpectralNormResult r;
  const TensorD out = spectral_normalize(d, st, 50, &r);
  EXPECT_NEAR(r.sigma, 3.0, 1e-4);
  EXPECT_NEAR(largest_singular_value(out), 1.0, 1e-4);
}

TEST(SpectralNorm, ZeroMatrix) {
  Rng rng(20);
  SpectralNormState st = make_spectral_state(2, rng);
  SpectralNormResult r;
  const TensorD out = spectral_normalize(TensorD({2, 3, 1, 1}), st, 5, &r);
  EXPECT_EQ(r.sigma, 1.0);
  EXPECT_EQ(max_abs(out), 0.0);
}

TEST(SpectralNorm, MatchesSvdOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TensorD w = random_tensor({8, 8, 1, 1}, 21 + seed);
    Rng rng(seed);
    SpectralNormState st = make_spectral_state(8, rng);
    SpectralNormResult r;
    spectral_normalize(w, st, 50, &r);
    EXPECT_NEAR(r.sigma, largest_singular_value(w), 0.01 * largest_singular_value(w));
  }
}

TEST(SpectralNorm, EstimateIsMonotone) {
  const TensorD w = random_tensor({6, 10, 1, 1}, 30);
  std::vector<double> flat = w.values();
  Rng rng(31);
  SpectralNormState st = make_spectral_state(6, rng);
  double prev = 0.0;
  for (int it = 0; it < 30; ++it) {
    const double s = spectral_estimate(flat, 6, 10, st, 1).sigma;
    EXPECT_GE(s, prev - 1e-8);
    prev = s;
  }
  EXPECT_LE(prev, largest_singular_value(w) + 1e-9);
}

TEST(Discriminator, ShapeDeterminismAndLipschitz) {
  DiscriminatorConfig c;
  c.channels = {4, 8};
  Rng rng(32);
  Discriminator<double> a(c, rng);
  Discriminator<double> b = a;
  const TensorD x = random_tensor({2, 3, 16, 32}, 33);
  DiscriminatorCache<double> cache;
  const TensorD sa = a.forward(x, c.eval_iterations, &cache);
  EXPECT_EQ(sa.shape(), (Shape{2, 1, 4, 8}));
  EXPECT_EQ(b.forward(x, c.eval_iterations), sa);
  for (const TensorD& w : cache.normalized) EXPECT_LE(largest_singular_value(w), 1.0 + 1e-3);
}

TEST(Discriminator, FiniteDifferencesWithFrozenPowerIteration) {
  DiscriminatorConfig c;
  c.channels = {3};
  Rng rng(34);
  Discriminator<double> disc(c, rng);
  const TensorD x = random_tensor({1, 3, 8, 8}, 35);
  DiscriminatorCache<double> cache;
  const TensorD scores = disc.forward(x, 3, &cache);
  const TensorD go = random_tensor(scores.shape(), 36);
  const auto grads = disc.backward(cache, go);

  // Forward with sigma = u^T W v for the cached u, v.
  auto frozen = [&](const std::vector<ConvLayer<double>>& layers, const TensorD& in) {
    TensorD h = in;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      ConvLayer<double> l = layers[i];
      const auto& sn = cache.sn[i];
      const std::size_t rows = l.weight.shape().n, cols = l.weight.size() / rows;
      double sigma = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t q = 0; q < cols; ++q) sigma += sn.u[r] * l.weight[r * cols + q] * sn.v[q];
      }
      l.weight = scale(l.weight, 1.0 / sigma);
      h = conv2d_forward(h, l);
      if (i + 1 < layers.size()) h = leaky_relu(h, 0.2);
    }
    return test::dot(h, go);
  };
  const auto fx = [&](const TensorD& xi) { return frozen(disc.layers(), xi); };
  EXPECT_LT(test::max_relative_error(grads.input, test::numeric_gradient(fx, x)), 1e-6);
  for (std::size_t i = 0; i < disc.layers().size(); ++i) {
    const auto fw = [&](const TensorD& w) {
      auto layers = disc.layers();
      layers[i].weight = w;
      return frozen(layers, x);
    };
    EXPECT_LT(test::max_relative_error(grads.layers[i].weight, test::numeric_gradient(fw, disc.layers()[i].weight)),
              1e-6);
  }
}
