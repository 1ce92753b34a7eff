// cylinpaint: training, outpainting and probing of cylinder-convolution
// panorama generators.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "cylin/checkpoint.hpp"
#include "cylin/config.hpp"
#include "cylin/data.hpp"
#include "cylin/image_io.hpp"
#include "cylin/metrics.hpp"
#include "cylin/pos_enc.hpp"
#include "cylin/probe.hpp"
#include "cylin/train.hpp"

namespace fs = std::filesystem;
using namespace cylin;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

void write_plane_pgm(const fs::path& path, const TensorD& t, std::size_t c, double lo, double hi) {
  const auto grey = plane_to_grey(t.plane(0, c), lo, hi);
  write_pgm(path, t.shape().w, t.shape().h, grey);
}

int cmd_train(const fs::path& config_path, const std::string& out_override, bool quiet) {
  RunConfig config = load_config(config_path);
  if (!out_override.empty()) config.out_dir = out_override;
  SyntheticPanoramaSpec base = config.data.base;
  const Dataset data = make_synthetic_dataset(base, config.data.count, config.data.val_count);
  TrainOptions options;
  if (!quiet) {
    options.on_eval = [](const EvalRow& r) {
      std::fprintf(stderr, "step %6zu  val_l1 %.5f  seam %.4f  psnr %.3f  ssim %.4f\n", r.step, r.l1, r.seam, r.psnr,
                   r.ssim);
    };
  }
  const TrainResult result = train(config, data, options);
  std::cout << "final_train_l1 " << format_number(result.final_train_l1) << "\n";
  std::cout << "wrote " << (config.out_dir / "metrics.csv").string() << "\n";
  return 0;
}

std::vector<std::string> gen_lines(const RunConfig& c) {
  std::vector<std::string> out;
  for (const auto& l : c.to_lines()) {
    if (l.starts_with("gen.") && !l.starts_with("gen.paste_known")) out.push_back(l);
  }
  return out;
}

int cmd_outpaint(const fs::path& ckpt_dir, const fs::path& in, const fs::path& gt, const fs::path& out,
                 const fs::path& config_path, const std::string& mask_text) {
  Checkpoint ckpt = load_checkpoint(ckpt_dir);
  if (!config_path.empty()) {
    const RunConfig expected = load_config(config_path);
    if (gen_lines(expected) != gen_lines(ckpt.config)) {
      throw ConfigError("checkpoint generator architecture differs from " + config_path.string());
    }
  }
  const MaskSpec mask = mask_text.empty() ? ckpt.config.data.base.mask : MaskSpec::parse(mask_text);
  const TensorF image = image_to_tensor(read_ppm(in));
  std::optional<TensorF> truth;
  if (!gt.empty()) truth = image_to_tensor(read_ppm(gt));
  const OutpaintResult r = outpaint(ckpt.generator, image, mask, truth ? &*truth : nullptr);
  write_ppm(out, tensor_to_image(r.completed));
  std::cout << "seam " << format_number(r.seam) << "\n";
  if (r.psnr) std::cout << "psnr " << format_number(*r.psnr) << "\nssim " << format_number(*r.ssim) << "\n";
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int cmd_gen_spe(std::size_t h, std::size_t w, std::size_t az, std::size_t pol, const std::string& mode,
                const std::string& group, const fs::path& out) {
  const SpeVolume spe = build_spe(h, w, az, pol, parse_spe_mode(mode));
  TensorD data = spe.data;
  if (!group.empty()) data = select_group<double>(spe, parse_pe_group(group));
  fs::create_directories(out);
  write_cylt(out / "spe.cylt", data);
  for (std::size_t c = 0; c < data.shape().c; ++c) {
    char name[32];
    std::snprintf(name, sizeof name, "spe_c%02zu.pgm", c);
    write_plane_pgm(out / name, data, c, -1.0, 1.0);
  }
  std::cout << "channels " << data.shape().c << "\nwrote " << (out / "spe.cylt").string() << "\n";
  return 0;
}

Generator<double> probe_generator(const fs::path& ckpt_dir, const fs::path& config_path, std::uint64_t seed) {
  if (!ckpt_dir.empty()) return load_checkpoint(ckpt_dir).generator.cast<double>();
  GeneratorConfig gc = config_path.empty() ? GeneratorConfig{} : load_config(config_path).gen;
  Rng rng(seed);
  return Generator<double>(gc, rng);
}

int cmd_probe_influence(const fs::path& ckpt_dir, const fs::path& config_path, std::uint64_t seed, std::size_t h,
                        std::size_t w, std::size_t th, std::size_t tw, const fs::path& out) {
  const Generator<double> gen = probe_generator(ckpt_dir, config_path, seed);
  Rng rng(seed + 1);
  TensorD input = rng_uniform<double>(rng, {1, gen.config().image_channels + 1, h, w}, -1.0, 1.0);
  for (std::size_t i = 0; i < h * w; ++i) input.plane(0, gen.config().image_channels)[i] = 1.0;
  const auto im = influence_map(GeneratorProbe<double>{gen}, input, {th, tw});
  fs::create_directories(out);
  write_cylt(out / "influence.cylt", im.values);
  write_plane_pgm(out / "influence.pgm", im.values, 0, 0.0, max_abs(im.values));
  std::cout << "wraparound_continuity " << format_number(wraparound_continuity(im)) << "\n";
  std::cout << "seam_jump " << format_number(seam_jump(im)) << "\n";
  return 0;
}

int cmd_probe_lines(std::size_t layers, std::size_t channels, std::size_t kernel, std::size_t h, std::size_t w,
                    const std::string& pad, std::uint64_t seed, const fs::path& out) {
  Rng rng(seed);
  LayerStack<double> stack;
  stack.activation = LayerStack<double>::Activation::Elu;
  for (std::size_t i = 0; i < layers; ++i) {
    ConvGeometry g;
    g.in_channels = channels;
    g.out_channels = channels;
    g.kernel_h = g.kernel_w = kernel;
    g.pad_mode = parse_pad_mode(pad);
    stack.layers.push_back(ConvLayer<double>::random(g, rng, 1.0));
  }
  const TensorD input({1, channels, h, w}, 1.0);
  const auto outs = stack.forward_all(input);
  std::string csv = "layer,azimuth_line_max,polar_line_max\n";
  for (std::size_t i = 0; i < outs.size(); ++i) {
    double az = 0.0, pol = 0.0;
    for (double v : line_pattern_stat(outs[i], Axis::Azimuth)) az = std::max(az, v);
    for (double v : line_pattern_stat(outs[i], Axis::Polar)) pol = std::max(pol, v);
    csv += std::to_string(i + 1) + "," + format_number(az) + "," + format_number(pol) + "\n";
  }
  fs::create_directories(out);
  write_text(out / "lines.csv", csv);
  const TensorD grid = grid_pattern(outs.back());
  write_cylt(out / "grid.cylt", grid);
  write_plane_pgm(out / "grid.pgm", grid, 0, 0.0, max_abs(grid));
  std::cout << csv;
  return 0;
}

int cmd_classify(const fs::path& ckpt_dir, double tau, const fs::path& out) {
  const Checkpoint ckpt = load_checkpoint(ckpt_dir);
  std::string csv = "param,horizontal,vertical,hplusv,other\n";
  ckpt.generator.params().for_each([&](const std::string& name, const Tensor<float>& t) {
    if (!name.ends_with(".weight") || name.find(".pe.") != std::string::npos) return;
    if (t.shape().h < 2 || t.shape().w < 2) return;
    const KernelCensus c = classify_weight(t, tau);
    csv += name + "," + std::to_string(c.horizontal) + "," + std::to_string(c.vertical) + "," +
           std::to_string(c.both) + "," + std::to_string(c.other) + "\n";
  });
  if (!out.empty()) write_text(out, csv);
  std::cout << csv;
  return 0;
}

int cmd_metrics(const fs::path& a, const fs::path& b) {
  const TensorF ta = image_to_tensor(read_ppm(a));
  const TensorF tb = image_to_tensor(read_ppm(b));
  std::cout << "psnr " << format_number(psnr(ta, tb)) << "\n";
  std::cout << "ssim " << format_number(ssim(ta, tb)) << "\n";
  std::cout << "seam_a " << format_number(seam_metric(ta)) << "\n";
  std::cout << "seam_b " << format_number(seam_metric(tb)) << "\n";
  return 0;
}

int cmd_synth(const std::string& family, std::uint64_t seed, std::size_t h, std::size_t w, std::size_t freq,
              const std::string& mask, const fs::path& out) {
  SyntheticPanoramaSpec spec;
  spec.family = parse_synth_family(family);
  spec.seed = seed;
  spec.height = h;
  spec.width = w;
  spec.frequency = freq;
  spec.mask = MaskSpec::parse(mask);
  const PanoSample s = synth_panorama(spec);
  write_ppm(out, tensor_to_image(s.image));
  fs::path cylt = out;
  cylt.replace_extension(".cylt");
  write_cylt(cylt, s.image);
  std::cout << "seam " << format_number(seam_metric(s.image)) << "\nwrote " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cylinpaint: 360-degree panorama outpainting with cylinder convolutions"};
  app.require_subcommand(1);

  struct {
    std::string config, out;
    bool quiet = false;
  } tr;
  auto* train_cmd = app.add_subcommand("train", "train a generator from a config file");
  train_cmd->add_option("--config", tr.config, "key = value config file")->required();
  train_cmd->add_option("--out", tr.out, "override train.out");
  train_cmd->add_flag("--quiet", tr.quiet, "no progress on stderr");

  struct {
    std::string ckpt, in, gt, out = "outpaint.ppm", config, mask;
  } op;
  auto* outpaint_cmd = app.add_subcommand("outpaint", "complete a panorama with a trained checkpoint");
  outpaint_cmd->add_option("--ckpt", op.ckpt, "checkpoint directory")->required();
  outpaint_cmd->add_option("--in", op.in, "input P6 PPM")->required();
  outpaint_cmd->add_option("--gt", op.gt, "ground-truth P6 PPM");
  outpaint_cmd->add_option("--out", op.out, "output PPM")->capture_default_str();
  outpaint_cmd->add_option("--config", op.config, "config the checkpoint must match");
  outpaint_cmd->add_option("--mask", op.mask, "known fraction (defaults to the checkpoint's)");

  struct {
    std::size_t height = 64, width = 128, az = 4, pol = 4;
    std::string mode = "index", group, out = "spe";
  } sp;
  auto* spe_cmd = app.add_subcommand("gen-spe", "write a sinusoidal positional encoding volume");
  spe_cmd->add_option("--height", sp.height)->capture_default_str();
  spe_cmd->add_option("--width", sp.width)->capture_default_str();
  spe_cmd->add_option("--az-pairs", sp.az)->capture_default_str();
  spe_cmd->add_option("--pol-pairs", sp.pol)->capture_default_str();
  spe_cmd->add_option("--mode", sp.mode, "index|cyclic")->capture_default_str();
  spe_cmd->add_option("--group", sp.group, "RA|RP|AA|AP|ALL (default: the whole volume)");
  spe_cmd->add_option("--out", sp.out, "output directory")->capture_default_str();

  struct {
    std::string ckpt, config, out = "influence";
    std::uint64_t seed = 0;
    std::size_t height = 32, width = 64, th = 0, tw = 0;
  } in;
  auto* infl_cmd = app.add_subcommand("probe-influence", "influence map of one output pixel");
  infl_cmd->add_option("--ckpt", in.ckpt, "checkpoint directory (else a random generator)");
  infl_cmd->add_option("--config", in.config, "config for the random generator");
  infl_cmd->add_option("--seed", in.seed)->capture_default_str();
  infl_cmd->add_option("--height", in.height)->capture_default_str();
  infl_cmd->add_option("--width", in.width)->capture_default_str();
  infl_cmd->add_option("--target-h", in.th)->capture_default_str();
  infl_cmd->add_option("--target-w", in.tw)->capture_default_str();
  infl_cmd->add_option("--out", in.out, "output directory")->capture_default_str();

  struct {
    std::size_t layers = 5, channels = 4, kernel = 3, height = 32, width = 32;
    std::string pad = "zero", out = "lines";
    std::uint64_t seed = 0;
  } ln;
  auto* lines_cmd = app.add_subcommand("probe-lines", "line patterns of a random conv stack on constant input");
  lines_cmd->add_option("--layers", ln.layers)->capture_default_str();
  lines_cmd->add_option("--channels", ln.channels)->capture_default_str();
  lines_cmd->add_option("--kernel", ln.kernel)->capture_default_str();
  lines_cmd->add_option("--height", ln.height)->capture_default_str();
  lines_cmd->add_option("--width", ln.width)->capture_default_str();
  lines_cmd->add_option("--pad-mode", ln.pad, "zero|circular|circular_mirror")->capture_default_str();
  lines_cmd->add_option("--seed", ln.seed)->capture_default_str();
  lines_cmd->add_option("--out", ln.out, "output directory")->capture_default_str();

  struct {
    std::string ckpt, out;
    double tau = 0.1;
  } kc;
  auto* kern_cmd = app.add_subcommand("classify-kernels", "census of H/V/H+V kernels in a checkpoint");
  kern_cmd->add_option("--ckpt", kc.ckpt, "checkpoint directory")->required();
  kern_cmd->add_option("--tau", kc.tau)->capture_default_str();
  kern_cmd->add_option("--out", kc.out, "CSV output file");

  std::string ma, mb;
  auto* metrics_cmd = app.add_subcommand("metrics", "PSNR, SSIM and seam metric of two images");
  metrics_cmd->add_option("--a", ma)->required();
  metrics_cmd->add_option("--b", mb)->required();

  struct {
    std::string family = "stripes", mask = "1/2", out = "synth.ppm";
    std::uint64_t seed = 0;
    std::size_t height = 64, width = 128, frequency = 0;
  } sy;
  auto* synth_cmd = app.add_subcommand("synth", "synthesize a periodic panorama");
  synth_cmd->add_option("--family", sy.family, "stripes|fourier|horizon")->capture_default_str();
  synth_cmd->add_option("--seed", sy.seed)->capture_default_str();
  synth_cmd->add_option("--height", sy.height)->capture_default_str();
  synth_cmd->add_option("--width", sy.width)->capture_default_str();
  synth_cmd->add_option("--frequency", sy.frequency, "0 draws one from the seed")->capture_default_str();
  synth_cmd->add_option("--mask", sy.mask)->capture_default_str();
  synth_cmd->add_option("--out", sy.out, "output PPM (a .cylt copy is written alongside)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train_cmd) return cmd_train(tr.config, tr.out, tr.quiet);
    if (*outpaint_cmd) return cmd_outpaint(op.ckpt, op.in, op.gt, op.out, op.config, op.mask);
    if (*spe_cmd) return cmd_gen_spe(sp.height, sp.width, sp.az, sp.pol, sp.mode, sp.group, sp.out);
    if (*infl_cmd) return cmd_probe_influence(in.ckpt, in.config, in.seed, in.height, in.width, in.th, in.tw, in.out);
    if (*lines_cmd) {
      return cmd_probe_lines(ln.layers, ln.channels, ln.kernel, ln.height, ln.width, ln.pad, ln.seed, ln.out);
    }
    if (*kern_cmd) return cmd_classify(kc.ckpt, kc.tau, kc.out);
    if (*metrics_cmd) return cmd_metrics(ma, mb);
    if (*synth_cmd) return cmd_synth(sy.family, sy.seed, sy.height, sy.width, sy.frequency, sy.mask, sy.out);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
