#include "cylin/checkpoint.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace cylin {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFormat = "cylinpaint-checkpoint-1";

std::string shape_text(const Shape& s) {
  return std::to_string(s.n) + "x" + std::to_string(s.c) + "x" + std::to_string(s.h) + "x" + std::to_string(s.w);
}

void load_into(const fs::path& file, const std::string& name, Tensor<float>& dst) {
  if (!fs::exists(file)) throw ConfigError("checkpoint is missing parameter " + name);
  Tensor<float> t = read_cylt<float>(file);
  if (t.shape() != dst.shape()) {
    throw ConfigError("checkpoint parameter " + name + " has shape " + t.shape().str() + ", the architecture expects " +
                      dst.shape().str());
  }
  dst = std::move(t);
}

}  // namespace

void save_checkpoint(const fs::path& dir, const RunConfig& config, std::size_t step, const Generator<float>& generator,
                     const Discriminator<float>* discriminator) {
  const fs::path tmp = dir.string() + ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp / "gen");

  std::ostringstream manifest;
  manifest << "format = " << kFormat << "\n";
  manifest << "step = " << step << "\n";
  // The output directory is where the run wrote, not part of the model.
  for (const auto& line : config.to_lines()) {
    if (!line.starts_with("train.out ")) manifest << line << "\n";
  }

  generator.params().for_each([&](const std::string& name, const Tensor<float>& t) {
    write_cylt(tmp / "gen" / (name + ".cylt"), t);
    manifest << "gen." << name << ".shape = " << shape_text(t.shape()) << "\n";
  });
  if (discriminator) {
    fs::create_directories(tmp / "disc");
    Discriminator<float> copy = *discriminator;
    copy.for_each([&](const std::string& name, Tensor<float>& t) {
      write_cylt(tmp / "disc" / (name + ".cylt"), t);
      manifest << "disc." << name << ".shape = " << shape_text(t.shape()) << "\n";
    });
    for (std::size_t i = 0; i < copy.states().size(); ++i) {
      const auto& u = copy.states()[i].u;
      write_cylt(tmp / "disc" / ("sn" + std::to_string(i) + ".u.cylt"), TensorD({1, 1, 1, u.size()}, u));
    }
  }
  {
    std::ofstream out(tmp / "manifest.txt", std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write checkpoint manifest in " + tmp.string());
    out << manifest.str();
  }
  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

Checkpoint load_checkpoint(const fs::path& dir) {
  std::ifstream in(dir / "manifest.txt");
  if (!in) throw ConfigError("no checkpoint manifest in " + dir.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const auto pairs = parse_key_values(ss.str());

  std::map<std::string, std::string> config_pairs;
  std::size_t step = 0;
  std::size_t gen_count = 0, disc_count = 0;
  for (const auto& [k, v] : pairs) {
    if (k == "format") {
      if (v != kFormat) throw ConfigError("unsupported checkpoint format '" + v + "'");
    } else if (k == "step") {
      step = static_cast<std::size_t>(std::stoull(v));
    } else if (k.starts_with("gen.") && k.ends_with(".shape")) {
      ++gen_count;
    } else if (k.starts_with("disc.") && k.ends_with(".shape")) {
      ++disc_count;
    } else {
      config_pairs.emplace(k, v);
    }
  }
  if (!pairs.count("format")) throw ConfigError("checkpoint manifest lacks a format line");
  RunConfig config = config_from_pairs(config_pairs);

  Rng rng(0);
  Generator<float> gen(config.gen, rng);
  std::size_t expected = 0;
  gen.params().for_each([&](const std::string& name, Tensor<float>& t) {
    ++expected;
    const auto key = "gen." + name + ".shape";
    if (!pairs.count(key)) throw ConfigError("checkpoint does not list generator parameter " + name);
    load_into(dir / "gen" / (name + ".cylt"), name, t);
  });
  if (expected != gen_count) throw ConfigError("checkpoint lists parameters the architecture does not have");

  Checkpoint ckpt{config, step, std::move(gen), std::nullopt};
  if (disc_count > 0) {
    Discriminator<float> disc(config.disc, rng);
    std::size_t n = 0;
    disc.for_each([&](const std::string& name, Tensor<float>& t) {
      ++n;
      load_into(dir / "disc" / (name + ".cylt"), name, t);
    });
    if (n != disc_count) throw ConfigError("checkpoint discriminator does not match disc.* configuration");
    for (std::size_t i = 0; i < disc.states().size(); ++i) {
      const TensorD u = read_cylt<double>(dir / "disc" / ("sn" + std::to_string(i) + ".u.cylt"));
      if (u.size() != disc.states()[i].u.size()) throw ConfigError("checkpoint power-iteration vector mismatch");
      disc.states()[i].u = u.values();
    }
    ckpt.discriminator = std::move(disc);
  }
  return ckpt;
}

}  // namespace cylin
