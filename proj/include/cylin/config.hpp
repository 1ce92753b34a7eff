#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cylin/data.hpp"
#include "cylin/loss.hpp"
#include "cylin/net.hpp"

namespace cylin {

struct TrainConfig {
  double lr_gen = 1e-4;
  double lr_disc = 1e-3;
  std::size_t batch = 2;
  double lambda_gen = 1.0;
  double lambda_adv = 1e-2;
  std::size_t steps = 200;
  std::uint64_t seed = 0;
  bool adversarial = false;
  AdversarialLoss adv_loss = AdversarialLoss::Wasserstein;
  std::size_t log_every = 50;
  std::size_t checkpoint_every = 0;  // 0: only the final checkpoint

  void validate() const;
};

struct DataConfig {
  SyntheticPanoramaSpec base;
  std::size_t count = 32;
  std::size_t val_count = 4;

  void validate() const;
};

/// Everything a training run depends on.
struct RunConfig {
  TrainConfig train;
  DataConfig data;
  GeneratorConfig gen;
  DiscriminatorConfig disc;
  std::filesystem::path out_dir = "run";

  void validate() const;
  /// Canonical `key = value` lines; parse_config(to_lines()) round-trips.
  std::vector<std::string> to_lines() const;
};

/// Raw `key = value` pairs. Blank lines and `#` comments are skipped;
/// duplicate keys and lines without '=' are ConfigErrors.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Applies key/value pairs over the defaults. Unknown keys are ConfigErrors.
RunConfig config_from_pairs(const std::map<std::string, std::string>& pairs);

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

std::string to_string(const RunConfig& config);

}  // namespace cylin
