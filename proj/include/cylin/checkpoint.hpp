#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>

#include "cylin/config.hpp"
#include "cylin/net.hpp"

namespace cylin {

// A checkpoint is a directory:
//   manifest.txt        run configuration, step, and the parameter list
//   gen/<name>.cylt     one file per generator parameter
//   disc/<name>.cylt    discriminator weights and power-iteration vectors
//
// Writes go to a sibling temporary directory that replaces the old one only
// once complete, so an interrupted write leaves the previous checkpoint.

struct Checkpoint {
  RunConfig config;
  std::size_t step = 0;
  Generator<float> generator;
  std::optional<Discriminator<float>> discriminator;
};

void save_checkpoint(const std::filesystem::path& dir, const RunConfig& config, std::size_t step,
                     const Generator<float>& generator, const Discriminator<float>* discriminator);

/// Architecture or shape mismatches are ConfigErrors.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace cylin
