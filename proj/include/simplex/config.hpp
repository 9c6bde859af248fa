#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simplex/loss.hpp"
#include "simplex/sampler.hpp"
#include "simplex/trainer.hpp"

namespace simplex {

// Everything one training run needs. Built from a flat `section.key = value`
// text file; `#` starts a comment. Relative paths resolve against the
// directory of the config file.
struct ExperimentConfig {
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::filesystem::path valid_path;            // optional
  std::filesystem::path heldout_history_path;  // strong generalization only
  double validation_fraction = 0.1;

  ModelConfig model;
  // Unset means "pick the loss's conventional similarity".
  std::optional<Similarity> similarity;
  LossConfig loss;
  SamplerConfig sampler;
  TrainConfig train;
  std::filesystem::path output_dir = "output";
  std::filesystem::path log_path;  // default: <output_dir>/train_log.jsonl

  // Encoder settings with the similarity resolved.
  EncoderConfig encoder() const;
  std::filesystem::path resolved_log_path() const;
  void validate() const;
};

struct ConfigKey {
  std::string_view name;
  std::string_view default_value;  // empty for required keys
  std::string_view help;
};

// Every accepted key, for documentation and `--help` output.
const std::vector<ConfigKey>& config_keys();

// Throws ConfigError naming the key (and line) for parse errors, unknown
// keys, duplicates and missing required keys.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {},
                              std::string_view source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

// Sets one key after parsing (used by sweeps). Same validation as parsing.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value,
                   const std::filesystem::path& base_dir = {});

std::vector<std::size_t> parse_k_list(std::string_view text);

}  // namespace simplex
