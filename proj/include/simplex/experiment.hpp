#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "simplex/config.hpp"
#include "simplex/dataset.hpp"
#include "simplex/metrics.hpp"
#include "simplex/trainer.hpp"

namespace simplex {

// Datasets derived from one config.
struct PreparedData {
  InteractionDataset full;    // every training positive, plus test for transductive runs
  InteractionDataset fit;     // what the optimizer sees (full minus validation holdout)
  ItemLists valid_pos;        // per fit user; empty lists when nothing is held out
  bool has_valid = false;
  std::optional<HeldOutUsers> heldout;  // strong generalization test users
};

PreparedData prepare_data(const ExperimentConfig& cfg);

// Model settings with the similarity resolved from the loss.
ModelConfig resolved_model(const ExperimentConfig& cfg);

struct RunResult {
  TrainResult train;
  std::optional<MetricReport> test;  // best params on the test split
};

// Trains on `data.fit`, selects on validation, evaluates the best params on
// test. Writes nothing.
RunResult run_training(const ExperimentConfig& cfg, const PreparedData& data,
                       const std::function<void(const EpochRecord&)>& on_epoch = {});

// Test evaluation: full training histories, all training positives masked.
std::optional<MetricReport> evaluate_test(const ModelParams<float>& params,
                                          const ModelConfig& model, const PreparedData& data,
                                          std::span<const std::size_t> ks, unsigned threads);

// JSON encodings used by the log and `eval --out`.
std::string metrics_json(const MetricReport& report);
std::string epoch_json(const EpochRecord& rec);

// Full `train` command: trains, then writes best.ckpt, final.ckpt and the
// JSONL log. Progress goes to `out`.
RunResult train_command(const ExperimentConfig& cfg, std::ostream& out);

inline constexpr std::string_view kSweepAxes[] = {"loss_kind", "num_negatives", "g", "w",
                                                   "aggregation"};
// Config key changed by a sweep axis; throws ConfigError for unknown axes.
std::string_view sweep_key(std::string_view axis);

struct SweepRow {
  std::string value;
  RunResult run;
};

// One training run per value with otherwise identical config.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, std::string_view axis,
                                const std::vector<std::string>& values);
std::string format_sweep_table(std::string_view axis, const std::vector<SweepRow>& rows,
                               std::span<const std::size_t> ks, char sep = ' ');

}  // namespace simplex
