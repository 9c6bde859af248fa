// simplex: train, evaluate, sweep and gradient-check SimpleX models.
//
// Exit codes: 0 success, 1 verification or evaluation failure, 2 usage,
// config or data error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "simplex/checkpoint.hpp"
#include "simplex/config.hpp"
#include "simplex/experiment.hpp"
#include "simplex/gradcheck.hpp"
#include "simplex/synthetic.hpp"

namespace fs = std::filesystem;
using namespace simplex;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// SIMPLEX_OUTPUT_DIR wins over output.dir; the default log path follows it.
void apply_overrides(ExperimentConfig& cfg, std::optional<unsigned> threads) {
  if (const char* dir = std::getenv("SIMPLEX_OUTPUT_DIR"); dir && *dir) cfg.output_dir = dir;
  if (threads) cfg.train.threads = *threads;
}

int cmd_train(const fs::path& config, std::optional<unsigned> threads) {
  ExperimentConfig cfg = load_config(config);
  apply_overrides(cfg, threads);
  train_command(cfg, std::cout);
  std::cout << "wrote " << (cfg.output_dir / "best.ckpt").string() << ", "
            << (cfg.output_dir / "final.ckpt").string() << ", "
            << cfg.resolved_log_path().string() << '\n';
  return 0;
}

int cmd_eval(const fs::path& ckpt_path, const fs::path& train_path, const fs::path& test_path,
             const std::string& k_text, const fs::path& out_path, const fs::path& heldout_history,
             unsigned threads) {
  const auto ks = parse_k_list(k_text);
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  ModelConfig model;
  model.encoder = ckpt.encoder;
  model.dim = ckpt.params.dim;
  model.history_len = ckpt.history_len;

  PreparedData data;
  if (heldout_history.empty()) {
    data.full = load_interactions(train_path, test_path);
  } else {
    data.full = load_interactions(train_path, {});
    data.heldout = load_heldout_users(heldout_history, test_path, data.full);
  }
  if (data.full.num_users != ckpt.params.num_users() ||
      data.full.num_items != ckpt.params.num_items()) {
    throw DataError("dimension mismatch: checkpoint has " +
                    std::to_string(ckpt.params.num_users()) + " users x " +
                    std::to_string(ckpt.params.num_items()) + " items, dataset has " +
                    std::to_string(data.full.num_users) + " x " +
                    std::to_string(data.full.num_items));
  }
  auto report = evaluate_test(ckpt.params, model, data, ks, threads);
  if (!report) {
    std::cerr << "error: no user in " << test_path.string() << " has test items\n";
    return kExitFailure;
  }
  std::cout << format_report(*report);
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw Error("cannot write " + out_path.string());
    out << metrics_json(*report) << '\n';
  }
  return 0;
}

int cmd_sweep(const fs::path& config, const std::string& axis,
              const std::vector<std::string>& values, std::optional<unsigned> threads) {
  ExperimentConfig cfg = load_config(config);
  apply_overrides(cfg, threads);
  cfg.validate();
  auto rows = run_sweep(cfg, axis, values);
  std::cout << format_sweep_table(axis, rows, cfg.train.eval_ks);
  fs::create_directories(cfg.output_dir);
  const auto tsv = cfg.output_dir / "sweep.tsv";
  std::ofstream out(tsv, std::ios::trunc);
  if (!out) throw Error("cannot write " + tsv.string());
  out << format_sweep_table(axis, rows, cfg.train.eval_ks, '\t');
  std::cout << "wrote " << tsv.string() << '\n';
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, const std::string& inject) {
  GradCheckOptions opts;
  opts.seed = seed;
  if (!inject.empty()) {
    std::size_t index = kTensorNames.size();
    for (std::size_t t = 0; t < kTensorNames.size(); ++t) {
      if (kTensorNames[t] == inject) index = t;
    }
    if (index == kTensorNames.size()) throw ConfigError("unknown tensor '" + inject + "'");
    opts.corrupt_analytic = [index](ModelParams<double>& g) {
      for (auto& v : g.tensors()[index]->data) v = v * 1.5 + 0.25;
    };
  }
  auto report = grad_check(opts);
  std::size_t failed = 0;
  for (const auto& c : report.cases) {
    std::cout << c.describe() << '\n';
    if (!c.passed) ++failed;
  }
  std::cout << report.cases.size() - failed << "/" << report.cases.size() << " passed\n";
  return report.passed() ? 0 : kExitFailure;
}

int cmd_make_toy(const fs::path& dir, std::size_t users, std::size_t items,
                 std::size_t heldout, std::uint64_t seed) {
  PlantedConfig cfg;
  cfg.num_users = users;
  cfg.num_items = items;
  cfg.num_heldout_users = heldout;
  cfg.seed = seed;
  cfg.max_items_per_user = std::min<std::size_t>(cfg.max_items_per_user, items);
  cfg.min_items_per_user = std::min(cfg.min_items_per_user, cfg.max_items_per_user);
  write_planted(generate_planted(cfg), dir);
  std::cout << "wrote planted dataset to " << dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SimpleX collaborative filtering: train, eval, sweep, gradcheck"};
  app.require_subcommand(1);

  std::optional<unsigned> threads;
  fs::path config;

  auto* train = app.add_subcommand("train", "train a model from a config file");
  train->add_option("config", config, "config file")->required();
  train->add_option("--threads", threads, "worker threads (1 = deterministic)");

  fs::path ckpt, train_path, test_path, out_path, heldout_history;
  std::string k_text = "20,50";
  unsigned eval_threads = 1;
  auto* eval = app.add_subcommand("eval", "full-ranking evaluation of a checkpoint");
  eval->add_option("checkpoint", ckpt)->required();
  eval->add_option("train", train_path, "training interactions (masked and used as history)")
      ->required();
  eval->add_option("test", test_path, "test interactions")->required();
  eval->add_option("--k", k_text, "comma-separated cutoffs")->capture_default_str();
  eval->add_option("--out", out_path, "write the report as JSON");
  eval->add_option("--heldout-history", heldout_history,
                   "histories of held-out users; `test` then lists their test items");
  eval->add_option("--threads", eval_threads);

  std::string axis;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "train once per value of one axis");
  sweep->add_option("config", config)->required();
  sweep->add_option("--axis", axis, "loss_kind | num_negatives | g | w | aggregation")
      ->required();
  sweep->add_option("--values", values, "values (space or comma separated)")
      ->required()
      ->delimiter(',');
  sweep->add_option("--threads", threads);

  std::uint64_t seed = GradCheckOptions{}.seed;
  std::string inject;
  auto* gradcheck = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients");
  gradcheck->add_option("--seed", seed)->capture_default_str();
  gradcheck->add_option("--inject-fault", inject, "corrupt one tensor's analytic gradient");

  fs::path toy_dir;
  std::size_t toy_users = 50, toy_items = 100, toy_heldout = 0;
  std::uint64_t toy_seed = 7;
  auto* toy = app.add_subcommand("make-toy", "write a planted low-rank dataset");
  toy->add_option("dir", toy_dir)->required();
  toy->add_option("--users", toy_users)->capture_default_str();
  toy->add_option("--items", toy_items)->capture_default_str();
  toy->add_option("--heldout-users", toy_heldout)->capture_default_str();
  toy->add_option("--seed", toy_seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) return cmd_train(config, threads);
    if (*eval) {
      return cmd_eval(ckpt, train_path, test_path, k_text, out_path, heldout_history,
                      eval_threads);
    }
    if (*sweep) return cmd_sweep(config, axis, values, threads);
    if (*gradcheck) return cmd_gradcheck(seed, inject);
    if (*toy) return cmd_make_toy(toy_dir, toy_users, toy_items, toy_heldout, toy_seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
