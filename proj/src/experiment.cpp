#include "simplex/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "simplex/checkpoint.hpp"

namespace simplex {

namespace {

using nlohmann::json;

bool any_nonempty(const ItemLists& lists) {
  return std::any_of(lists.begin(), lists.end(), [](const auto& l) { return !l.empty(); });
}

json metrics_value(const MetricReport& report) {
  json j;
  j["users"] = report.num_eval_users;
  j["metrics"] = json::array();
  for (std::size_t i = 0; i < report.ks.size(); ++i) {
    const auto& v = report.values[i];
    j["metrics"].push_back({{"k", report.ks[i]},
                            {"recall", v.recall},
                            {"ndcg", v.ndcg},
                            {"precision", v.precision},
                            {"f1", v.f1}});
  }
  return j;
}

json config_value(const ExperimentConfig& cfg) {
  const auto enc = cfg.encoder();
  return {{"event", "config"},
          {"aggregation", to_string(enc.aggregation)},
          {"g", enc.g},
          {"similarity", to_string(enc.similarity)},
          {"dim", cfg.model.dim},
          {"history_len", cfg.model.history_len},
          {"exclude_target_from_history", cfg.model.exclude_target_from_history},
          {"loss", to_string(cfg.loss.kind)},
          {"margin", cfg.loss.margin},
          {"negative_weight", cfg.loss.negative_weight},
          {"num_negatives", cfg.sampler.num_negatives},
          {"exclude_train_positives", cfg.sampler.exclude_train_positives},
          {"seed", cfg.sampler.seed},
          {"learning_rate", cfg.train.learning_rate},
          {"l2_reg", cfg.train.l2_reg},
          {"batch_size", cfg.train.batch_size},
          {"max_epochs", cfg.train.max_epochs},
          {"mode", to_string(cfg.train.mode)}};
}

std::vector<std::size_t> ks_with_selection(const TrainConfig& cfg) {
  std::vector<std::size_t> ks = cfg.eval_ks;
  if (std::find(ks.begin(), ks.end(), kSelectionK) == ks.end()) ks.push_back(kSelectionK);
  return ks;
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& cfg) {
  PreparedData data;
  if (cfg.train.mode == TrainMode::strong_generalization) {
    data.full = load_interactions(cfg.train_path, {});
    data.heldout = load_heldout_users(cfg.heldout_history_path, cfg.test_path, data.full);
  } else {
    data.full = load_interactions(cfg.train_path, cfg.test_path);
  }

  if (!cfg.valid_path.empty()) {
    data.fit = data.full;
    data.valid_pos = load_split(cfg.valid_path, data.full);
  } else if (cfg.validation_fraction > 0.0) {
    auto split = split_validation(data.full, cfg.validation_fraction, cfg.sampler.seed);
    data.fit = std::move(split.train);
    data.valid_pos = std::move(split.valid_pos);
  } else {
    data.fit = data.full;
    data.valid_pos.assign(data.full.num_users, {});
  }
  data.has_valid = any_nonempty(data.valid_pos);
  return data;
}

ModelConfig resolved_model(const ExperimentConfig& cfg) {
  ModelConfig model = cfg.model;
  model.encoder = cfg.encoder();
  return model;
}

std::optional<MetricReport> evaluate_test(const ModelParams<float>& params,
                                          const ModelConfig& model, const PreparedData& data,
                                          std::span<const std::size_t> ks, unsigned threads) {
  if (data.heldout) {
    if (!any_nonempty(data.heldout->test_pos)) return std::nullopt;
    return evaluate_heldout(params, model, *data.heldout, ks, threads);
  }
  if (!any_nonempty(data.full.test_pos)) return std::nullopt;
  HistoryTable ht = build_histories(data.full, model.history_len);
  EvalUsers users{ht, data.full.train_pos, data.full.test_pos, true};
  return evaluate(params, model.encoder, users, ks, threads);
}

RunResult run_training(const ExperimentConfig& cfg, const PreparedData& data,
                       const std::function<void(const EpochRecord&)>& on_epoch) {
  const ModelConfig model = resolved_model(cfg);
  HistoryTable ht = build_histories(data.fit, model.history_len);
  RunResult run;
  run.train = train(data.fit, ht, data.has_valid ? &data.valid_pos : nullptr, model, cfg.loss,
                    cfg.sampler, cfg.train, on_epoch);
  run.test = evaluate_test(run.train.best, model, data, ks_with_selection(cfg.train),
                           cfg.train.threads);
  return run;
}

std::string metrics_json(const MetricReport& report) { return metrics_value(report).dump(); }

std::string epoch_json(const EpochRecord& rec) {
  json j{{"event", "epoch"},
         {"epoch", rec.epoch},
         {"loss", rec.mean_loss},
         {"best_epoch", rec.best_epoch},
         {"best_recall@20", rec.best_recall}};
  if (rec.valid) j["valid"] = metrics_value(*rec.valid);
  return j.dump();
}

RunResult train_command(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  PreparedData data = prepare_data(cfg);
  std::filesystem::create_directories(cfg.output_dir);
  const auto log_path = cfg.resolved_log_path();
  if (log_path.has_parent_path()) std::filesystem::create_directories(log_path.parent_path());
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw Error("cannot write training log " + log_path.string());
  log << config_value(cfg).dump() << '\n';

  out << "users=" << data.fit.num_users << " items=" << data.fit.num_items
      << " train_pairs=" << data.fit.num_train_pairs() << " valid="
      << (data.has_valid ? "yes" : "no") << '\n';
  RunResult run = run_training(cfg, data, [&](const EpochRecord& rec) {
    log << epoch_json(rec) << '\n';
    out << "epoch " << rec.epoch << " loss=" << std::setprecision(6) << rec.mean_loss;
    if (rec.valid) out << " valid_recall@20=" << rec.valid->at(kSelectionK).recall;
    out << '\n';
  });

  const ModelConfig model = resolved_model(cfg);
  save_checkpoint(cfg.output_dir / "best.ckpt", {model.encoder, model.history_len, run.train.best});
  save_checkpoint(cfg.output_dir / "final.ckpt",
                  {model.encoder, model.history_len, run.train.final});

  json summary{{"event", "summary"},
               {"best_epoch", run.train.best_epoch},
               {"epochs_run", run.train.log.size()},
               {"stopped_early", run.train.stopped_early}};
  log << summary.dump() << '\n';
  if (run.test) {
    json test = metrics_value(*run.test);
    test["event"] = "test";
    log << test.dump() << '\n';
  }
  if (!log) throw Error("error while writing " + log_path.string());

  const EpochRecord* last_valid = nullptr;
  for (const auto& rec : run.train.log) {
    if (rec.valid && rec.epoch == run.train.best_epoch) last_valid = &rec;
  }
  if (last_valid) {
    out << "validation (best epoch " << run.train.best_epoch << ")\n"
        << format_report(*last_valid->valid);
  }
  if (run.test) out << "test\n" << format_report(*run.test);
  return run;
}

std::string_view sweep_key(std::string_view axis) {
  if (axis == "loss_kind") return "loss.kind";
  if (axis == "num_negatives") return "sampler.num_negatives";
  if (axis == "g") return "model.g";
  if (axis == "w") return "loss.negative_weight";
  if (axis == "aggregation") return "model.aggregation";
  throw ConfigError("unknown sweep axis '" + std::string(axis) +
                    "' (expected loss_kind, num_negatives, g, w or aggregation)");
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, std::string_view axis,
                                const std::vector<std::string>& values) {
  const auto key = sweep_key(axis);
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<ExperimentConfig> configs;
  for (const auto& v : values) {
    ExperimentConfig c = cfg;
    apply_setting(c, key, v);
    c.validate();
    configs.push_back(std::move(c));
  }
  // Only the encoder/loss/sampler change along an axis; the data is shared.
  PreparedData data = prepare_data(cfg);
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) {
    rows.push_back({values[i], run_training(configs[i], data)});
  }
  return rows;
}

std::string format_sweep_table(std::string_view axis, const std::vector<SweepRow>& rows,
                               std::span<const std::size_t> ks, char sep) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{std::string(axis), "best_epoch", "valid_recall@20"};
  for (auto k : ks) {
    for (const char* m : {"recall", "ndcg"}) {
      header.push_back(std::string("test_") + m + "@" + std::to_string(k));
    }
  }
  cells.push_back(header);
  auto fmt = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v;
    return s.str();
  };
  for (const auto& row : rows) {
    std::vector<std::string> line{row.value, std::to_string(row.run.train.best_epoch)};
    line.push_back(row.run.train.log.empty() ? "-" : fmt(row.run.train.log.back().best_recall));
    for (auto k : ks) {
      if (row.run.test) {
        line.push_back(fmt(row.run.test->at(k).recall));
        line.push_back(fmt(row.run.test->at(k).ndcg));
      } else {
        line.push_back("-");
        line.push_back("-");
      }
    }
    cells.push_back(line);
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }
  std::ostringstream out;
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (sep == ' ') {
        if (c > 0) out << "  ";
        out << std::left << std::setw(static_cast<int>(width[c])) << line[c];
      } else {
        if (c > 0) out << sep;
        out << line[c];
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace simplex
