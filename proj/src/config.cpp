#include "simplex/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace simplex {

namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" +
                      std::string(v) + "'");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(v) + "'");
}

std::filesystem::path to_path(std::string_view v, const std::filesystem::path& base) {
  std::filesystem::path p{std::string(v)};
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal();
}

// Rethrows parse errors from enum/number helpers with the key attached.
template <typename Fn>
auto keyed(std::string_view key, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    if (msg.rfind(std::string(key), 0) == 0) throw;
    throw ConfigError(std::string(key) + ": " + msg);
  }
}

using Setter = std::function<void(ExperimentConfig&, std::string_view, const std::filesystem::path&)>;

struct KeySpec {
  ConfigKey doc;
  Setter set;
};

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = [] {
    std::vector<KeySpec> s;
    auto add = [&](std::string_view name, std::string_view def, std::string_view help,
                   Setter fn) { s.push_back({{name, def, help}, std::move(fn)}); };

    add("data.train", "", "training interactions file", [](auto& c, auto v, auto& b) {
      c.train_path = to_path(v, b);
    });
    add("data.test", "", "test interactions file (held-out users in strong_generalization mode)",
        [](auto& c, auto v, auto& b) { c.test_path = to_path(v, b); });
    add("data.valid", "none", "optional validation file; replaces the holdout split",
        [](auto& c, auto v, auto& b) { c.valid_path = v == "none" ? std::filesystem::path{} : to_path(v, b); });
    add("data.heldout_history", "none", "histories of held-out users (strong_generalization)",
        [](auto& c, auto v, auto& b) {
          c.heldout_history_path = v == "none" ? std::filesystem::path{} : to_path(v, b);
        });
    add("data.validation_fraction", "0.1", "share of each user's train items held out for early stopping",
        [](auto& c, auto v, auto&) { c.validation_fraction = to_double("data.validation_fraction", v); });

    add("model.aggregation", "average_pooling", "average_pooling | self_attention | user_attention",
        [](auto& c, auto v, auto&) {
          c.model.encoder.aggregation = keyed("model.aggregation", [&] { return parse_aggregation(v); });
        });
    add("model.g", "0.5", "fusion gate in [0, 1]; 1 = matrix factorization",
        [](auto& c, auto v, auto&) { c.model.encoder.g = to_double("model.g", v); });
    add("model.similarity", "auto", "cosine | dot | auto (cosine for ccl/phl, dot otherwise)",
        [](auto& c, auto v, auto&) {
          if (v == "auto") {
            c.similarity.reset();
          } else {
            c.similarity = keyed("model.similarity", [&] { return parse_similarity(v); });
          }
        });
    add("model.cosine_eps", "1e-12", "norm clamp in cosine similarity",
        [](auto& c, auto v, auto&) { c.model.encoder.cosine_eps = to_double("model.cosine_eps", v); });
    add("model.dim", "64", "embedding dimension",
        [](auto& c, auto v, auto&) { c.model.dim = to_uint("model.dim", v); });
    add("model.history_len", "20", "history window K",
        [](auto& c, auto v, auto&) { c.model.history_len = to_uint("model.history_len", v); });
    add("model.exclude_target_from_history", "false",
        "drop the target positive from its own history during training",
        [](auto& c, auto v, auto&) {
          c.model.exclude_target_from_history = to_bool("model.exclude_target_from_history", v);
        });
    add("model.init_std", "0.01", "std of the Gaussian initialization",
        [](auto& c, auto v, auto&) { c.model.init_std = to_double("model.init_std", v); });

    add("loss.kind", "", "ccl | bpr | bce | sce | phl | mse", [](auto& c, auto v, auto&) {
      c.loss.kind = keyed("loss.kind", [&] { return parse_loss_kind(v); });
    });
    add("loss.margin", "0.9", "ccl cosine margin in [0, 1]; phl distance margin",
        [](auto& c, auto v, auto&) { c.loss.margin = to_double("loss.margin", v); });
    add("loss.negative_weight", "150", "ccl weight w of the negative term",
        [](auto& c, auto v, auto&) { c.loss.negative_weight = to_double("loss.negative_weight", v); });

    add("sampler.num_negatives", "100", "negatives per positive pair",
        [](auto& c, auto v, auto&) { c.sampler.num_negatives = to_uint("sampler.num_negatives", v); });
    add("sampler.exclude_train_positives", "true", "resample negatives that hit train positives",
        [](auto& c, auto v, auto&) {
          c.sampler.exclude_train_positives = to_bool("sampler.exclude_train_positives", v);
        });
    add("sampler.max_rejection_retries", "64", "bounded redraws per negative",
        [](auto& c, auto v, auto&) {
          c.sampler.max_rejection_retries = to_uint("sampler.max_rejection_retries", v);
        });
    add("sampler.seed", "2021", "seed for init, shuffling, negatives and the holdout split",
        [](auto& c, auto v, auto&) { c.sampler.seed = to_uint("sampler.seed", v); });

    add("train.learning_rate", "1e-4", "Adam learning rate",
        [](auto& c, auto v, auto&) { c.train.learning_rate = to_double("train.learning_rate", v); });
    add("train.l2_reg", "0", "L2 weight on embedding tables",
        [](auto& c, auto v, auto&) { c.train.l2_reg = to_double("train.l2_reg", v); });
    add("train.batch_size", "1024", "positive pairs per step",
        [](auto& c, auto v, auto&) { c.train.batch_size = to_uint("train.batch_size", v); });
    add("train.max_epochs", "100", "epoch budget",
        [](auto& c, auto v, auto&) { c.train.max_epochs = to_uint("train.max_epochs", v); });
    add("train.early_stop_patience", "10", "evaluations without improvement before stopping",
        [](auto& c, auto v, auto&) {
          c.train.early_stop_patience = to_uint("train.early_stop_patience", v);
        });
    add("train.eval_every", "1", "epochs between validation passes",
        [](auto& c, auto v, auto&) { c.train.eval_every = to_uint("train.eval_every", v); });
    add("train.mode", "transductive", "transductive | strong_generalization",
        [](auto& c, auto v, auto&) {
          c.train.mode = keyed("train.mode", [&] { return parse_train_mode(v); });
        });
    add("train.threads", "1", "worker threads (1 = fully deterministic)",
        [](auto& c, auto v, auto&) {
          c.train.threads = static_cast<unsigned>(to_uint("train.threads", v));
        });
    add("train.log", "none", "training log path (default <output.dir>/train_log.jsonl)",
        [](auto& c, auto v, auto& b) { c.log_path = v == "none" ? std::filesystem::path{} : to_path(v, b); });

    add("eval.ks", "20,50", "comma-separated cutoffs",
        [](auto& c, auto v, auto&) { c.train.eval_ks = keyed("eval.ks", [&] { return parse_k_list(v); }); });
    add("output.dir", "output", "directory for checkpoints and logs",
        [](auto& c, auto v, auto& b) { c.output_dir = to_path(v, b); });
    return s;
  }();
  return specs;
}

const KeySpec* find_key(std::string_view name) {
  for (const auto& spec : key_specs()) {
    if (spec.doc.name == name) return &spec;
  }
  return nullptr;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& s : key_specs()) out.push_back(s.doc);
    return out;
  }();
  return keys;
}

std::vector<std::size_t> parse_k_list(std::string_view text) {
  std::vector<std::size_t> ks;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    auto part = trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
    if (part.empty()) throw ConfigError("empty entry in K list '" + std::string(text) + "'");
    auto k = to_uint("K", part);
    if (k == 0) throw ConfigError("K must be positive");
    ks.push_back(k);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return ks;
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value,
                   const std::filesystem::path& base_dir) {
  const KeySpec* spec = find_key(key);
  if (!spec) throw ConfigError("unknown config key '" + std::string(key) + "'");
  spec->set(cfg, trim(value), base_dir);
}

EncoderConfig ExperimentConfig::encoder() const {
  EncoderConfig enc = model.encoder;
  enc.similarity = similarity.value_or(default_similarity(loss.kind));
  return enc;
}

std::filesystem::path ExperimentConfig::resolved_log_path() const {
  return log_path.empty() ? output_dir / "train_log.jsonl" : log_path;
}

void ExperimentConfig::validate() const {
  model.validate();
  loss.validate();
  sampler.validate();
  train.validate();
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("data.validation_fraction must be in [0, 1)");
  }
  auto must_exist = [](std::string_view key, const std::filesystem::path& p) {
    if (!p.empty() && !std::filesystem::exists(p)) {
      throw ConfigError(std::string(key) + ": file not found: " + p.string());
    }
  };
  must_exist("data.train", train_path);
  must_exist("data.test", test_path);
  must_exist("data.valid", valid_path);
  must_exist("data.heldout_history", heldout_history_path);
  if (train.mode == TrainMode::strong_generalization) {
    if (heldout_history_path.empty()) {
      throw ConfigError("data.heldout_history is required in strong_generalization mode");
    }
    if (model.encoder.g != 0.0) throw ConfigError("model.g must be 0 in strong_generalization mode");
    if (model.encoder.aggregation == Aggregation::user_attention) {
      throw ConfigError("model.aggregation cannot be user_attention in strong_generalization mode");
    }
  }
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                              std::string_view source) {
  ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    auto where = [&] { return std::string(source) + ":" + std::to_string(line_no) + ": "; };
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(where() + "expected 'section.key = value'");
    }
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (!find_key(key)) throw ConfigError(where() + "unknown config key '" + std::string(key) + "'");
    if (!seen.insert(std::string(key)).second) {
      throw ConfigError(where() + "duplicate config key '" + std::string(key) + "'");
    }
    try {
      apply_setting(cfg, key, value, base_dir);
    } catch (const ConfigError& e) {
      throw ConfigError(where() + e.what());
    }
  }
  for (const auto& spec : key_specs()) {
    if (spec.doc.default_value.empty() && !seen.count(spec.doc.name)) {
      throw ConfigError(std::string(source) + ": missing required key '" +
                        std::string(spec.doc.name) + "'");
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path(), path.string());
}

}  // namespace simplex
