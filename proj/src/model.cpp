#include "simplex/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "simplex/rng.hpp"

namespace simplex {

std::string_view to_string(Aggregation a) {
  switch (a) {
    case Aggregation::average_pooling: return "average_pooling";
    case Aggregation::self_attention: return "self_attention";
    case Aggregation::user_attention: return "user_attention";
  }
  return "?";
}

std::string_view to_string(Similarity s) {
  return s == Similarity::cosine ? "cosine" : "dot";
}

Aggregation parse_aggregation(std::string_view text) {
  for (Aggregation a : kAllAggregations) {
    if (text == to_string(a)) return a;
  }
  throw ConfigError("unknown aggregation '" + std::string(text) +
                    "' (expected average_pooling, self_attention or user_attention)");
}

Similarity parse_similarity(std::string_view text) {
  if (text == "cosine") return Similarity::cosine;
  if (text == "dot") return Similarity::dot;
  throw ConfigError("unknown similarity '" + std::string(text) + "' (expected cosine or dot)");
}

void EncoderConfig::validate() const {
  if (!(g >= 0.0 && g <= 1.0)) throw ConfigError("model.g must be in [0, 1]");
  if (!(cosine_eps > 0.0)) throw ConfigError("model.cosine_eps must be positive");
}

template <typename T>
bool ModelParams<T>::all_finite() const {
  for (const auto* t : tensors()) {
    for (T v : t->data) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

template struct ModelParams<float>;
template struct ModelParams<double>;

ModelParams<float> init_params(std::size_t num_users, std::size_t num_items, std::size_t dim,
                               std::uint64_t seed, double init_std) {
  if (dim == 0) throw ConfigError("embedding dimension must be at least 1");
  ModelParams<float> p(num_users, num_items, dim);
  std::mt19937_64 rng(derive_seed(seed, StreamTag::init));
  std::normal_distribution<double> normal(0.0, init_std);
  auto fill = [&](Matrix<float>& m, std::size_t rows) {
    for (std::size_t k = 0; k < rows * m.cols; ++k) m.data[k] = static_cast<float>(normal(rng));
  };
  fill(p.user_emb, p.user_emb.rows);
  fill(p.item_emb, num_items);  // padding row stays zero
  fill(p.W1, dim);
  fill(p.W2, dim);
  for (std::size_t r = 0; r < dim; ++r) p.V(r, r) = 1.0f;
  return p;
}

}  // namespace simplex
