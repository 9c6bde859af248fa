#include "simplex/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "simplex/parallel.hpp"

namespace simplex {

template <typename T>
T dot(std::span<const T> a, std::span<const T> b) {
  T s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

template <typename T>
T norm2(std::span<const T> v) {
  return std::sqrt(dot(v, v));
}

template <typename T>
Aggregated<T> aggregate(std::span<const Index> items, std::span<const std::uint8_t> mask,
                        const ModelParams<T>& params, const EncoderConfig& cfg,
                        std::span<const T> user_vec) {
  const std::size_t d = params.dim;
  const std::size_t window = items.size();
  Aggregated<T> out;
  out.pooled.assign(d, T{});
  out.weights.assign(window, T{});
  for (std::size_t k = 0; k < window; ++k) out.active += mask[k] ? 1 : 0;
  if (out.active == 0) return out;

  if (cfg.aggregation == Aggregation::average_pooling) {
    const T w = T{1} / static_cast<T>(out.active);
    for (std::size_t k = 0; k < window; ++k) {
      if (mask[k]) out.weights[k] = w;
    }
  } else {
    const bool self = cfg.aggregation == Aggregation::self_attention;
    const Matrix<T>& W = self ? params.W1 : params.W2;
    std::span<const T> bias = self ? params.b1.row(0) : params.b2.row(0);
    std::span<const T> query = self ? params.q.row(0) : user_vec;

    out.activations.assign(window * d, T{});
    std::vector<T> beta(window, -std::numeric_limits<T>::infinity());
    T max_beta = -std::numeric_limits<T>::infinity();
    for (std::size_t k = 0; k < window; ++k) {
      if (!mask[k]) continue;
      auto e = params.item_emb.row(items[k]);
      T* act = out.activations.data() + k * d;
      for (std::size_t r = 0; r < d; ++r) {
        act[r] = std::tanh(dot<T>(W.row(r), e) + bias[r]);
      }
      beta[k] = dot<T>(query, {act, d});
      max_beta = std::max(max_beta, beta[k]);
    }
    T total{};
    for (std::size_t k = 0; k < window; ++k) {
      if (!mask[k]) continue;
      out.weights[k] = std::exp(beta[k] - max_beta);
      total += out.weights[k];
    }
    for (auto& w : out.weights) w /= total;
  }

  for (std::size_t k = 0; k < window; ++k) {
    if (!mask[k]) continue;
    auto e = params.item_emb.row(items[k]);
    for (std::size_t c = 0; c < d; ++c) out.pooled[c] += out.weights[k] * e[c];
  }
  return out;
}

template <typename T>
std::vector<T> fuse(std::span<const T> user_vec, std::span<const T> pooled,
                    const ModelParams<T>& params, const EncoderConfig& cfg) {
  const std::size_t d = params.dim;
  const T g = static_cast<T>(cfg.g);
  std::vector<T> h(d, T{});
  if (cfg.g > 0.0) {
    for (std::size_t c = 0; c < d; ++c) h[c] = g * user_vec[c];
  }
  if (cfg.g < 1.0) {
    for (std::size_t r = 0; r < d; ++r) {
      h[r] += (T{1} - g) * dot<T>(params.V.row(r), pooled);
    }
  }
  return h;
}

template <typename T>
T score(std::span<const T> h, std::span<const T> e, const EncoderConfig& cfg) {
  T s = dot(h, e);
  if (cfg.similarity == Similarity::dot) return s;
  const T eps = static_cast<T>(cfg.cosine_eps);
  return s / (std::max(norm2(h), eps) * std::max(norm2(e), eps));
}

template <typename T>
std::vector<T> user_representation(std::span<const Index> items,
                                   std::span<const std::uint8_t> mask,
                                   std::span<const T> user_vec, const ModelParams<T>& params,
                                   const EncoderConfig& cfg) {
  if (!cfg.uses_history()) return {user_vec.begin(), user_vec.end()};
  auto agg = aggregate(items, mask, params, cfg, user_vec);
  return fuse<T>(user_vec, agg.pooled, params, cfg);
}

template <typename T>
ForwardTape<T> forward(const TrainBatch& batch, const ModelParams<T>& params,
                       const EncoderConfig& cfg, unsigned threads) {
  ForwardTape<T> tape;
  tape.batch_size = batch.size();
  tape.targets_per_example = batch.targets_per_example();
  tape.window = batch.window;
  tape.examples.resize(batch.size());
  tape.scores.assign(batch.size() * tape.targets_per_example, T{});

  const T eps = static_cast<T>(cfg.cosine_eps);
  parallel_for(batch.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      auto& ex = tape.examples[b];
      std::span<const T> user_vec;
      if (cfg.uses_user_embedding()) user_vec = params.user_emb.row(batch.users[b]);

      if (cfg.uses_history()) {
        ex.agg = aggregate(batch.history(b), batch.mask(b), params, cfg, user_vec);
        ex.fused = fuse<T>(user_vec, ex.agg.pooled, params, cfg);
      } else {
        ex.fused.assign(user_vec.begin(), user_vec.end());
      }
      ex.fused_norm = norm2<T>(ex.fused);
      ex.item_norms.resize(tape.targets_per_example);

      for (std::size_t t = 0; t < tape.targets_per_example; ++t) {
        auto e = params.item_emb.row(batch.target(b, t));
        T s = dot<T>(ex.fused, e);
        ex.item_norms[t] = norm2(e);
        if (cfg.similarity == Similarity::cosine) {
          s /= std::max(ex.fused_norm, eps) * std::max(ex.item_norms[t], eps);
        }
        tape.scores[b * tape.targets_per_example + t] = s;
      }
    }
  });
  return tape;
}

template <typename T>
void backward(const TrainBatch& batch, const ForwardTape<T>& tape,
              std::span<const T> dscores, const ModelParams<T>& params,
              const EncoderConfig& cfg, ModelParams<T>& grads) {
  if (tape.batch_size != batch.size() ||
      tape.targets_per_example != batch.targets_per_example() ||
      tape.window != batch.window || dscores.size() != tape.scores.size()) {
    throw Error("backward: tape does not match batch");
  }

  const std::size_t d = params.dim;
  const T g = static_cast<T>(cfg.g);
  const T eps = static_cast<T>(cfg.cosine_eps);
  const bool cosine = cfg.similarity == Similarity::cosine;
  std::vector<T> dh(d);
  std::vector<T> dp(d);
  std::vector<T> dz(d);

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& ex = tape.examples[b];
    std::span<const T> h = ex.fused;
    std::fill(dh.begin(), dh.end(), T{});
    bool any = false;

    for (std::size_t t = 0; t < tape.targets_per_example; ++t) {
      const T ds = dscores[b * tape.targets_per_example + t];
      if (ds == T{}) continue;
      any = true;
      const Index item = batch.target(b, t);
      auto e = params.item_emb.row(item);
      auto ge = grads.item_emb.row(item);
      if (cosine) {
        const T hn = ex.fused_norm;
        const T en = ex.item_norms[t];
        const T denom = std::max(hn, eps) * std::max(en, eps);
        const T s = tape.scores[b * tape.targets_per_example + t];
        // d cos / dh = e / (|h||e|) - s h / |h|^2 while the norm is unclamped.
        const T h_corr = hn > eps ? s / (hn * hn) : T{};
        const T e_corr = en > eps ? s / (en * en) : T{};
        for (std::size_t c = 0; c < d; ++c) {
          dh[c] += ds * (e[c] / denom - h_corr * h[c]);
          ge[c] += ds * (h[c] / denom - e_corr * e[c]);
        }
      } else {
        for (std::size_t c = 0; c < d; ++c) {
          dh[c] += ds * e[c];
          ge[c] += ds * h[c];
        }
      }
    }
    if (!any) continue;

    const Index user = batch.users[b];
    if (cfg.g > 0.0) {
      auto gu = grads.user_emb.row(user);
      for (std::size_t c = 0; c < d; ++c) gu[c] += g * dh[c];
    }
    if (!cfg.uses_history() || ex.agg.active == 0) continue;

    // h = ... + (1 - g) V p
    const T keep = T{1} - g;
    std::fill(dp.begin(), dp.end(), T{});
    for (std::size_t r = 0; r < d; ++r) {
      const T coef = keep * dh[r];
      auto gv = grads.V.row(r);
      auto v = params.V.row(r);
      for (std::size_t c = 0; c < d; ++c) {
        gv[c] += coef * ex.agg.pooled[c];
        dp[c] += coef * v[c];
      }
    }

    auto items = batch.history(b);
    auto mask = batch.mask(b);
    for (std::size_t k = 0; k < batch.window; ++k) {
      if (!mask[k]) continue;
      auto gk = grads.item_emb.row(items[k]);
      for (std::size_t c = 0; c < d; ++c) gk[c] += ex.agg.weights[k] * dp[c];
    }
    if (cfg.aggregation == Aggregation::average_pooling) continue;

    // Softmax Jacobian: dbeta_k = alpha_k (dalpha_k - sum_j alpha_j dalpha_j).
    std::vector<T> dalpha(batch.window, T{});
    T mean{};
    for (std::size_t k = 0; k < batch.window; ++k) {
      if (!mask[k]) continue;
      dalpha[k] = dot<T>(params.item_emb.row(items[k]), dp);
      mean += ex.agg.weights[k] * dalpha[k];
    }

    const bool self = cfg.aggregation == Aggregation::self_attention;
    const Matrix<T>& W = self ? params.W1 : params.W2;
    Matrix<T>& gW = self ? grads.W1 : grads.W2;
    std::span<T> gbias = self ? grads.b1.row(0) : grads.b2.row(0);
    std::span<const T> query = self ? params.q.row(0) : params.user_emb.row(user);
    std::span<T> gquery = self ? grads.q.row(0) : grads.user_emb.row(user);

    for (std::size_t k = 0; k < batch.window; ++k) {
      if (!mask[k]) continue;
      const T dbeta = ex.agg.weights[k] * (dalpha[k] - mean);
      const T* act = ex.agg.activations.data() + k * d;
      auto e = params.item_emb.row(items[k]);
      auto gk = grads.item_emb.row(items[k]);
      for (std::size_t r = 0; r < d; ++r) {
        gquery[r] += dbeta * act[r];
        dz[r] = dbeta * query[r] * (T{1} - act[r] * act[r]);
        gbias[r] += dz[r];
        auto gw = gW.row(r);
        for (std::size_t c = 0; c < d; ++c) gw[c] += dz[r] * e[c];
      }
      for (std::size_t r = 0; r < d; ++r) {
        auto w = W.row(r);
        for (std::size_t c = 0; c < d; ++c) gk[c] += w[c] * dz[r];
      }
    }
  }
}

#define SIMPLEX_INSTANTIATE(T)                                                              \
  template T dot<T>(std::span<const T>, std::span<const T>);                               \
  template T norm2<T>(std::span<const T>);                                                 \
  template Aggregated<T> aggregate<T>(std::span<const Index>, std::span<const std::uint8_t>, \
                                      const ModelParams<T>&, const EncoderConfig&,          \
                                      std::span<const T>);                                  \
  template std::vector<T> fuse<T>(std::span<const T>, std::span<const T>,                  \
                                  const ModelParams<T>&, const EncoderConfig&);             \
  template T score<T>(std::span<const T>, std::span<const T>, const EncoderConfig&);       \
  template std::vector<T> user_representation<T>(                                          \
      std::span<const Index>, std::span<const std::uint8_t>, std::span<const T>,           \
      const ModelParams<T>&, const EncoderConfig&);                                         \
  template ForwardTape<T> forward<T>(const TrainBatch&, const ModelParams<T>&,             \
                                     const EncoderConfig&, unsigned);                       \
  template void backward<T>(const TrainBatch&, const ForwardTape<T>&, std::span<const T>,  \
                            const ModelParams<T>&, const EncoderConfig&, ModelParams<T>&);

SIMPLEX_INSTANTIATE(float)
SIMPLEX_INSTANTIATE(double)

#undef SIMPLEX_INSTANTIATE

}  // namespace simplex
