#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "simplex/batch.hpp"
#include "simplex/model.hpp"

namespace simplex {

// Result of pooling one user's history window.
template <typename T>
struct Aggregated {
  std::vector<T> pooled;   // p_u, d entries
  std::vector<T> weights;  // alpha_k per window slot, 0 on masked slots
  // tanh(W e_k + b) per window slot (K x d); attention modes only.
  std::vector<T> activations;
  std::size_t active = 0;  // number of unmasked slots
};

// p_u = sum_k I_k alpha_k e_k. Attention softmax runs over unmasked slots
// only. An all-masked window yields p_u = 0. `user_vec` is read only for
// user attention.
template <typename T>
Aggregated<T> aggregate(std::span<const Index> items, std::span<const std::uint8_t> mask,
                        const ModelParams<T>& params, const EncoderConfig& cfg,
                        std::span<const T> user_vec);

// h_u = g e_u + (1 - g) V p_u. Either input may be empty when its weight is 0.
template <typename T>
std::vector<T> fuse(std::span<const T> user_vec, std::span<const T> pooled,
                    const ModelParams<T>& params, const EncoderConfig& cfg);

template <typename T>
T norm2(std::span<const T> v);

template <typename T>
T dot(std::span<const T> a, std::span<const T> b);

// Cosine with each norm clamped at cosine_eps, or a plain dot product.
template <typename T>
T score(std::span<const T> h, std::span<const T> e, const EncoderConfig& cfg);

// Final user vector h_u for one user. `user_vec` may be empty when the
// configuration never reads e_u (g = 0 without user attention).
template <typename T>
std::vector<T> user_representation(std::span<const Index> items,
                                   std::span<const std::uint8_t> mask,
                                   std::span<const T> user_vec, const ModelParams<T>& params,
                                   const EncoderConfig& cfg);

template <typename T>
struct ExampleTape {
  Aggregated<T> agg;
  std::vector<T> fused;       // h_u
  T fused_norm{};             // ||h_u||
  std::vector<T> item_norms;  // ||e_t|| per target
};

// Intermediates of a batch forward pass, consumed by backward().
template <typename T>
struct ForwardTape {
  std::size_t batch_size = 0;
  std::size_t targets_per_example = 0;
  std::size_t window = 0;
  std::vector<ExampleTape<T>> examples;
  std::vector<T> scores;  // batch_size x targets_per_example

  std::span<const T> scores_of(std::size_t b) const {
    return {scores.data() + b * targets_per_example, targets_per_example};
  }
};

template <typename T>
ForwardTape<T> forward(const TrainBatch& batch, const ModelParams<T>& params,
                       const EncoderConfig& cfg, unsigned threads = 1);

// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(score) laid out
// like tape.scores. Parameters the configuration does not reach get nothing;
// the padding row never receives gradient. Throws Error when the tape does
// not belong to the batch.
template <typename T>
void backward(const TrainBatch& batch, const ForwardTape<T>& tape,
              std::span<const T> dscores, const ModelParams<T>& params,
              const EncoderConfig& cfg, ModelParams<T>& grads);

}  // namespace simplex
