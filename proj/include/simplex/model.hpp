#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "simplex/types.hpp"

namespace simplex {

enum class Aggregation { average_pooling, self_attention, user_attention };
enum class Similarity { cosine, dot };

std::string_view to_string(Aggregation a);
std::string_view to_string(Similarity s);
Aggregation parse_aggregation(std::string_view text);
Similarity parse_similarity(std::string_view text);

inline constexpr std::array<Aggregation, 3> kAllAggregations = {
    Aggregation::average_pooling, Aggregation::self_attention, Aggregation::user_attention};

struct EncoderConfig {
  Aggregation aggregation = Aggregation::average_pooling;
  // Fusion gate: h_u = g * e_u + (1 - g) * V p_u.
  double g = 0.5;
  Similarity similarity = Similarity::cosine;
  double cosine_eps = 1e-12;

  bool uses_history() const { return g < 1.0; }
  bool uses_user_embedding() const {
    return g > 0.0 || (uses_history() && aggregation == Aggregation::user_attention);
  }
  void validate() const;
};

// Dense row-major matrix.
template <typename T>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}

  std::span<T> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const T> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::size_t size() const { return data.size(); }

  bool operator==(const Matrix&) const = default;
};

inline constexpr std::array<std::string_view, 8> kTensorNames = {
    "user_emb", "item_emb", "V", "q", "W1", "b1", "W2", "b2"};

// All learnable tensors. Gradients use the same type. item_emb carries one
// extra row (index num_items) for the padding token; it stays zero.
template <typename T>
struct ModelParams {
  std::size_t dim = 0;
  Matrix<T> user_emb;  // num_users x d
  Matrix<T> item_emb;  // (num_items + 1) x d
  Matrix<T> V;         // d x d
  Matrix<T> q;         // 1 x d
  Matrix<T> W1;        // d x d
  Matrix<T> b1;        // 1 x d
  Matrix<T> W2;        // d x d
  Matrix<T> b2;        // 1 x d

  ModelParams() = default;
  ModelParams(std::size_t num_users, std::size_t num_items, std::size_t d)
      : dim(d),
        user_emb(num_users, d),
        item_emb(num_items + 1, d),
        V(d, d),
        q(1, d),
        W1(d, d),
        b1(1, d),
        W2(d, d),
        b2(1, d) {}

  std::size_t num_users() const { return user_emb.rows; }
  std::size_t num_items() const { return item_emb.rows - 1; }
  Index padding_index() const { return static_cast<Index>(num_items()); }

  // Tensors in kTensorNames order.
  std::array<Matrix<T>*, 8> tensors() { return {&user_emb, &item_emb, &V, &q, &W1, &b1, &W2, &b2}; }
  std::array<const Matrix<T>*, 8> tensors() const {
    return {&user_emb, &item_emb, &V, &q, &W1, &b1, &W2, &b2};
  }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto* t : tensors()) n += t->size();
    return n;
  }

  void set_zero() {
    for (auto* t : tensors()) std::fill(t->data.begin(), t->data.end(), T{});
  }

  bool all_finite() const;

  bool operator==(const ModelParams&) const = default;
};

template <typename T>
ModelParams<T> zeros_like(const ModelParams<T>& p) {
  return ModelParams<T>(p.num_users(), p.num_items(), p.dim);
}

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& p) {
  ModelParams<To> out(p.num_users(), p.num_items(), p.dim);
  auto dst = out.tensors();
  auto src = p.tensors();
  for (std::size_t t = 0; t < dst.size(); ++t) {
    for (std::size_t k = 0; k < src[t]->size(); ++k) {
      dst[t]->data[k] = static_cast<To>(src[t]->data[k]);
    }
  }
  return out;
}

// Gaussian(0, init_std) embeddings and W1/W2, identity V, zero q/b1/b2,
// zero padding row.
ModelParams<float> init_params(std::size_t num_users, std::size_t num_items, std::size_t dim,
                               std::uint64_t seed, double init_std = 1e-2);

// Flattened views for numeric checks, in kTensorNames order.
template <typename T>
std::vector<T> flatten(const ModelParams<T>& p) {
  std::vector<T> out;
  out.reserve(p.total_size());
  for (const auto* t : p.tensors()) out.insert(out.end(), t->data.begin(), t->data.end());
  return out;
}

template <typename T>
void unflatten(std::span<const T> flat, ModelParams<T>& p) {
  std::size_t off = 0;
  for (auto* t : p.tensors()) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
              flat.begin() + static_cast<std::ptrdiff_t>(off + t->size()), t->data.begin());
    off += t->size();
  }
}

}  // namespace simplex
