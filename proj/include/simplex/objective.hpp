#pragma once

#include <vector>

#include "simplex/encoder.hpp"
#include "simplex/loss.hpp"

namespace simplex {

// Mean per-pair loss over a batch plus d(mean)/d(score) in tape layout.
template <typename T>
struct BatchObjective {
  double mean_loss = 0.0;
  std::vector<T> dscores;
};

// Throws NumericError if any score or the loss is not finite.
template <typename T>
BatchObjective<T> batch_objective(const ForwardTape<T>& tape, const LossConfig& cfg);

// Forward pass plus loss, no gradients.
template <typename T>
double batch_loss(const TrainBatch& batch, const ModelParams<T>& params,
                  const EncoderConfig& enc, const LossConfig& loss);

}  // namespace simplex
