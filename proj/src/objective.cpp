#include "simplex/objective.hpp"

#include <cmath>
#include <string>

namespace simplex {

template <typename T>
BatchObjective<T> batch_objective(const ForwardTape<T>& tape, const LossConfig& cfg) {
  BatchObjective<T> out;
  out.dscores.assign(tape.scores.size(), T{});
  if (tape.batch_size == 0) return out;

  const std::size_t width = tape.targets_per_example;
  const double inv_batch = 1.0 / static_cast<double>(tape.batch_size);
  std::vector<double> negs(width - 1);
  double total = 0.0;
  for (std::size_t b = 0; b < tape.batch_size; ++b) {
    auto s = tape.scores_of(b);
    for (std::size_t j = 1; j < width; ++j) negs[j - 1] = static_cast<double>(s[j]);
    const double pos = static_cast<double>(s[0]);
    if (!std::isfinite(pos)) throw NumericError("non-finite score in example " + std::to_string(b));
    LossOutput l = evaluate_loss(cfg, pos, negs);
    total += l.loss;
    out.dscores[b * width] = static_cast<T>(l.d_pos * inv_batch);
    for (std::size_t j = 1; j < width; ++j) {
      out.dscores[b * width + j] = static_cast<T>(l.d_negs[j - 1] * inv_batch);
    }
  }
  out.mean_loss = total * inv_batch;
  if (!std::isfinite(out.mean_loss)) throw NumericError("non-finite batch loss");
  return out;
}

template <typename T>
double batch_loss(const TrainBatch& batch, const ModelParams<T>& params,
                  const EncoderConfig& enc, const LossConfig& loss) {
  return batch_objective(forward(batch, params, enc), loss).mean_loss;
}

template BatchObjective<float> batch_objective<float>(const ForwardTape<float>&, const LossConfig&);
template BatchObjective<double> batch_objective<double>(const ForwardTape<double>&, const LossConfig&);
template double batch_loss<float>(const TrainBatch&, const ModelParams<float>&,
                                  const EncoderConfig&, const LossConfig&);
template double batch_loss<double>(const TrainBatch&, const ModelParams<double>&,
                                   const EncoderConfig&, const LossConfig&);

}  // namespace simplex
