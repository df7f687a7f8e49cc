#include "cdb/difficulty.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cdb/errors.hpp"

namespace cdb {

ClassState initial_class_state(int num_classes) {
  ClassState state;
  state.accuracies.assign(num_classes, 0.0);
  state.difficulties.assign(num_classes, 1.0);
  state.correct_counts.assign(num_classes, 0);
  state.totals.assign(num_classes, 0);
  state.epoch_index = 0;
  return state;
}

ClassState class_accuracy(const std::vector<int>& predictions,
                          const LabeledDataset& truth, int epoch_index) {
  if (predictions.size() != truth.size()) {
    throw ConfigError("predictions length " + std::to_string(predictions.size()) +
                      " does not match dataset size " + std::to_string(truth.size()));
  }
  const int n = truth.num_classes;
  ClassState state;
  state.correct_counts.assign(n, 0);
  state.totals.assign(n, 0);
  state.epoch_index = epoch_index;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int label = truth.labels[i];
    ++state.totals[label];
    if (predictions[i] == label) {
      ++state.correct_counts[label];
    }
  }
  state.accuracies.resize(n);
  state.difficulties.resize(n);
  for (int c = 0; c < n; ++c) {
    if (state.totals[c] == 0) {
      throw ConfigError("class " + std::to_string(c) +
                        " has no samples in the difficulty set; it must be balanced and complete");
    }
    state.accuracies[c] =
        static_cast<double>(state.correct_counts[c]) / static_cast<double>(state.totals[c]);
    state.difficulties[c] = 1.0 - state.accuracies[c];
  }
  return state;
}

double bias(const ClassState& state, double epsilon) {
  if (state.num_classes() == 0) {
    throw ConfigError("bias needs at least one class");
  }
  if (epsilon <= 0.0) {
    throw DomainError("epsilon must be positive");
  }
  const auto [min_it, max_it] =
      std::minmax_element(state.accuracies.begin(), state.accuracies.end());
  return std::max(*max_it / (*min_it + epsilon) - 1.0, 0.0);
}

double tau(const TauSchedule& schedule, double bias_value) {
  if (schedule.kind == TauKind::fixed) {
    return schedule.fixed_value;
  }
  const double b_max = schedule.bias_max();
  if (bias_value < 0.0 || bias_value > b_max) {
    throw DomainError("bias " + std::to_string(bias_value) + " outside [0, " +
                      std::to_string(b_max) + "]");
  }
  switch (schedule.kind) {
    case TauKind::linear:
      return bias_value / b_max * schedule.t_max;
    case TauKind::polynomial:
      return std::pow(bias_value / b_max, schedule.poly_p) * schedule.t_max;
    case TauKind::logarithmic:
      // Printed with a leading minus sign in the source material, which would
      // make tau negative; the intended curve is positive and increasing.
      return schedule.t_max * std::log(bias_value + 1.0) / std::log(b_max + 1.0);
    case TauKind::sigmoidal:
      return schedule.t_max * (2.0 / (1.0 + std::exp(-bias_value)) - 1.0);
    case TauKind::fixed:
      break;
  }
  return schedule.fixed_value;
}

std::vector<double> class_weights(const ClassState& state, double tau_value) {
  if (tau_value < 0.0) {
    throw DomainError("tau must be non-negative");
  }
  std::vector<double> weights(state.num_classes());
  for (std::size_t c = 0; c < weights.size(); ++c) {
    // std::pow(0, 0) == 1, which is exactly the convention we need.
    weights[c] = std::pow(state.difficulties[c], tau_value);
  }
  return weights;
}

}  // namespace cdb
