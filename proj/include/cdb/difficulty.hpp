#pragma once

#include <vector>

#include "cdb/dataset.hpp"

namespace cdb {

// Per-class accuracy/difficulty snapshot at one evaluation step.
// Value type: copyable across threads, no shared state.
struct ClassState {
  std::vector<double> accuracies;           // A_c in [0, 1]
  std::vector<double> difficulties;         // d_c = 1 - A_c
  std::vector<std::size_t> correct_counts;  // m_c
  std::vector<std::size_t> totals;          // M_c
  int epoch_index = 0;

  std::size_t num_classes() const { return accuracies.size(); }
};

// State used before the first snapshot exists: every class at difficulty 1,
// so the first epoch runs unweighted (w_c = 1^tau = 1) and samples uniformly.
ClassState initial_class_state(int num_classes);

enum class TauKind { fixed, linear, polynomial, logarithmic, sigmoidal };

struct TauSchedule {
  TauKind kind = TauKind::fixed;
  double fixed_value = 1.0;  // fixed only
  double t_max = 5.0;        // T_M, upper bound of tau
  double epsilon = 0.01;     // keeps bias finite and bounded
  int poly_p = 2;            // polynomial only, >= 2
  int update_interval = 1;   // snapshot cadence in epochs

  double bias_max() const { return 1.0 / epsilon - 1.0; }  // B_M
};

// Per-class accuracy of argmax predictions against truth. Every class must
// appear in truth (the difficulty set is balanced and complete).
ClassState class_accuracy(const std::vector<int>& predictions,
                          const LabeledDataset& truth, int epoch_index = 0);

// Performance bias: max(max_c A_c / (min_c A_c + epsilon) - 1, 0).
// Zero when accuracies are balanced; bounded by 1/epsilon - 1.
double bias(const ClassState& state, double epsilon);

// Focusing parameter for the given bias. All variants are non-decreasing in
// bias and map [0, B_M] into [0, T_M]; the sigmoidal variant saturates just
// below T_M at bias = B_M.
double tau(const TauSchedule& schedule, double bias_value);

// w_c = d_c^tau with the 0^0 = 1 convention, so tau = 0 gives all-ones.
std::vector<double> class_weights(const ClassState& state, double tau_value);

}  // namespace cdb
