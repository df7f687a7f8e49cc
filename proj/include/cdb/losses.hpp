#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cdb/matrix.hpp"

namespace cdb {

enum class LossKind { ce, focal, cdb_w_ce, cdb_w_fl, inv_freq_ce };

struct LossSpec {
  LossKind kind = LossKind::ce;
  double gamma = 1.0;                 // focusing parameter of the focal family
  std::vector<double> class_weights;  // required by cdb_* and inv_freq_ce

  bool weighted() const {
    return kind == LossKind::cdb_w_ce || kind == LossKind::cdb_w_fl ||
           kind == LossKind::inv_freq_ce;
  }
  bool focal_family() const {
    return kind == LossKind::focal || kind == LossKind::cdb_w_fl;
  }
};

const char* to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

// Softmax outputs for a batch. Rows sum to 1; probabilities are clamped to
// [1e-12, 1 - 1e-12] at the point of use so logs stay finite.
struct BatchProbs {
  Matrix probs;             // batch x classes
  std::vector<int> labels;  // true class per row

  std::size_t size() const { return labels.size(); }
  std::size_t num_classes() const { return probs.cols; }
};

struct LossValues {
  std::vector<double> per_sample;
  double mean = 0.0;
};

// Per-sample loss values and their arithmetic mean.
//   ce:         -log p_c
//   focal:      -(1-p_c)^gamma log p_c
//   cdb_w_ce:   -w_c log p_c
//   cdb_w_fl:   -w_c (1-p_c)^gamma log p_c
//   inv_freq_ce: same shape as cdb_w_ce with inverse-frequency weights
LossValues loss_forward(const LossSpec& spec, const BatchProbs& batch);

// Gradient of the mean loss with respect to the logits that produced the
// batch probabilities. Matches central finite differences of loss_forward.
Matrix loss_backward(const LossSpec& spec, const BatchProbs& batch);

// Inverse-class-frequency weights normalized to average 1:
// w_c = (1/M_c) * N / sum_c' (1/M_c').
std::vector<double> inv_freq_weights(const std::vector<std::size_t>& class_counts);

}  // namespace cdb
