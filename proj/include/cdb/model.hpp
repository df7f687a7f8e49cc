#pragma once

#include <string>
#include <vector>

#include "cdb/dataset.hpp"
#include "cdb/losses.hpp"
#include "cdb/matrix.hpp"
#include "cdb/rng.hpp"

namespace cdb {

// Softmax classifier (hidden_dim == 0) or one-hidden-layer rectifier MLP,
// with optional per-class positive output scales (learnable weight scaling).
struct MlpModel {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;  // 0 = multinomial logistic regression
  std::size_t num_classes = 0;

  Matrix w1;               // hidden x input (empty when hidden_dim == 0)
  std::vector<double> b1;  // hidden
  Matrix w2;               // classes x (hidden or input)
  std::vector<double> b2;  // classes
  std::vector<double> classifier_scales;  // empty unless LWS; all > 0

  bool has_hidden() const { return hidden_dim > 0; }
  bool has_scales() const { return !classifier_scales.empty(); }
};

// Gaussian init with std sqrt(2 / fan_in), zero biases.
MlpModel make_mlp(std::size_t input_dim, std::size_t hidden_dim,
                  std::size_t num_classes, Rng& rng);

// Re-draws only the classifier head (w2, b2), leaving w1/b1 untouched.
void reinit_classifier(MlpModel& model, Rng& rng);

// Activations cached by forward for the backward pass.
struct ForwardCache {
  Matrix input;       // batch x input_dim
  Matrix pre_hidden;  // batch x hidden (pre-rectifier; empty when H == 0)
  Matrix hidden;      // batch x hidden (post-rectifier; empty when H == 0)
  Matrix raw_logits;  // batch x classes, before classifier scales
  Matrix probs;       // batch x classes, softmax of (scaled) logits
};

// Forward pass with max-subtracted softmax.
ForwardCache forward(const MlpModel& model, const Matrix& batch);

struct ModelGradients {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
  std::vector<double> scales;  // dL/ds_c, sized only when the model has scales
};

// Backprop from dL/d(logits) (as produced by loss_backward) to parameters.
ModelGradients backward(const MlpModel& model, const ForwardCache& cache,
                        const Matrix& logit_grad);

// Argmax predictions over a whole dataset; ties break to the lowest index.
std::vector<int> predict(const MlpModel& model, const LabeledDataset& dataset);

// Softmax probabilities over a whole dataset.
Matrix predict_probs(const MlpModel& model, const LabeledDataset& dataset);

// Exact text round-trip (hexfloat) with a small manifest header.
void save_checkpoint(const MlpModel& model, const std::string& path,
                     std::uint64_t seed, const std::string& config_hash);
MlpModel load_checkpoint(const std::string& path, std::uint64_t* seed = nullptr,
                         std::string* config_hash = nullptr);

}  // namespace cdb
