#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cdb/dataset.hpp"
#include "cdb/difficulty.hpp"
#include "cdb/eval.hpp"
#include "cdb/losses.hpp"
#include "cdb/model.hpp"
#include "cdb/sampling.hpp"

namespace cdb {

enum class LrKind { constant, step, cosine };

struct LrSchedule {
  LrKind kind = LrKind::constant;
  std::vector<int> milestones;  // step only; strictly increasing, < epochs
  double factor = 0.1;          // step only
};

// Learning rate for a 0-based epoch index. The cosine form is the half
// cosine lr0 * (1 + cos(pi e / E)) / 2, so lr(0) = lr0 and lr(E) = 0.
double learning_rate_at(const LrSchedule& schedule, double base_lr, int epoch,
                        int total_epochs);

enum class Stage2Method { crt, lws };

struct Stage2Config {
  Stage2Method method = Stage2Method::crt;
  int epochs = 10;
  double lr = 0.01;
  LrSchedule lr_schedule;
  LossSpec loss;
  SamplerSpec sampler;
  TauSchedule tau;
};

struct TrainConfig {
  int epochs = 40;
  int batch_size = 64;
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  LrSchedule lr_schedule;
  std::size_t hidden_dim = 64;  // 0 = softmax regression
  LossSpec loss;
  SamplerSpec sampler;
  TauSchedule tau;
  std::uint64_t seed = 1;

  // Snapshot-time hard-instance tracking on the train set.
  bool log_hard_instances = false;
  double hard_threshold = 0.8;

  // Shot-group thresholds and head size for the final report.
  std::size_t many_threshold = 100;
  std::size_t few_threshold = 20;
  std::size_t head_k = 5;

  std::optional<Stage2Config> stage2;
};

struct DataSplits {
  LabeledDataset train;
  LabeledDataset validation;  // class-balanced difficulty set
  LabeledDataset test;
};

// Which parameters an SGD step may touch.
enum class UpdateScope { all, classifier_only, scales_only };

// Momentum buffers, one per parameter tensor.
struct SgdState {
  Matrix vw1;
  std::vector<double> vb1;
  Matrix vw2;
  std::vector<double> vb2;
  std::vector<double> vscales;

  explicit SgdState(const MlpModel& model);
};

struct EpochStats {
  double mean_loss = 0.0;  // over all samples drawn this epoch
  std::size_t steps = 0;
};

// One epoch of minibatch SGD with classical momentum and L2 weight decay
// over the given sample indices (consecutive chunks of batch_size).
// Classifier scales are exempt from weight decay. Throws TrainingError on a
// non-finite batch loss.
EpochStats train_epoch(MlpModel& model, SgdState& opt, const TrainConfig& config,
                       double lr, const LabeledDataset& train_set,
                       const LossSpec& loss_with_weights,
                       const std::vector<std::size_t>& indices,
                       UpdateScope scope = UpdateScope::all, int epoch_index = 0);

struct TrainedRun {
  MlpModel model;
  std::vector<std::string> log_lines;  // JSON-lines metric log
  MetricsReport test_metrics;
};

// Full dynamic-difficulty training loop: every tau.update_interval epochs,
// evaluate on the validation split, refresh bias, tau, class weights and the
// sampling distribution, then train. Epoch 0 runs unweighted/uniform.
TrainedRun run_training(const TrainConfig& config, const DataSplits& splits);

// Two-stage decoupled training. Stage 1 is run_training with the stage-1
// loss/sampler; stage 2 either retrains the classifier head from scratch
// (cRT: w1/b1 frozen, w2/b2 re-initialized) or learns per-class logit scales
// (LWS: all weights frozen, s_c trained from 1). Difficulty snapshots
// restart at stage-2 start.
TrainedRun run_decoupled(const TrainConfig& config, const DataSplits& splits);

}  // namespace cdb
