#include "cdb/trainer.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "cdb/errors.hpp"
#include "cdb/rng.hpp"

namespace cdb {

namespace {

using nlohmann::json;

// Stable stream tags for per-purpose RNGs derived from the run seed.
constexpr std::uint64_t kInitStream = 0x01;
constexpr std::uint64_t kSamplerStream = 0x02;
constexpr std::uint64_t kStage2InitStream = 0x03;
constexpr std::uint64_t kStage2SamplerStream = 0x04;

void sgd_tensor(std::vector<double>& param, std::vector<double>& velocity,
                const std::vector<double>& grad, double lr, double momentum,
                double weight_decay) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i] + weight_decay * param[i];
    velocity[i] = momentum * velocity[i] + g;
    param[i] -= lr * velocity[i];
  }
}

// Per-stage knobs; stage 1 borrows them from TrainConfig directly.
struct StageParams {
  int epochs;
  double lr;
  LrSchedule lr_schedule;
  LossSpec loss;
  SamplerSpec sampler;
  TauSchedule tau;
};

void run_stage(MlpModel& model, const TrainConfig& config, const StageParams& stage,
               const DataSplits& splits, UpdateScope scope, std::uint64_t sampler_seed,
               std::vector<std::string>& log, int stage_tag) {
  const LabeledDataset& train = splits.train;
  const int num_classes = train.num_classes;
  if (splits.validation.num_classes != num_classes) {
    throw ConfigError("validation split does not cover the training class set");
  }

  // Static inverse-frequency weights; difficulty weights refresh per snapshot.
  std::vector<double> inv_freq;
  if (stage.loss.kind == LossKind::inv_freq_ce) {
    inv_freq = inv_freq_weights(train.class_counts);
  }

  const std::size_t epoch_size =
      stage.sampler.epoch_size > 0 ? stage.sampler.epoch_size : train.size();
  const ShotGroups groups = config.log_hard_instances
                                ? make_shot_groups(train.class_counts, config.many_threshold,
                                                   config.few_threshold)
                                : ShotGroups{};

  EpochSampler sampler(train, sampler_seed);
  ClassState state = initial_class_state(num_classes);
  double bias_value = 0.0;
  double tau_value = tau(stage.tau, bias_value);
  std::vector<double> weights = class_weights(state, tau_value);
  std::vector<double> distribution =
      class_distribution(stage.sampler, state, tau_value, train.class_counts);
  SgdState opt(model);

  // The per-class multiplier the loss actually applies next interval.
  auto actual_loss_weights = [&]() -> std::vector<double> {
    if (stage.loss.kind == LossKind::inv_freq_ce) return inv_freq;
    if (stage.loss.weighted()) return weights;
    return std::vector<double>(num_classes, 1.0);
  };

  auto log_snapshot = [&](int epoch) {
    const std::vector<double> loss_weights = actual_loss_weights();
    json j;
    j["type"] = "snapshot";
    j["stage"] = stage_tag;
    j["epoch"] = epoch;
    j["accuracy"] = state.accuracies;
    j["difficulty"] = state.difficulties;
    j["bias"] = bias_value;
    j["tau"] = tau_value;
    j["loss_weights"] = loss_weights;
    j["class_distribution"] = distribution;
    if (config.log_hard_instances) {
      std::vector<double> sample_weights(train.size());
      if (stage.loss.focal_family() && stage.loss.gamma != 0.0) {
        const Matrix probs = predict_probs(model, train);
        for (std::size_t i = 0; i < train.size(); ++i) {
          const double p = probs(i, train.labels[i]);
          sample_weights[i] = std::pow(1.0 - p, stage.loss.gamma);
        }
      } else {
        for (std::size_t i = 0; i < train.size(); ++i) {
          sample_weights[i] = loss_weights[train.labels[i]];
        }
      }
      const auto counts =
          hard_instance_counts(sample_weights, train.labels, groups, config.hard_threshold);
      const auto averages = hard_instance_averages(counts, groups);
      j["hard"] = {{"many", counts[0]},        {"medium", counts[1]},
                   {"few", counts[2]},         {"avg_many", averages[0]},
                   {"avg_medium", averages[1]}, {"avg_few", averages[2]}};
    }
    log.push_back(j.dump());
  };

  if (stage.epochs > 0) {
    log_snapshot(0);
  }

  for (int epoch = 0; epoch < stage.epochs; ++epoch) {
    if (epoch > 0 && epoch % stage.tau.update_interval == 0) {
      const std::vector<int> predictions = predict(model, splits.validation);
      state = class_accuracy(predictions, splits.validation, epoch);
      bias_value = bias(state, stage.tau.epsilon);
      tau_value = tau(stage.tau, bias_value);
      weights = class_weights(state, tau_value);
      distribution = class_distribution(stage.sampler, state, tau_value, train.class_counts);
      log_snapshot(epoch);
    }

    const double lr = learning_rate_at(stage.lr_schedule, stage.lr, epoch, stage.epochs);
    const std::vector<std::size_t> indices = sampler.draw(distribution, epoch_size);

    LossSpec spec = stage.loss;
    if (spec.weighted()) {
      spec.class_weights = actual_loss_weights();
    }
    const EpochStats stats =
        train_epoch(model, opt, config, lr, train, spec, indices, scope, epoch);

    json j;
    j["type"] = "epoch";
    j["stage"] = stage_tag;
    j["epoch"] = epoch;
    j["mean_loss"] = stats.mean_loss;
    j["lr"] = lr;
    j["steps"] = stats.steps;
    log.push_back(j.dump());
  }
}

MetricsReport final_report(const MlpModel& model, const TrainConfig& config,
                           const DataSplits& splits, std::vector<std::string>& log,
                           int stage_tag) {
  EvalOptions options;
  options.train_counts = splits.train.class_counts;
  options.many_threshold = config.many_threshold;
  options.few_threshold = config.few_threshold;
  options.head_k = config.head_k;
  const MetricsReport metrics = evaluate(model, splits.test, options);
  json j;
  j["type"] = "final";
  j["stage"] = stage_tag;
  j["metrics"] = json::parse(metrics_to_json(metrics));
  log.push_back(j.dump());
  return metrics;
}

void check_splits(const DataSplits& splits, std::vector<std::string>& log) {
  if (splits.train.size() == 0 || splits.validation.size() == 0 || splits.test.size() == 0) {
    throw ConfigError("train, validation, and test splits must be nonempty");
  }
  if (splits.train.ids == splits.validation.ids &&
      splits.train.labels == splits.validation.labels) {
    json j;
    j["type"] = "warning";
    j["message"] = "validation split is identical to the train split; "
                   "difficulty scores will overfit";
    log.push_back(j.dump());
  }
}

std::vector<std::string> meta_line() {
  json j;
  j["type"] = "meta";
  j["schema"] = 1;
  j["rng"] = kRngVersion;
  return {j.dump()};
}

}  // namespace

double learning_rate_at(const LrSchedule& schedule, double base_lr, int epoch,
                        int total_epochs) {
  switch (schedule.kind) {
    case LrKind::constant:
      return base_lr;
    case LrKind::step: {
      double lr = base_lr;
      for (int milestone : schedule.milestones) {
        if (epoch >= milestone) lr *= schedule.factor;
      }
      return lr;
    }
    case LrKind::cosine:
      return base_lr *
             (1.0 + std::cos(3.14159265358979323846 * epoch / total_epochs)) / 2.0;
  }
  return base_lr;
}

SgdState::SgdState(const MlpModel& model)
    : vw1(model.w1.rows, model.w1.cols),
      vb1(model.b1.size(), 0.0),
      vw2(model.w2.rows, model.w2.cols),
      vb2(model.b2.size(), 0.0),
      vscales(model.classifier_scales.size(), 0.0) {}

EpochStats train_epoch(MlpModel& model, SgdState& opt, const TrainConfig& config,
                       double lr, const LabeledDataset& train_set,
                       const LossSpec& loss_with_weights,
                       const std::vector<std::size_t>& indices, UpdateScope scope,
                       int epoch_index) {
  if (indices.empty()) {
    throw ConfigError("train_epoch needs a nonempty index sequence");
  }
  const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);
  const std::size_t dim = train_set.dim();

  EpochStats stats;
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, indices.size() - start);
    Matrix batch(count, dim);
    std::vector<int> labels(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t row = indices[start + i];
      std::copy(train_set.features.row(row), train_set.features.row(row) + dim,
                batch.row(i));
      labels[i] = train_set.labels[row];
    }

    const ForwardCache cache = forward(model, batch);
    const BatchProbs probs{cache.probs, std::move(labels)};
    const LossValues values = loss_forward(loss_with_weights, probs);
    if (!std::isfinite(values.mean)) {
      throw TrainingError("non-finite loss at epoch " + std::to_string(epoch_index) +
                          ", step " + std::to_string(stats.steps) + " (batch offset " +
                          std::to_string(start) + ")");
    }
    for (double v : values.per_sample) loss_sum += v;

    const Matrix logit_grad = loss_backward(loss_with_weights, probs);
    const ModelGradients grads = backward(model, cache, logit_grad);

    const bool update_features = scope == UpdateScope::all && model.has_hidden();
    const bool update_classifier = scope != UpdateScope::scales_only;
    if (update_features) {
      sgd_tensor(model.w1.data, opt.vw1.data, grads.w1.data, lr, config.momentum,
                 config.weight_decay);
      sgd_tensor(model.b1, opt.vb1, grads.b1, lr, config.momentum, config.weight_decay);
    }
    if (update_classifier) {
      sgd_tensor(model.w2.data, opt.vw2.data, grads.w2.data, lr, config.momentum,
                 config.weight_decay);
      sgd_tensor(model.b2, opt.vb2, grads.b2, lr, config.momentum, config.weight_decay);
    }
    if (scope == UpdateScope::scales_only) {
      // Scales carry no weight decay so an untouched class keeps s_c = 1.
      sgd_tensor(model.classifier_scales, opt.vscales, grads.scales, lr, config.momentum,
                 0.0);
    }
    ++stats.steps;
  }
  stats.mean_loss = loss_sum / static_cast<double>(indices.size());
  return stats;
}

TrainedRun run_training(const TrainConfig& config, const DataSplits& splits) {
  TrainedRun run;
  run.log_lines = meta_line();
  check_splits(splits, run.log_lines);

  Rng init_rng(derive_seed(config.seed, kInitStream));
  run.model = make_mlp(splits.train.dim(), config.hidden_dim, splits.train.num_classes,
                       init_rng);

  StageParams stage{config.epochs, config.lr,      config.lr_schedule,
                    config.loss,   config.sampler, config.tau};
  run_stage(run.model, config, stage, splits, UpdateScope::all,
            derive_seed(config.seed, kSamplerStream), run.log_lines, 1);
  run.test_metrics = final_report(run.model, config, splits, run.log_lines, 1);
  return run;
}

TrainedRun run_decoupled(const TrainConfig& config, const DataSplits& splits) {
  if (!config.stage2.has_value()) {
    throw ConfigError("run_decoupled needs a stage-2 configuration");
  }
  if (config.hidden_dim == 0) {
    throw ConfigError("decoupled training needs a hidden layer (nothing to decouple)");
  }
  TrainedRun run = run_training(config, splits);

  const Stage2Config& s2 = *config.stage2;
  if (s2.method == Stage2Method::crt) {
    Rng reinit_rng(derive_seed(config.seed, kStage2InitStream));
    reinit_classifier(run.model, reinit_rng);
  } else {
    run.model.classifier_scales.assign(run.model.num_classes, 1.0);
  }

  StageParams stage{s2.epochs, s2.lr, s2.lr_schedule, s2.loss, s2.sampler, s2.tau};
  const UpdateScope scope = s2.method == Stage2Method::crt ? UpdateScope::classifier_only
                                                           : UpdateScope::scales_only;
  run_stage(run.model, config, stage, splits, scope,
            derive_seed(config.seed, kStage2SamplerStream), run.log_lines, 2);
  run.test_metrics = final_report(run.model, config, splits, run.log_lines, 2);
  return run;
}

}  // namespace cdb
