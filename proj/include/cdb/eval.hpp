#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "cdb/dataset.hpp"
#include "cdb/model.hpp"

namespace cdb {

// Many-/medium-/few-shot partition of the class set by training count:
// many: N_c > many_threshold; few: N_c <= few_threshold; medium: the rest.
struct ShotGroups {
  std::size_t many_threshold = 100;
  std::size_t few_threshold = 20;
  std::vector<int> group_of_class;  // 0 = many, 1 = medium, 2 = few

  static constexpr int kMany = 0;
  static constexpr int kMedium = 1;
  static constexpr int kFew = 2;
};

ShotGroups make_shot_groups(const std::vector<std::size_t>& train_counts,
                            std::size_t many_threshold = 100,
                            std::size_t few_threshold = 20);

struct HeadTailMetrics {
  std::vector<int> head_classes;  // top-k most frequent by training count
  double head_precision = 0.0;
  double head_recall = 0.0;
  double tail_precision = 0.0;
  double tail_recall = 0.0;
};

struct MetricsReport {
  double top1 = 0.0;  // micro
  double top5 = 0.0;  // micro, truth among the 5 highest-probability classes
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  std::vector<double> per_class_accuracy;
  std::vector<double> shot_accuracies;  // indexed by ShotGroups::k*; empty
                                        // when training counts are unknown
  HeadTailMetrics head_tail;
  std::size_t test_size = 0;
};

struct EvalOptions {
  // Training-set class counts drive shot groups and the head/tail split;
  // leave empty to skip both breakdowns.
  std::vector<std::size_t> train_counts;
  std::size_t many_threshold = 100;
  std::size_t few_threshold = 20;
  std::size_t head_k = 5;
};

// Full metric report for a model on a test set. Macro precision counts a
// never-predicted class as precision 0; top-5 ties break by class index.
MetricsReport evaluate(const MlpModel& model, const LabeledDataset& test_set,
                       const EvalOptions& options = {});

// Same metrics from precomputed probabilities (row per test sample).
MetricsReport evaluate_probs(const Matrix& probs, const LabeledDataset& test_set,
                             const EvalOptions& options = {});

// Number of samples per shot group whose weight exceeds the threshold.
// For the focal family the weight is (1-p_true)^gamma per sample; for CDB
// it is the sample's class weight.
std::array<std::size_t, 3> hard_instance_counts(const std::vector<double>& weights_per_sample,
                                                const std::vector<int>& labels,
                                                const ShotGroups& groups,
                                                double threshold);

// Hard counts divided by the number of classes in each group.
std::array<double, 3> hard_instance_averages(const std::array<std::size_t, 3>& counts,
                                             const ShotGroups& groups);

std::string metrics_to_json(const MetricsReport& metrics);
MetricsReport metrics_from_json(const std::string& text);

// One finished run, as consumed by the report writers.
struct RunSummary {
  std::string run_id;
  std::map<std::string, std::string> params;  // swept keys plus "seed"
  int num_classes = 0;
  MetricsReport metrics;
};

// Aggregated tables: methods.csv (mean/std error per parameter group),
// tau_table.csv when tau settings vary, decoupled_grid.csv when stage-2
// methods vary, plus summary.json. Throws on an empty run set or
// heterogeneous class counts.
void write_report_tables(const std::vector<RunSummary>& runs,
                         const std::string& out_dir);

}  // namespace cdb
