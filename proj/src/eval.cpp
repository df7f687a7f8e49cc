#include "cdb/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "cdb/errors.hpp"

namespace cdb {

namespace {

using nlohmann::json;

double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

ShotGroups make_shot_groups(const std::vector<std::size_t>& train_counts,
                            std::size_t many_threshold, std::size_t few_threshold) {
  if (few_threshold >= many_threshold) {
    throw ConfigError("shot thresholds must satisfy few < many");
  }
  ShotGroups groups;
  groups.many_threshold = many_threshold;
  groups.few_threshold = few_threshold;
  groups.group_of_class.resize(train_counts.size());
  for (std::size_t c = 0; c < train_counts.size(); ++c) {
    if (train_counts[c] > many_threshold) {
      groups.group_of_class[c] = ShotGroups::kMany;
    } else if (train_counts[c] > few_threshold) {
      groups.group_of_class[c] = ShotGroups::kMedium;
    } else {
      groups.group_of_class[c] = ShotGroups::kFew;
    }
  }
  return groups;
}

MetricsReport evaluate(const MlpModel& model, const LabeledDataset& test_set,
                       const EvalOptions& options) {
  if (test_set.size() == 0) {
    throw ConfigError("evaluate needs a nonempty test set");
  }
  if (test_set.num_classes > static_cast<int>(model.num_classes)) {
    throw ConfigError("test set has more classes than the model");
  }
  return evaluate_probs(predict_probs(model, test_set), test_set, options);
}

MetricsReport evaluate_probs(const Matrix& probs, const LabeledDataset& test_set,
                             const EvalOptions& options) {
  const std::size_t n = probs.cols;
  const std::size_t samples = test_set.size();
  if (probs.rows != samples) {
    throw ConfigError("probability rows do not match the test set");
  }

  std::vector<std::size_t> correct(n, 0), truth_count(n, 0), predicted_count(n, 0);
  std::size_t top1_hits = 0, top5_hits = 0;
  std::vector<std::size_t> order(n);

  for (std::size_t i = 0; i < samples; ++i) {
    const double* p = probs.row(i);
    const int label = test_set.labels[i];
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j) {
      if (p[j] > p[best]) best = j;
    }
    ++predicted_count[best];
    ++truth_count[label];
    if (static_cast<int>(best) == label) {
      ++correct[label];
      ++top1_hits;
    }
    // Rank of the true class under (probability desc, class index asc).
    std::size_t rank = 0;
    const double pt = p[label];
    for (std::size_t j = 0; j < n; ++j) {
      if (p[j] > pt || (p[j] == pt && j < static_cast<std::size_t>(label))) ++rank;
    }
    if (rank < 5) ++top5_hits;
  }

  MetricsReport report;
  report.test_size = samples;
  report.top1 = static_cast<double>(top1_hits) / static_cast<double>(samples);
  report.top5 = static_cast<double>(top5_hits) / static_cast<double>(samples);
  report.per_class_accuracy.resize(n);
  double precision_sum = 0.0, recall_sum = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    const double recall = safe_ratio(static_cast<double>(correct[c]),
                                     static_cast<double>(truth_count[c]));
    report.per_class_accuracy[c] = recall;
    recall_sum += recall;
    // Never-predicted classes contribute precision 0.
    precision_sum += safe_ratio(static_cast<double>(correct[c]),
                                static_cast<double>(predicted_count[c]));
  }
  report.macro_precision = precision_sum / static_cast<double>(n);
  report.macro_recall = recall_sum / static_cast<double>(n);

  if (!options.train_counts.empty()) {
    if (options.train_counts.size() != n) {
      throw ConfigError("train_counts does not cover the class set");
    }
    const ShotGroups groups = make_shot_groups(options.train_counts,
                                               options.many_threshold,
                                               options.few_threshold);
    std::array<double, 3> acc_sum{0.0, 0.0, 0.0};
    std::array<std::size_t, 3> class_count{0, 0, 0};
    for (std::size_t c = 0; c < n; ++c) {
      const int g = groups.group_of_class[c];
      acc_sum[g] += report.per_class_accuracy[c];
      ++class_count[g];
    }
    report.shot_accuracies.resize(3);
    for (int g = 0; g < 3; ++g) {
      report.shot_accuracies[g] =
          class_count[g] == 0 ? 0.0 : acc_sum[g] / static_cast<double>(class_count[g]);
    }

    // Head = top-k most frequent training classes; ties to the lower index.
    std::vector<std::size_t> by_count(n);
    std::iota(by_count.begin(), by_count.end(), 0);
    std::stable_sort(by_count.begin(), by_count.end(), [&](std::size_t a, std::size_t b) {
      return options.train_counts[a] > options.train_counts[b];
    });
    const std::size_t k = std::min(options.head_k, n);
    std::vector<char> is_head(n, 0);
    for (std::size_t i = 0; i < k; ++i) {
      report.head_tail.head_classes.push_back(static_cast<int>(by_count[i]));
      is_head[by_count[i]] = 1;
    }
    std::sort(report.head_tail.head_classes.begin(), report.head_tail.head_classes.end());
    double head_p = 0.0, head_r = 0.0, tail_p = 0.0, tail_r = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double precision = safe_ratio(static_cast<double>(correct[c]),
                                          static_cast<double>(predicted_count[c]));
      const double recall = report.per_class_accuracy[c];
      if (is_head[c]) {
        head_p += precision;
        head_r += recall;
      } else {
        tail_p += precision;
        tail_r += recall;
      }
    }
    report.head_tail.head_precision = k == 0 ? 0.0 : head_p / static_cast<double>(k);
    report.head_tail.head_recall = k == 0 ? 0.0 : head_r / static_cast<double>(k);
    const std::size_t tail = n - k;
    report.head_tail.tail_precision = tail == 0 ? 0.0 : tail_p / static_cast<double>(tail);
    report.head_tail.tail_recall = tail == 0 ? 0.0 : tail_r / static_cast<double>(tail);
  }
  return report;
}

std::array<std::size_t, 3> hard_instance_counts(const std::vector<double>& weights_per_sample,
                                                const std::vector<int>& labels,
                                                const ShotGroups& groups,
                                                double threshold) {
  if (weights_per_sample.size() != labels.size()) {
    throw ConfigError("one weight per sample required");
  }
  std::array<std::size_t, 3> counts{0, 0, 0};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (weights_per_sample[i] > threshold) {
      ++counts[groups.group_of_class[labels[i]]];
    }
  }
  return counts;
}

std::array<double, 3> hard_instance_averages(const std::array<std::size_t, 3>& counts,
                                             const ShotGroups& groups) {
  std::array<std::size_t, 3> class_count{0, 0, 0};
  for (int g : groups.group_of_class) ++class_count[g];
  std::array<double, 3> averages{0.0, 0.0, 0.0};
  for (int g = 0; g < 3; ++g) {
    averages[g] = class_count[g] == 0
                      ? 0.0
                      : static_cast<double>(counts[g]) / static_cast<double>(class_count[g]);
  }
  return averages;
}

std::string metrics_to_json(const MetricsReport& metrics) {
  json j;
  j["top1"] = metrics.top1;
  j["top5"] = metrics.top5;
  j["macro_precision"] = metrics.macro_precision;
  j["macro_recall"] = metrics.macro_recall;
  j["per_class_accuracy"] = metrics.per_class_accuracy;
  j["test_size"] = metrics.test_size;
  if (!metrics.shot_accuracies.empty()) {
    j["shot_accuracy"] = {{"many", metrics.shot_accuracies[0]},
                          {"medium", metrics.shot_accuracies[1]},
                          {"few", metrics.shot_accuracies[2]}};
    j["head_tail"] = {{"head_classes", metrics.head_tail.head_classes},
                      {"head_precision", metrics.head_tail.head_precision},
                      {"head_recall", metrics.head_tail.head_recall},
                      {"tail_precision", metrics.head_tail.tail_precision},
                      {"tail_recall", metrics.head_tail.tail_recall}};
  }
  return j.dump();
}

MetricsReport metrics_from_json(const std::string& text) {
  const json j = json::parse(text);
  MetricsReport metrics;
  metrics.top1 = j.at("top1").get<double>();
  metrics.top5 = j.at("top5").get<double>();
  metrics.macro_precision = j.at("macro_precision").get<double>();
  metrics.macro_recall = j.at("macro_recall").get<double>();
  metrics.per_class_accuracy = j.at("per_class_accuracy").get<std::vector<double>>();
  metrics.test_size = j.at("test_size").get<std::size_t>();
  if (j.contains("shot_accuracy")) {
    const auto& s = j.at("shot_accuracy");
    metrics.shot_accuracies = {s.at("many").get<double>(), s.at("medium").get<double>(),
                               s.at("few").get<double>()};
    const auto& ht = j.at("head_tail");
    metrics.head_tail.head_classes = ht.at("head_classes").get<std::vector<int>>();
    metrics.head_tail.head_precision = ht.at("head_precision").get<double>();
    metrics.head_tail.head_recall = ht.at("head_recall").get<double>();
    metrics.head_tail.tail_precision = ht.at("tail_precision").get<double>();
    metrics.head_tail.tail_recall = ht.at("tail_recall").get<double>();
  }
  return metrics;
}

namespace {

// Parameter set minus the seed identifies an aggregation group.
std::map<std::string, std::string> group_key(const RunSummary& run) {
  auto params = run.params;
  params.erase("seed");
  return params;
}

struct Aggregate {
  std::map<std::string, std::string> params;
  std::vector<double> errors;  // percent
  double mean = 0.0;
  double stddev = 0.0;
};

std::vector<Aggregate> aggregate_runs(const std::vector<RunSummary>& runs) {
  std::map<std::map<std::string, std::string>, Aggregate> by_group;
  for (const auto& run : runs) {
    auto key = group_key(run);
    auto& agg = by_group[key];
    agg.params = key;
    agg.errors.push_back((1.0 - run.metrics.top1) * 100.0);
  }
  std::vector<Aggregate> result;
  for (auto& [key, agg] : by_group) {
    const double n = static_cast<double>(agg.errors.size());
    double sum = 0.0;
    for (double e : agg.errors) sum += e;
    agg.mean = sum / n;
    double sq = 0.0;
    for (double e : agg.errors) sq += (e - agg.mean) * (e - agg.mean);
    agg.stddev = agg.errors.size() > 1 ? std::sqrt(sq / (n - 1.0)) : 0.0;
    result.push_back(std::move(agg));
  }
  return result;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string cell_for(const std::vector<Aggregate>& aggs,
                     const std::map<std::string, std::string>& want) {
  for (const auto& agg : aggs) {
    bool match = true;
    for (const auto& [k, v] : want) {
      auto it = agg.params.find(k);
      if (it == agg.params.end() || it->second != v) {
        match = false;
        break;
      }
    }
    if (match) return fmt(agg.mean);
  }
  return "";
}

std::vector<std::string> distinct_values(const std::vector<Aggregate>& aggs,
                                         const std::string& key) {
  std::vector<std::string> values;
  for (const auto& agg : aggs) {
    auto it = agg.params.find(key);
    if (it == agg.params.end()) continue;
    if (std::find(values.begin(), values.end(), it->second) == values.end()) {
      values.push_back(it->second);
    }
  }
  return values;
}

}  // namespace

void write_report_tables(const std::vector<RunSummary>& runs, const std::string& out_dir) {
  if (runs.empty()) {
    throw ConfigError("no runs to report");
  }
  for (const auto& run : runs) {
    if (run.num_classes != runs.front().num_classes) {
      throw ConsistencyError("runs have heterogeneous class counts (" +
                             std::to_string(run.num_classes) + " vs " +
                             std::to_string(runs.front().num_classes) + ")");
    }
  }
  std::filesystem::create_directories(out_dir);
  const auto aggs = aggregate_runs(runs);

  // Column set = union of group parameter keys, stable order.
  std::vector<std::string> keys;
  for (const auto& agg : aggs) {
    for (const auto& [k, v] : agg.params) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
  }

  {
    std::ofstream out(out_dir + "/methods.csv");
    for (const auto& k : keys) out << csv_escape(k) << ',';
    out << "runs,mean_error_pct,std_error_pct\n";
    for (const auto& agg : aggs) {
      for (const auto& k : keys) {
        auto it = agg.params.find(k);
        out << csv_escape(it == agg.params.end() ? "" : it->second) << ',';
      }
      out << agg.errors.size() << ',' << fmt(agg.mean) << ',' << fmt(agg.stddev) << '\n';
    }
  }

  // Fixed-vs-dynamic tau sweep table, when tau settings vary across runs.
  const auto tau_kinds = distinct_values(aggs, "tau.kind");
  if (tau_kinds.size() > 1) {
    std::ofstream out(out_dir + "/tau_table.csv");
    out << "tau,mean_error_pct,std_error_pct\n";
    std::vector<const Aggregate*> fixed_rows, dynamic_rows;
    for (const auto& agg : aggs) {
      auto it = agg.params.find("tau.kind");
      if (it == agg.params.end()) continue;
      (it->second == "fixed" ? fixed_rows : dynamic_rows).push_back(&agg);
    }
    std::stable_sort(fixed_rows.begin(), fixed_rows.end(), [](const Aggregate* a, const Aggregate* b) {
      const auto va = a->params.count("tau.fixed") ? std::stod(a->params.at("tau.fixed")) : 0.0;
      const auto vb = b->params.count("tau.fixed") ? std::stod(b->params.at("tau.fixed")) : 0.0;
      return va < vb;
    });
    for (const auto* agg : fixed_rows) {
      const std::string label = "fixed:" + (agg->params.count("tau.fixed")
                                                ? agg->params.at("tau.fixed")
                                                : std::string("?"));
      out << csv_escape(label) << ',' << fmt(agg->mean) << ',' << fmt(agg->stddev) << '\n';
    }
    const char* order[] = {"linear", "poly", "log", "sigmoid"};
    for (const char* kind : order) {
      for (const auto* agg : dynamic_rows) {
        if (agg->params.at("tau.kind") == kind) {
          out << kind << ',' << fmt(agg->mean) << ',' << fmt(agg->stddev) << '\n';
        }
      }
    }
  }

  // Decoupled grid: rows = stage-2 method x stage-2 training, columns =
  // stage-1 training method.
  const auto stage1 = distinct_values(aggs, "train.method");
  const auto stage2 = distinct_values(aggs, "stage2.train_method");
  const auto modes = distinct_values(aggs, "stage2.method");
  if (!stage2.empty() && !modes.empty()) {
    std::ofstream out(out_dir + "/decoupled_grid.csv");
    out << "stage2_method,stage2_training";
    for (const auto& s1 : stage1) out << ',' << csv_escape("stage1:" + s1);
    out << '\n';
    for (const auto& mode : modes) {
      for (const auto& s2 : stage2) {
        out << csv_escape(mode) << ',' << csv_escape(s2);
        for (const auto& s1 : stage1) {
          out << ',' << cell_for(aggs, {{"stage2.method", mode},
                                        {"stage2.train_method", s2},
                                        {"train.method", s1}});
        }
        out << '\n';
      }
    }
  }

  json summary;
  summary["schema"] = 1;
  summary["num_classes"] = runs.front().num_classes;
  summary["groups"] = json::array();
  for (const auto& agg : aggs) {
    json g;
    g["params"] = agg.params;
    g["runs"] = agg.errors.size();
    g["mean_error_pct"] = agg.mean;
    g["std_error_pct"] = agg.stddev;
    summary["groups"].push_back(g);
  }
  summary["run_count"] = runs.size();
  std::ofstream(out_dir + "/summary.json") << summary.dump(2) << '\n';
}

}  // namespace cdb
