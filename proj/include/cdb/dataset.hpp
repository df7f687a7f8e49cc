#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cdb/matrix.hpp"

namespace cdb {

// Immutable after construction; safe to share read-only across threads.
struct LabeledDataset {
  Matrix features;                        // one row per sample
  std::vector<int> labels;                // class index in [0, num_classes)
  int num_classes = 0;
  std::vector<std::size_t> class_counts;  // M_c, indexed by class
  std::vector<std::size_t> ids;           // sample identity, survives subsetting

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols; }
};

enum class ProfileKind { two_class_head_ratio, exponential };

struct ImbalanceProfile {
  ProfileKind kind = ProfileKind::exponential;
  double head_ratio = 0.0;             // two-class only, x in (0.5, 1)
  double mu = 1.0;                     // exponential only, (0, 1]
  std::size_t n_max = 0;               // exponential only
  std::size_t total_two_class = 5000;  // two-class pool size
};

// Recompute class_counts from labels and check basic invariants.
void finalize_counts(LabeledDataset& ds);

// Per-class target counts for an exponential profile over N classes:
// n_max * mu^((c-1)/(N-1)) for 1-indexed c, rounded half-up, clamped to >= 1.
// N == 1 is defined as n_max.
std::vector<std::size_t> exponential_targets(const ImbalanceProfile& profile,
                                             int num_classes);

// IDX image/label pair (big-endian, magic 0x00000803 / 0x00000801).
// Pixels are scaled to [0, 1].
LabeledDataset load_idx(const std::string& images_path,
                        const std::string& labels_path);

// CSV rows of the form `label,f1,...,fD`, no header. An empty file yields an
// empty dataset with num_classes 0.
LabeledDataset load_csv(const std::string& path);

// Writes the CSV form read by load_csv. Feature values round-trip exactly.
void save_csv(const LabeledDataset& ds, const std::string& path);

// Two-class subset with round(x*total) head and round((1-x)*total) tail
// samples, drawn without replacement; labels remapped to {0 = head, 1 = tail}.
LabeledDataset make_two_class_imbalance(const LabeledDataset& source,
                                        const ImbalanceProfile& profile,
                                        int head_class, int tail_class,
                                        std::uint64_t seed);

// Subset whose per-class counts follow the exponential profile.
LabeledDataset make_exponential_longtail(const LabeledDataset& source,
                                         const ImbalanceProfile& profile,
                                         std::uint64_t seed);

// Isotropic unit-variance Gaussian blobs with deterministic centers at
// pairwise distance >= class_separation.
LabeledDataset make_gaussian_blobs(int num_classes, int dims,
                                   const std::vector<std::size_t>& per_class_counts,
                                   double class_separation, std::uint64_t seed);

// Splits off exactly per_class samples of every class; remainder keeps the
// source row order. held_out and remainder are disjoint and union to source.
std::pair<LabeledDataset, LabeledDataset> split_balanced(
    const LabeledDataset& source, std::size_t per_class, std::uint64_t seed);

// Keeps only the listed classes, relabeled to 0..k-1 in list order.
LabeledDataset filter_classes(const LabeledDataset& source,
                              const std::vector<int>& classes);

}  // namespace cdb
