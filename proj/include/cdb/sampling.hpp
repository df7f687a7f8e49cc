#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdb/dataset.hpp"
#include "cdb/difficulty.hpp"
#include "cdb/rng.hpp"

namespace cdb {

enum class SamplerKind { uniform, class_frequency, class_aware, cdb_s };

struct SamplerSpec {
  SamplerKind kind = SamplerKind::uniform;
  // Minimum per-class probability mass for cdb_s. Negative means the default
  // 1e-4 / N; exactly 0 disables the floor (then an all-zero-difficulty
  // snapshot is a degenerate-distribution error).
  double floor = -1.0;
  // Draws per epoch; 0 means the training-set size.
  std::size_t epoch_size = 0;

  double resolved_floor(std::size_t num_classes) const {
    return floor < 0.0 ? 1e-4 / static_cast<double>(num_classes) : floor;
  }
};

const char* to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);

// Probability mass per class for the epoch:
//   uniform:         M_c / M (per-sample uniform)
//   class_frequency: balanced oversampling, per-sample mass ~ 1/M_c,
//                    so each class gets 1/N
//   class_aware:     1/N
//   cdb_s:           d_c^tau / sum_c' d_c'^tau, then floored by mixing with
//                    the uniform distribution: p <- (1-l) p + l/N, l = N*floor
std::vector<double> class_distribution(const SamplerSpec& spec,
                                       const ClassState& state, double tau_value,
                                       const std::vector<std::size_t>& class_counts);

// Two-stage weighted draw: class by inverse-transform over the cumulative
// distribution, then a uniform sample within the class, with replacement.
class EpochSampler {
 public:
  EpochSampler(const LabeledDataset& dataset, std::uint64_t seed);

  // epoch_size draws from the given class distribution; the RNG stream
  // continues across calls.
  std::vector<std::size_t> draw(const std::vector<double>& distribution,
                                std::size_t epoch_size);

 private:
  std::vector<std::vector<std::size_t>> by_class_;
  Rng rng_;
};

// One-shot form with a fresh seeded engine.
std::vector<std::size_t> draw_epoch(const std::vector<double>& distribution,
                                    const LabeledDataset& dataset,
                                    std::size_t epoch_size, std::uint64_t seed);

}  // namespace cdb
