#include "cdb/sampling.hpp"

#include <cmath>

#include "cdb/errors.hpp"

namespace cdb {

const char* to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::uniform: return "uniform";
    case SamplerKind::class_frequency: return "class_frequency";
    case SamplerKind::class_aware: return "class_aware";
    case SamplerKind::cdb_s: return "cdb_s";
  }
  return "?";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
  if (name == "uniform") return SamplerKind::uniform;
  if (name == "class_frequency") return SamplerKind::class_frequency;
  if (name == "class_aware") return SamplerKind::class_aware;
  if (name == "cdb_s") return SamplerKind::cdb_s;
  throw ConfigError("unknown sampler '" + name +
                    "' (valid: uniform, class_frequency, class_aware, cdb_s)");
}

std::vector<double> class_distribution(const SamplerSpec& spec,
                                       const ClassState& state, double tau_value,
                                       const std::vector<std::size_t>& class_counts) {
  const std::size_t n = class_counts.size();
  if (n == 0) {
    throw ConfigError("class_distribution needs at least one class");
  }
  for (std::size_t count : class_counts) {
    if (count == 0) {
      throw ConfigError("every class needs at least one training sample");
    }
  }
  std::vector<double> p(n);
  switch (spec.kind) {
    case SamplerKind::uniform: {
      std::size_t total = 0;
      for (std::size_t count : class_counts) total += count;
      for (std::size_t c = 0; c < n; ++c) {
        p[c] = static_cast<double>(class_counts[c]) / static_cast<double>(total);
      }
      return p;
    }
    case SamplerKind::class_frequency:
    case SamplerKind::class_aware: {
      // class_frequency oversamples to balance (per-sample mass ~ 1/M_c),
      // which lands on the same per-class mass as class-aware sampling.
      for (std::size_t c = 0; c < n; ++c) {
        p[c] = 1.0 / static_cast<double>(n);
      }
      return p;
    }
    case SamplerKind::cdb_s: {
      if (state.num_classes() != n) {
        throw ConfigError("class state covers " + std::to_string(state.num_classes()) +
                          " classes, counts cover " + std::to_string(n));
      }
      const double floor = spec.resolved_floor(n);
      double sum = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        p[c] = std::pow(state.difficulties[c], tau_value);  // 0^0 = 1
        sum += p[c];
      }
      if (sum == 0.0) {
        if (floor <= 0.0) {
          throw DomainError("all class difficulties are zero and no sampling floor is set");
        }
        for (std::size_t c = 0; c < n; ++c) p[c] = 1.0 / static_cast<double>(n);
        return p;
      }
      for (std::size_t c = 0; c < n; ++c) p[c] /= sum;
      const double lambda = static_cast<double>(n) * floor;
      if (lambda > 0.0) {
        const double uniform_mass = 1.0 / static_cast<double>(n);
        for (std::size_t c = 0; c < n; ++c) {
          p[c] = (1.0 - lambda) * p[c] + lambda * uniform_mass;
        }
      }
      return p;
    }
  }
  throw ConfigError("unhandled sampler kind");
}

EpochSampler::EpochSampler(const LabeledDataset& dataset, std::uint64_t seed)
    : by_class_(dataset.num_classes), rng_(seed) {
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    by_class_[dataset.labels[i]].push_back(i);
  }
}

std::vector<std::size_t> EpochSampler::draw(const std::vector<double>& distribution,
                                            std::size_t epoch_size) {
  if (distribution.size() != by_class_.size()) {
    throw ConfigError("distribution covers " + std::to_string(distribution.size()) +
                      " classes, dataset has " + std::to_string(by_class_.size()));
  }
  std::vector<double> cumulative(distribution.size());
  double acc = 0.0;
  for (std::size_t c = 0; c < distribution.size(); ++c) {
    acc += distribution[c];
    cumulative[c] = acc;
  }
  std::vector<std::size_t> indices;
  indices.reserve(epoch_size);
  for (std::size_t i = 0; i < epoch_size; ++i) {
    const double u = rng_.next_unit() * acc;
    std::size_t cls = 0;
    while (cls + 1 < cumulative.size() && u >= cumulative[cls]) ++cls;
    const auto& pool = by_class_[cls];
    if (pool.empty()) {
      // Unreachable when the distribution came from class_distribution, which
      // rejects zero-count classes.
      throw DomainError("drew class " + std::to_string(cls) + " with no samples");
    }
    indices.push_back(pool[rng_.next_index(pool.size())]);
  }
  return indices;
}

std::vector<std::size_t> draw_epoch(const std::vector<double>& distribution,
                                    const LabeledDataset& dataset,
                                    std::size_t epoch_size, std::uint64_t seed) {
  EpochSampler sampler(dataset, seed);
  return sampler.draw(distribution, epoch_size);
}

}  // namespace cdb
