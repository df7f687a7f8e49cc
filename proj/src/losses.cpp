#include "cdb/losses.hpp"

#include <algorithm>
#include <cmath>

#include "cdb/errors.hpp"

namespace cdb {

namespace {

constexpr double kProbClamp = 1e-12;

double clamp_prob(double p) {
  return std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
}

void validate(const LossSpec& spec, const BatchProbs& batch) {
  if (batch.size() == 0) {
    throw ConfigError("loss over an empty batch");
  }
  if (batch.probs.rows != batch.labels.size()) {
    throw ConfigError("probs/labels row mismatch");
  }
  if (spec.weighted() && spec.class_weights.size() != batch.num_classes()) {
    throw ConfigError(std::string("loss '") + to_string(spec.kind) + "' needs " +
                      std::to_string(batch.num_classes()) + " class weights, got " +
                      std::to_string(spec.class_weights.size()));
  }
  if (spec.gamma < 0.0) {
    throw ConfigError("gamma must be non-negative");
  }
}

}  // namespace

const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::ce: return "ce";
    case LossKind::focal: return "focal";
    case LossKind::cdb_w_ce: return "cdb_w_ce";
    case LossKind::cdb_w_fl: return "cdb_w_fl";
    case LossKind::inv_freq_ce: return "inv_freq_ce";
  }
  return "?";
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "ce") return LossKind::ce;
  if (name == "focal") return LossKind::focal;
  if (name == "cdb_w_ce") return LossKind::cdb_w_ce;
  if (name == "cdb_w_fl") return LossKind::cdb_w_fl;
  if (name == "inv_freq_ce") return LossKind::inv_freq_ce;
  throw ConfigError("unknown loss '" + name +
                    "' (valid: ce, focal, cdb_w_ce, cdb_w_fl, inv_freq_ce)");
}

LossValues loss_forward(const LossSpec& spec, const BatchProbs& batch) {
  validate(spec, batch);
  LossValues out;
  out.per_sample.resize(batch.size());
  double sum = 0.0;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const int c = batch.labels[s];
    const double p = clamp_prob(batch.probs(s, c));
    double loss = -std::log(p);
    if (spec.focal_family()) {
      loss *= std::pow(1.0 - p, spec.gamma);
    }
    if (spec.weighted()) {
      loss = spec.class_weights[c] * loss;
    }
    out.per_sample[s] = loss;
    sum += loss;
  }
  out.mean = sum / static_cast<double>(batch.size());
  return out;
}

Matrix loss_backward(const LossSpec& spec, const BatchProbs& batch) {
  validate(spec, batch);
  const std::size_t n = batch.num_classes();
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  Matrix grad(batch.size(), n);

  for (std::size_t s = 0; s < batch.size(); ++s) {
    const int c = batch.labels[s];
    const double w = spec.weighted() ? spec.class_weights[c] : 1.0;
    const double* p = batch.probs.row(s);
    double* g = grad.row(s);

    if (!spec.focal_family() || spec.gamma == 0.0) {
      // CE family: d(-w log p_c)/dz_j = w (p_j - [j == c]). The gamma == 0
      // case lands here too, so focal(0) follows the CE path bit for bit.
      for (std::size_t j = 0; j < n; ++j) {
        g[j] = w * (p[j] - (j == static_cast<std::size_t>(c) ? 1.0 : 0.0)) * inv_batch;
      }
    } else {
      // Focal family: L = -w q^g log pc with q = 1 - pc, so
      // dL/dpc = w (g q^(g-1) log pc - q^g / pc), and through the softmax
      // dpc/dz_j = pc ([j == c] - p_j).
      const double pc = clamp_prob(p[c]);
      const double q = 1.0 - pc;
      const double dl_dpc =
          w * (spec.gamma * std::pow(q, spec.gamma - 1.0) * std::log(pc) -
               std::pow(q, spec.gamma) / pc);
      for (std::size_t j = 0; j < n; ++j) {
        const double dpc_dzj = pc * ((j == static_cast<std::size_t>(c) ? 1.0 : 0.0) - p[j]);
        g[j] = dl_dpc * dpc_dzj * inv_batch;
      }
    }
  }
  return grad;
}

std::vector<double> inv_freq_weights(const std::vector<std::size_t>& class_counts) {
  if (class_counts.empty()) {
    throw ConfigError("inv_freq_weights needs at least one class");
  }
  double inv_sum = 0.0;
  for (std::size_t count : class_counts) {
    if (count == 0) {
      throw ConfigError("inverse-frequency weights undefined for a zero-count class");
    }
    inv_sum += 1.0 / static_cast<double>(count);
  }
  const double n = static_cast<double>(class_counts.size());
  std::vector<double> weights(class_counts.size());
  for (std::size_t c = 0; c < class_counts.size(); ++c) {
    weights[c] = (1.0 / static_cast<double>(class_counts[c])) * n / inv_sum;
  }
  return weights;
}

}  // namespace cdb
