#include "cdb/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "cdb/errors.hpp"

namespace cdb {

namespace {

void gaussian_init(Matrix& w, std::size_t fan_in, Rng& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (double& v : w.data) {
    v = stddev * rng.next_gaussian();
  }
}

// rows x cols weight matrix applied to a batch: out = batch * w^T + b.
void affine(const Matrix& batch, const Matrix& w, const std::vector<double>& b,
            Matrix& out) {
  out = Matrix(batch.rows, w.rows);
  for (std::size_t i = 0; i < batch.rows; ++i) {
    const double* x = batch.row(i);
    double* o = out.row(i);
    for (std::size_t r = 0; r < w.rows; ++r) {
      const double* wr = w.row(r);
      double acc = b[r];
      for (std::size_t c = 0; c < w.cols; ++c) {
        acc += wr[c] * x[c];
      }
      o[r] = acc;
    }
  }
}

void softmax_rows(const Matrix& logits, Matrix& probs) {
  probs = Matrix(logits.rows, logits.cols);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const double* z = logits.row(i);
    double* p = probs.row(i);
    double zmax = z[0];
    for (std::size_t j = 1; j < logits.cols; ++j) zmax = std::max(zmax, z[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.cols; ++j) {
      p[j] = std::exp(z[j] - zmax);
      sum += p[j];
    }
    for (std::size_t j = 0; j < logits.cols; ++j) p[j] /= sum;
  }
}

constexpr std::size_t kEvalBatch = 256;

}  // namespace

MlpModel make_mlp(std::size_t input_dim, std::size_t hidden_dim,
                  std::size_t num_classes, Rng& rng) {
  MlpModel model;
  model.input_dim = input_dim;
  model.hidden_dim = hidden_dim;
  model.num_classes = num_classes;
  if (hidden_dim > 0) {
    model.w1 = Matrix(hidden_dim, input_dim);
    gaussian_init(model.w1, input_dim, rng);
    model.b1.assign(hidden_dim, 0.0);
    model.w2 = Matrix(num_classes, hidden_dim);
    gaussian_init(model.w2, hidden_dim, rng);
  } else {
    model.w2 = Matrix(num_classes, input_dim);
    gaussian_init(model.w2, input_dim, rng);
  }
  model.b2.assign(num_classes, 0.0);
  return model;
}

void reinit_classifier(MlpModel& model, Rng& rng) {
  gaussian_init(model.w2, model.w2.cols, rng);
  std::fill(model.b2.begin(), model.b2.end(), 0.0);
}

ForwardCache forward(const MlpModel& model, const Matrix& batch) {
  if (batch.cols != model.input_dim) {
    throw ConfigError("input width " + std::to_string(batch.cols) +
                      " does not match model input dim " + std::to_string(model.input_dim));
  }
  ForwardCache cache;
  cache.input = batch;
  if (model.has_hidden()) {
    affine(batch, model.w1, model.b1, cache.pre_hidden);
    cache.hidden = cache.pre_hidden;
    for (double& v : cache.hidden.data) v = std::max(0.0, v);
    affine(cache.hidden, model.w2, model.b2, cache.raw_logits);
  } else {
    affine(batch, model.w2, model.b2, cache.raw_logits);
  }
  if (model.has_scales()) {
    Matrix scaled = cache.raw_logits;
    for (std::size_t i = 0; i < scaled.rows; ++i) {
      double* row = scaled.row(i);
      for (std::size_t c = 0; c < scaled.cols; ++c) {
        row[c] *= model.classifier_scales[c];
      }
    }
    softmax_rows(scaled, cache.probs);
  } else {
    softmax_rows(cache.raw_logits, cache.probs);
  }
  return cache;
}

ModelGradients backward(const MlpModel& model, const ForwardCache& cache,
                        const Matrix& logit_grad) {
  const std::size_t batch = cache.input.rows;
  const std::size_t n = model.num_classes;
  ModelGradients grads;

  // Through the per-class scales: z_scaled[c] = s_c * z_raw[c].
  Matrix g_raw = logit_grad;
  if (model.has_scales()) {
    grads.scales.assign(n, 0.0);
    for (std::size_t i = 0; i < batch; ++i) {
      const double* g = logit_grad.row(i);
      const double* z = cache.raw_logits.row(i);
      double* gr = g_raw.row(i);
      for (std::size_t c = 0; c < n; ++c) {
        grads.scales[c] += g[c] * z[c];
        gr[c] = g[c] * model.classifier_scales[c];
      }
    }
  }

  const Matrix& hidden_in = model.has_hidden() ? cache.hidden : cache.input;
  grads.w2 = Matrix(model.w2.rows, model.w2.cols);
  grads.b2.assign(n, 0.0);
  for (std::size_t i = 0; i < batch; ++i) {
    const double* g = g_raw.row(i);
    const double* h = hidden_in.row(i);
    for (std::size_t c = 0; c < n; ++c) {
      double* wrow = grads.w2.row(c);
      for (std::size_t k = 0; k < model.w2.cols; ++k) {
        wrow[k] += g[c] * h[k];
      }
      grads.b2[c] += g[c];
    }
  }

  if (model.has_hidden()) {
    grads.w1 = Matrix(model.w1.rows, model.w1.cols);
    grads.b1.assign(model.hidden_dim, 0.0);
    std::vector<double> dh(model.hidden_dim);
    for (std::size_t i = 0; i < batch; ++i) {
      const double* g = g_raw.row(i);
      const double* pre = cache.pre_hidden.row(i);
      const double* x = cache.input.row(i);
      for (std::size_t k = 0; k < model.hidden_dim; ++k) {
        double acc = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
          acc += g[c] * model.w2(c, k);
        }
        dh[k] = pre[k] > 0.0 ? acc : 0.0;  // rectifier gate
      }
      for (std::size_t k = 0; k < model.hidden_dim; ++k) {
        if (dh[k] == 0.0) continue;
        double* wrow = grads.w1.row(k);
        for (std::size_t d = 0; d < model.input_dim; ++d) {
          wrow[d] += dh[k] * x[d];
        }
        grads.b1[k] += dh[k];
      }
    }
  }
  return grads;
}

std::vector<int> predict(const MlpModel& model, const LabeledDataset& dataset) {
  std::vector<int> predictions(dataset.size());
  const Matrix probs = predict_probs(model, dataset);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const double* p = probs.row(i);
    int best = 0;
    for (std::size_t j = 1; j < probs.cols; ++j) {
      if (p[j] > p[best]) best = static_cast<int>(j);  // ties keep the lowest index
    }
    predictions[i] = best;
  }
  return predictions;
}

Matrix predict_probs(const MlpModel& model, const LabeledDataset& dataset) {
  Matrix probs(dataset.size(), model.num_classes);
  for (std::size_t start = 0; start < dataset.size(); start += kEvalBatch) {
    const std::size_t count = std::min(kEvalBatch, dataset.size() - start);
    Matrix batch(count, dataset.dim());
    std::copy(dataset.features.row(start), dataset.features.row(start) + count * dataset.dim(),
              batch.data.begin());
    const ForwardCache cache = forward(model, batch);
    std::copy(cache.probs.data.begin(), cache.probs.data.end(), probs.row(start));
  }
  return probs;
}

namespace {

void write_tensor(std::ostream& out, const std::string& name, std::size_t rows,
                  std::size_t cols, const std::vector<double>& data) {
  out << "tensor " << name << ' ' << rows << ' ' << cols << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << std::hexfloat << data[i] << (i + 1 == data.size() ? '\n' : ' ');
  }
  if (data.empty()) out << '\n';
}

std::vector<double> read_tensor(std::istream& in, const std::string& expect_name,
                                std::size_t* rows, std::size_t* cols) {
  std::string word, name;
  in >> word >> name >> *rows >> *cols;
  if (word != "tensor" || name != expect_name) {
    throw FormatError("checkpoint: expected tensor '" + expect_name + "', got '" + name + "'");
  }
  std::vector<double> data(*rows * *cols);
  for (double& v : data) {
    std::string token;
    if (!(in >> token)) throw FormatError("checkpoint: truncated tensor " + expect_name);
    v = std::strtod(token.c_str(), nullptr);
  }
  return data;
}

}  // namespace

void save_checkpoint(const MlpModel& model, const std::string& path,
                     std::uint64_t seed, const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << "cdb-checkpoint v1\n";
  out << "dims " << model.input_dim << ' ' << model.hidden_dim << ' '
      << model.num_classes << '\n';
  out << "seed " << seed << '\n';
  out << "config_hash " << config_hash << '\n';
  out << "scales " << (model.has_scales() ? 1 : 0) << '\n';
  write_tensor(out, "w1", model.w1.rows, model.w1.cols, model.w1.data);
  write_tensor(out, "b1", 1, model.b1.size(), model.b1);
  write_tensor(out, "w2", model.w2.rows, model.w2.cols, model.w2.data);
  write_tensor(out, "b2", 1, model.b2.size(), model.b2);
  if (model.has_scales()) {
    write_tensor(out, "s", 1, model.classifier_scales.size(), model.classifier_scales);
  }
  if (!out) throw FormatError("write failed for " + path);
}

MlpModel load_checkpoint(const std::string& path, std::uint64_t* seed,
                         std::string* config_hash) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::string magic, version, word;
  in >> magic >> version;
  if (magic != "cdb-checkpoint" || version != "v1") {
    throw FormatError("not a cdb checkpoint: " + path);
  }
  MlpModel model;
  std::uint64_t stored_seed = 0;
  std::string stored_hash;
  int has_scales = 0;
  in >> word >> model.input_dim >> model.hidden_dim >> model.num_classes;
  if (word != "dims") throw FormatError("checkpoint: missing dims header");
  in >> word >> stored_seed;
  if (word != "seed") throw FormatError("checkpoint: missing seed header");
  in >> word >> stored_hash;
  if (word != "config_hash") throw FormatError("checkpoint: missing config_hash header");
  in >> word >> has_scales;
  if (word != "scales") throw FormatError("checkpoint: missing scales header");

  std::size_t rows = 0, cols = 0;
  model.w1.data = read_tensor(in, "w1", &rows, &cols);
  model.w1.rows = rows;
  model.w1.cols = cols;
  model.b1 = read_tensor(in, "b1", &rows, &cols);
  model.w2.data = read_tensor(in, "w2", &rows, &cols);
  model.w2.rows = rows;
  model.w2.cols = cols;
  model.b2 = read_tensor(in, "b2", &rows, &cols);
  if (has_scales) {
    model.classifier_scales = read_tensor(in, "s", &rows, &cols);
  }
  if (seed) *seed = stored_seed;
  if (config_hash) *config_hash = stored_hash;
  return model;
}

}  // namespace cdb
