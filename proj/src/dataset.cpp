#include "cdb/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cdb/errors.hpp"
#include "cdb/rng.hpp"

namespace cdb {

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) {
    throw FormatError("unexpected end of file in " + path);
  }
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

std::ifstream open_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open " + path);
  }
  return in;
}

// Indices of each sample per class, in source row order.
std::vector<std::vector<std::size_t>> indices_by_class(const LabeledDataset& ds) {
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[ds.labels[i]].push_back(i);
  }
  return by_class;
}

// Copies the given source rows into a fresh dataset, optionally remapping
// labels. relabel < 0 keeps the source label.
LabeledDataset gather_rows(const LabeledDataset& source,
                           const std::vector<std::size_t>& rows,
                           const std::vector<int>& relabel, int num_classes) {
  LabeledDataset out;
  out.num_classes = num_classes;
  out.features = Matrix(rows.size(), source.dim());
  out.labels.reserve(rows.size());
  out.ids.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t src = rows[r];
    const double* from = source.features.row(src);
    std::copy(from, from + source.dim(), out.features.row(r));
    const int mapped = relabel.empty() ? source.labels[src] : relabel[src];
    out.labels.push_back(mapped);
    out.ids.push_back(source.ids[src]);
  }
  finalize_counts(out);
  return out;
}

}  // namespace

void finalize_counts(LabeledDataset& ds) {
  ds.class_counts.assign(ds.num_classes, 0);
  for (int label : ds.labels) {
    if (label < 0 || label >= ds.num_classes) {
      throw ConsistencyError("label " + std::to_string(label) +
                             " outside [0, " + std::to_string(ds.num_classes) + ")");
    }
    ++ds.class_counts[label];
  }
  if (ds.ids.empty() && ds.size() > 0) {
    ds.ids.resize(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) ds.ids[i] = i;
  }
}

std::vector<std::size_t> exponential_targets(const ImbalanceProfile& profile,
                                             int num_classes) {
  if (profile.kind != ProfileKind::exponential) {
    throw ConfigError("exponential_targets requires an exponential profile");
  }
  if (num_classes < 1) {
    throw ConfigError("exponential profile needs at least one class");
  }
  std::vector<std::size_t> targets(num_classes);
  if (num_classes == 1) {
    // Degenerate 0/0 exponent; defined as n_max.
    targets[0] = std::max<std::size_t>(1, profile.n_max);
    return targets;
  }
  for (int c = 0; c < num_classes; ++c) {
    const double exponent = static_cast<double>(c) / (num_classes - 1);
    const double raw = static_cast<double>(profile.n_max) * std::pow(profile.mu, exponent);
    // Round half-up, then clamp so every class keeps at least one sample.
    const auto rounded = static_cast<std::size_t>(std::floor(raw + 0.5));
    targets[c] = std::max<std::size_t>(1, rounded);
  }
  return targets;
}

LabeledDataset load_idx(const std::string& images_path,
                        const std::string& labels_path) {
  std::ifstream img = open_binary(images_path);
  const std::uint32_t img_magic = read_be32(img, images_path);
  if (img_magic != kIdxImageMagic) {
    throw FormatError("bad IDX image magic in " + images_path);
  }
  const std::uint32_t num_images = read_be32(img, images_path);
  const std::uint32_t rows = read_be32(img, images_path);
  const std::uint32_t cols = read_be32(img, images_path);

  std::ifstream lbl = open_binary(labels_path);
  const std::uint32_t lbl_magic = read_be32(lbl, labels_path);
  if (lbl_magic != kIdxLabelMagic) {
    throw FormatError("bad IDX label magic in " + labels_path);
  }
  const std::uint32_t num_labels = read_be32(lbl, labels_path);
  if (num_images != num_labels) {
    throw ConsistencyError("IDX pair disagrees: " + std::to_string(num_images) +
                           " images vs " + std::to_string(num_labels) + " labels");
  }

  const std::size_t pixels = std::size_t(rows) * cols;
  LabeledDataset ds;
  ds.features = Matrix(num_images, pixels);
  ds.labels.resize(num_images);

  std::vector<unsigned char> buf(pixels);
  int max_label = -1;
  for (std::uint32_t i = 0; i < num_images; ++i) {
    if (!img.read(reinterpret_cast<char*>(buf.data()), pixels)) {
      throw FormatError("truncated image data in " + images_path);
    }
    double* out = ds.features.row(i);
    for (std::size_t p = 0; p < pixels; ++p) {
      out[p] = buf[p] / 255.0;
    }
    unsigned char label;
    if (!lbl.read(reinterpret_cast<char*>(&label), 1)) {
      throw FormatError("truncated label data in " + labels_path);
    }
    ds.labels[i] = label;
    max_label = std::max(max_label, int(label));
  }
  ds.num_classes = max_label + 1;
  finalize_counts(ds);
  return ds;
}

LabeledDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw FormatError("cannot open " + path);
  }
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest = line;
    while (true) {
      const std::size_t comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() < 2) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected label and features");
    }
    int label = 0;
    {
      const std::string_view f = fields[0];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), label);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw FormatError(path + ":" + std::to_string(line_no) + ": non-integer label '" +
                          std::string(f) + "'");
      }
    }
    if (label < 0) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": negative label");
    }
    if (dim == 0 && labels.empty()) {
      dim = fields.size() - 1;
    } else if (fields.size() - 1 != dim) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": ragged row (" +
                        std::to_string(fields.size() - 1) + " features, expected " +
                        std::to_string(dim) + ")");
    }
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const std::string_view f = fields[i];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw FormatError(path + ":" + std::to_string(line_no) + ": bad feature '" +
                          std::string(f) + "'");
      }
      values.push_back(v);
    }
    labels.push_back(label);
  }

  LabeledDataset ds;
  if (labels.empty()) {
    return ds;  // empty dataset, num_classes 0; downstream ops reject it
  }
  ds.features = Matrix(labels.size(), dim);
  ds.features.data = std::move(values);
  ds.labels = std::move(labels);
  ds.num_classes = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
  finalize_counts(ds);
  return ds;
}

void save_csv(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw FormatError("cannot write " + path);
  }
  char buf[64];
  std::string line;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    line.clear();
    line += std::to_string(ds.labels[i]);
    const double* row = ds.features.row(i);
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      line += ',';
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), row[j]);
      line.append(buf, ptr);
    }
    line += '\n';
    out << line;
  }
  if (!out) {
    throw FormatError("write failed for " + path);
  }
}

LabeledDataset make_two_class_imbalance(const LabeledDataset& source,
                                        const ImbalanceProfile& profile,
                                        int head_class, int tail_class,
                                        std::uint64_t seed) {
  if (profile.kind != ProfileKind::two_class_head_ratio) {
    throw ConfigError("make_two_class_imbalance requires a two_class_head_ratio profile");
  }
  const double x = profile.head_ratio;
  const double total = static_cast<double>(profile.total_two_class);
  const auto head_target = static_cast<std::size_t>(std::llround(x * total));
  const auto tail_target = static_cast<std::size_t>(std::llround((1.0 - x) * total));

  auto by_class = indices_by_class(source);
  if (head_class < 0 || head_class >= source.num_classes ||
      tail_class < 0 || tail_class >= source.num_classes) {
    throw ConfigError("head/tail class outside the source label range");
  }
  if (by_class[head_class].size() < head_target) {
    throw CapacityError("head class " + std::to_string(head_class) + " has " +
                        std::to_string(by_class[head_class].size()) +
                        " samples, need " + std::to_string(head_target));
  }
  if (by_class[tail_class].size() < tail_target) {
    throw CapacityError("tail class " + std::to_string(tail_class) + " has " +
                        std::to_string(by_class[tail_class].size()) +
                        " samples, need " + std::to_string(tail_target));
  }

  Rng rng(seed);
  rng.shuffle(by_class[head_class]);
  rng.shuffle(by_class[tail_class]);

  std::vector<std::size_t> rows;
  rows.reserve(head_target + tail_target);
  rows.insert(rows.end(), by_class[head_class].begin(), by_class[head_class].begin() + head_target);
  rows.insert(rows.end(), by_class[tail_class].begin(), by_class[tail_class].begin() + tail_target);

  std::vector<int> relabel(source.size(), -1);
  for (std::size_t i : by_class[head_class]) relabel[i] = 0;
  for (std::size_t i : by_class[tail_class]) relabel[i] = 1;
  return gather_rows(source, rows, relabel, 2);
}

LabeledDataset make_exponential_longtail(const LabeledDataset& source,
                                         const ImbalanceProfile& profile,
                                         std::uint64_t seed) {
  const auto targets = exponential_targets(profile, source.num_classes);
  auto by_class = indices_by_class(source);
  for (int c = 0; c < source.num_classes; ++c) {
    if (by_class[c].size() < targets[c]) {
      throw CapacityError("class " + std::to_string(c) + " has " +
                          std::to_string(by_class[c].size()) + " samples, need " +
                          std::to_string(targets[c]));
    }
  }
  Rng rng(seed);
  std::vector<std::size_t> rows;
  for (int c = 0; c < source.num_classes; ++c) {
    rng.shuffle(by_class[c]);
    rows.insert(rows.end(), by_class[c].begin(), by_class[c].begin() + targets[c]);
  }
  return gather_rows(source, rows, {}, source.num_classes);
}

LabeledDataset make_gaussian_blobs(int num_classes, int dims,
                                   const std::vector<std::size_t>& per_class_counts,
                                   double class_separation, std::uint64_t seed) {
  if (num_classes < 2) throw ConfigError("make_gaussian_blobs needs at least 2 classes");
  if (dims < 1) throw ConfigError("make_gaussian_blobs needs at least 1 dimension");
  if (per_class_counts.size() != static_cast<std::size_t>(num_classes)) {
    throw ConfigError("per_class_counts length must equal num_classes");
  }
  for (std::size_t n : per_class_counts) {
    if (n < 1) throw ConfigError("every class needs at least 1 sample");
  }

  // Class c sits on axis (c mod D) at magnitude separation * (1 + c / D):
  // same-axis centers differ by >= separation, cross-axis pairs by more.
  std::size_t total = 0;
  for (std::size_t n : per_class_counts) total += n;

  LabeledDataset ds;
  ds.num_classes = num_classes;
  ds.features = Matrix(total, dims);
  ds.labels.reserve(total);

  Rng rng(seed);
  std::size_t row = 0;
  for (int c = 0; c < num_classes; ++c) {
    const int axis = c % dims;
    const double magnitude = class_separation * (1.0 + c / dims);
    for (std::size_t s = 0; s < per_class_counts[c]; ++s, ++row) {
      double* out = ds.features.row(row);
      for (int d = 0; d < dims; ++d) {
        out[d] = rng.next_gaussian() + (d == axis ? magnitude : 0.0);
      }
      ds.labels.push_back(c);
    }
  }
  finalize_counts(ds);
  return ds;
}

LabeledDataset filter_classes(const LabeledDataset& source,
                              const std::vector<int>& classes) {
  std::vector<int> relabel(source.num_classes, -1);
  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (classes[k] < 0 || classes[k] >= source.num_classes) {
      throw ConfigError("class " + std::to_string(classes[k]) + " outside the source label range");
    }
    relabel[classes[k]] = static_cast<int>(k);
  }
  std::vector<std::size_t> rows;
  std::vector<int> full_relabel(source.size(), -1);
  for (std::size_t i = 0; i < source.size(); ++i) {
    const int mapped = relabel[source.labels[i]];
    if (mapped >= 0) {
      rows.push_back(i);
      full_relabel[i] = mapped;
    }
  }
  return gather_rows(source, rows, full_relabel, static_cast<int>(classes.size()));
}

std::pair<LabeledDataset, LabeledDataset> split_balanced(
    const LabeledDataset& source, std::size_t per_class, std::uint64_t seed) {
  auto by_class = indices_by_class(source);
  for (int c = 0; c < source.num_classes; ++c) {
    if (by_class[c].size() < per_class) {
      throw CapacityError("class " + std::to_string(c) + " has " +
                          std::to_string(by_class[c].size()) + " samples, need " +
                          std::to_string(per_class));
    }
  }
  Rng rng(seed);
  std::vector<char> held(source.size(), 0);
  std::vector<std::size_t> held_rows;
  for (int c = 0; c < source.num_classes; ++c) {
    rng.shuffle(by_class[c]);
    for (std::size_t i = 0; i < per_class; ++i) {
      held[by_class[c][i]] = 1;
      held_rows.push_back(by_class[c][i]);
    }
  }
  std::vector<std::size_t> rest_rows;
  rest_rows.reserve(source.size() - held_rows.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (!held[i]) rest_rows.push_back(i);
  }
  return {gather_rows(source, held_rows, {}, source.num_classes),
          gather_rows(source, rest_rows, {}, source.num_classes)};
}

}  // namespace cdb
