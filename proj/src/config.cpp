#include "cdb/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "cdb/errors.hpp"

namespace cdb {

namespace {

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str(), path);
}

KeyValueConfig KeyValueConfig::parse_text(const std::string& text, const std::string& origin) {
  KeyValueConfig config;
  config.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected `key = value`");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    }
    config.values_[key] = value;
  }
  return config;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  values_[key] = trim(value);
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) {
  const std::string text = get_string(key, "");
  if (text.empty()) return fallback;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
  }
  return v;
}

int KeyValueConfig::get_int(const std::string& key, int fallback) {
  const std::string text = get_string(key, "");
  if (text.empty()) return fallback;
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + text + "'");
  }
  return v;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) {
  const std::string text = get_string(key, "");
  if (text.empty()) return fallback;
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("key '" + key + "': expected an unsigned integer, got '" + text + "'");
  }
  return v;
}

std::size_t KeyValueConfig::get_size(const std::string& key, std::size_t fallback) {
  return static_cast<std::size_t>(get_u64(key, fallback));
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) {
  const std::string text = get_string(key, "");
  if (text.empty()) return fallback;
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + text + "'");
}

std::vector<int> KeyValueConfig::get_int_list(const std::string& key,
                                              const std::vector<int>& fallback) {
  const std::string text = get_string(key, "");
  if (text.empty()) return fallback;
  std::vector<int> values;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const std::string stripped = trim(item);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(stripped.data(), stripped.data() + stripped.size(), v);
    if (ec != std::errc() || ptr != stripped.data() + stripped.size()) {
      throw ConfigError("key '" + key + "': expected integers, got '" + stripped + "'");
    }
    values.push_back(v);
  }
  return values;
}

void KeyValueConfig::require_all_consumed() const {
  std::vector<std::string> unknown;
  for (const auto& [key, value] : values_) {
    if (!consumed_.count(key)) unknown.push_back(key);
  }
  if (!unknown.empty()) {
    std::string msg = "unknown config key(s) in " + origin_ + ":";
    for (const auto& key : unknown) msg += " '" + key + "'";
    throw ConfigError(msg);
  }
}

std::string KeyValueConfig::canonical_text() const {
  std::string out;
  for (const auto& [key, value] : values_) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string config_hash(const KeyValueConfig& config) {
  const std::uint64_t hash = fnv1a64(config.canonical_text());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

const char* to_string(TauKind kind) {
  switch (kind) {
    case TauKind::fixed: return "fixed";
    case TauKind::linear: return "linear";
    case TauKind::polynomial: return "poly";
    case TauKind::logarithmic: return "log";
    case TauKind::sigmoidal: return "sigmoid";
  }
  return "?";
}

TauKind tau_kind_from_string(const std::string& name) {
  if (name == "fixed") return TauKind::fixed;
  if (name == "linear") return TauKind::linear;
  if (name == "poly" || name == "polynomial") return TauKind::polynomial;
  if (name == "log" || name == "logarithmic") return TauKind::logarithmic;
  if (name == "sigmoid" || name == "sigmoidal") return TauKind::sigmoidal;
  throw ConfigError("unknown tau kind '" + name +
                    "' (valid: fixed, linear, poly, log, sigmoid)");
}

void apply_tau_shorthand(const std::string& text, TauSchedule& schedule) {
  if (text.rfind("fixed:", 0) == 0) {
    schedule.kind = TauKind::fixed;
    const std::string value = text.substr(6);
    try {
      schedule.fixed_value = std::stod(value);
    } catch (const std::exception&) {
      throw ConfigError("bad fixed tau value '" + value + "'");
    }
    if (schedule.fixed_value < 0.0) throw ConfigError("fixed tau must be >= 0");
    return;
  }
  schedule.kind = tau_kind_from_string(text);
}

void apply_method_bundle(const std::string& method, LossSpec& loss, SamplerSpec& sampler) {
  if (method == "cdb_s") {
    loss.kind = LossKind::ce;
    sampler.kind = SamplerKind::cdb_s;
  } else if (method == "cfs" || method == "class_frequency") {
    loss.kind = LossKind::ce;
    sampler.kind = SamplerKind::class_frequency;
  } else if (method == "class_aware") {
    loss.kind = LossKind::ce;
    sampler.kind = SamplerKind::class_aware;
  } else {
    loss.kind = loss_kind_from_string(method);
    sampler.kind = SamplerKind::uniform;
  }
}

namespace {

DataSource data_source_from_string(const std::string& name) {
  if (name == "gaussian") return DataSource::gaussian;
  if (name == "idx") return DataSource::idx;
  if (name == "csv") return DataSource::csv;
  throw ConfigError("unknown data source '" + name + "' (valid: gaussian, idx, csv)");
}

DataProfile data_profile_from_string(const std::string& name) {
  if (name == "none") return DataProfile::none;
  if (name == "two_class") return DataProfile::two_class;
  if (name == "exponential") return DataProfile::exponential;
  throw ConfigError("unknown data profile '" + name + "' (valid: none, two_class, exponential)");
}

LrSchedule read_lr_schedule(KeyValueConfig& config, const std::string& prefix) {
  LrSchedule schedule;
  const std::string kind = config.get_string(prefix + ".lr_schedule", "constant");
  if (kind == "constant") {
    schedule.kind = LrKind::constant;
  } else if (kind == "step") {
    schedule.kind = LrKind::step;
  } else if (kind == "cosine") {
    schedule.kind = LrKind::cosine;
  } else {
    throw ConfigError("unknown lr schedule '" + kind + "' (valid: constant, step, cosine)");
  }
  schedule.milestones = config.get_int_list(prefix + ".lr_milestones", {});
  schedule.factor = config.get_double(prefix + ".lr_factor", 0.1);
  for (std::size_t i = 1; i < schedule.milestones.size(); ++i) {
    if (schedule.milestones[i] <= schedule.milestones[i - 1]) {
      throw ConfigError(prefix + ".lr_milestones must be strictly increasing");
    }
  }
  return schedule;
}

TauSchedule read_tau_schedule(KeyValueConfig& config, const std::string& prefix) {
  TauSchedule schedule;
  const std::string kind = config.get_string(prefix + ".kind", "fixed");
  apply_tau_shorthand(kind, schedule);
  schedule.fixed_value = config.get_double(prefix + ".fixed", schedule.fixed_value);
  schedule.t_max = config.get_double(prefix + ".t_max", 5.0);
  schedule.epsilon = config.get_double(prefix + ".epsilon", 0.01);
  schedule.poly_p = config.get_int(prefix + ".poly_p", 2);
  schedule.update_interval = config.get_int(prefix + ".interval", 1);
  if (schedule.fixed_value < 0.0) throw ConfigError(prefix + ".fixed must be >= 0");
  if (schedule.t_max <= 0.0) throw ConfigError(prefix + ".t_max must be positive");
  if (schedule.epsilon <= 0.0) throw ConfigError(prefix + ".epsilon must be positive");
  if (schedule.poly_p < 2) throw ConfigError(prefix + ".poly_p must be >= 2");
  if (schedule.update_interval < 1) throw ConfigError(prefix + ".interval must be >= 1");
  return schedule;
}

}  // namespace

ExperimentConfig build_experiment_config(KeyValueConfig& config) {
  ExperimentConfig experiment;
  experiment.id = config.get_string("experiment.id", "exp");
  experiment.output_root = config.get_string("experiment.output_root", "runs");
  experiment.seed = config.get_u64("experiment.seed", 1);

  DataSpec& data = experiment.data;
  data.dir = config.get_string("data.dir", "");
  data.source = data_source_from_string(config.get_string("data.source", "gaussian"));
  data.idx_images = config.get_string("data.idx.images", "");
  data.idx_labels = config.get_string("data.idx.labels", "");
  data.csv_path = config.get_string("data.csv.path", "");
  data.gaussian_classes = config.get_int("data.gaussian.classes", 2);
  data.gaussian_dims = config.get_int("data.gaussian.dims", 8);
  data.gaussian_per_class = config.get_size("data.gaussian.per_class", 1000);
  data.gaussian_separation = config.get_double("data.gaussian.separation", 2.0);
  data.profile = data_profile_from_string(config.get_string("data.profile", "none"));
  data.head_ratio = config.get_double("data.two_class.head_ratio", 0.99);
  data.head_class = config.get_int("data.two_class.head_class", 0);
  data.tail_class = config.get_int("data.two_class.tail_class", 1);
  data.two_class_total = config.get_size("data.two_class.total", 5000);
  data.mu = config.get_double("data.exponential.mu", 0.01);
  data.n_max = config.get_size("data.exponential.n_max", 450);
  data.val_per_class = config.get_size("data.val_per_class", 0);
  data.test_per_class = config.get_size("data.test_per_class", 0);

  TrainConfig& train = experiment.train;
  train.seed = experiment.seed;
  const std::string method = config.get_string("train.method", "");
  if (!method.empty()) {
    apply_method_bundle(method, train.loss, train.sampler);
  }
  const std::string loss_name = config.get_string("train.loss", "");
  if (!loss_name.empty()) train.loss.kind = loss_kind_from_string(loss_name);
  const std::string sampler_name = config.get_string("train.sampler", "");
  if (!sampler_name.empty()) train.sampler.kind = sampler_kind_from_string(sampler_name);
  train.epochs = config.get_int("train.epochs", 40);
  train.batch_size = config.get_int("train.batch_size", 64);
  train.lr = config.get_double("train.lr", 0.1);
  train.momentum = config.get_double("train.momentum", 0.9);
  train.weight_decay = config.get_double("train.weight_decay", 1e-4);
  train.lr_schedule = read_lr_schedule(config, "train");
  train.hidden_dim = config.get_size("train.hidden_dim", 64);
  train.loss.gamma = config.get_double("train.gamma", 1.0);
  train.sampler.floor = config.get_double("train.sampler_floor", -1.0);
  train.sampler.epoch_size = config.get_size("train.epoch_size", 0);
  train.log_hard_instances = config.get_bool("train.log_hard_instances", false);
  train.hard_threshold = config.get_double("train.hard_threshold", 0.8);
  train.tau = read_tau_schedule(config, "tau");
  train.many_threshold = config.get_size("eval.many_threshold", 100);
  train.few_threshold = config.get_size("eval.few_threshold", 20);
  train.head_k = config.get_size("eval.head_k", 5);

  if (train.epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (train.lr < 0.0) throw ConfigError("train.lr must be >= 0");
  if (train.momentum < 0.0 || train.momentum >= 1.0) {
    throw ConfigError("train.momentum must be in [0, 1)");
  }
  if (train.weight_decay < 0.0) throw ConfigError("train.weight_decay must be >= 0");
  if (train.loss.gamma < 0.0) throw ConfigError("train.gamma must be >= 0");
  for (int milestone : train.lr_schedule.milestones) {
    if (milestone < 1 || milestone >= train.epochs) {
      throw ConfigError("train.lr_milestones must lie in [1, train.epochs)");
    }
  }

  const std::string stage2_method = config.get_string("stage2.method", "none");
  if (stage2_method != "none") {
    Stage2Config stage2;
    if (stage2_method == "crt") {
      stage2.method = Stage2Method::crt;
    } else if (stage2_method == "lws") {
      stage2.method = Stage2Method::lws;
    } else {
      throw ConfigError("unknown stage2.method '" + stage2_method + "' (valid: none, crt, lws)");
    }
    const std::string bundle = config.get_string("stage2.train_method", "");
    if (!bundle.empty()) {
      apply_method_bundle(bundle, stage2.loss, stage2.sampler);
    }
    const std::string s2_loss = config.get_string("stage2.loss", "");
    if (!s2_loss.empty()) stage2.loss.kind = loss_kind_from_string(s2_loss);
    const std::string s2_sampler = config.get_string("stage2.sampler", "");
    if (!s2_sampler.empty()) stage2.sampler.kind = sampler_kind_from_string(s2_sampler);
    stage2.epochs = config.get_int("stage2.epochs", 10);
    stage2.lr = config.get_double("stage2.lr", 0.01);
    stage2.lr_schedule = read_lr_schedule(config, "stage2");
    stage2.loss.gamma = config.get_double("stage2.gamma", 1.0);
    stage2.sampler.floor = config.get_double("stage2.sampler_floor", -1.0);
    stage2.sampler.epoch_size = config.get_size("stage2.epoch_size", 0);
    stage2.tau = read_tau_schedule(config, "stage2.tau");
    if (stage2.epochs < 0) throw ConfigError("stage2.epochs must be >= 0");
    train.stage2 = stage2;
  } else {
    // Consume the stage-2 schema so a template config with stage2 keys but
    // method none still validates.
    config.get_string("stage2.train_method", "");
    config.get_string("stage2.loss", "");
    config.get_string("stage2.sampler", "");
    config.get_int("stage2.epochs", 0);
    config.get_double("stage2.lr", 0.0);
    read_lr_schedule(config, "stage2");
    config.get_double("stage2.gamma", 0.0);
    config.get_double("stage2.sampler_floor", 0.0);
    config.get_size("stage2.epoch_size", 0);
    read_tau_schedule(config, "stage2.tau");
  }

  config.require_all_consumed();
  return experiment;
}

}  // namespace cdb
