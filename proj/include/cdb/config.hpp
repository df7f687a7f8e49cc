#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cdb/trainer.hpp"

namespace cdb {

inline constexpr const char* kToolkitVersion = "0.1.0";

// Flat namespaced key-value config (`train.lr = 0.1` per line, `#` comments).
// Typed getters mark keys consumed; anything left unconsumed is an unknown
// key and a config error.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_text(const std::string& text, const std::string& origin = "<text>");

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  int get_int(const std::string& key, int fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  std::size_t get_size(const std::string& key, std::size_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback);

  // Throws listing every key that no getter asked for.
  void require_all_consumed() const;

  // Sorted `key = value` lines; input to the config hash.
  std::string canonical_text() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
  std::string origin_;
};

std::uint64_t fnv1a64(const std::string& text);
std::string config_hash(const KeyValueConfig& config);  // 16 hex chars

enum class DataSource { gaussian, idx, csv };
enum class DataProfile { none, two_class, exponential };

struct DataSpec {
  std::string dir;  // where prepare writes and train reads the splits
  DataSource source = DataSource::gaussian;
  std::string idx_images;
  std::string idx_labels;
  std::string csv_path;
  int gaussian_classes = 2;
  int gaussian_dims = 8;
  std::size_t gaussian_per_class = 1000;
  double gaussian_separation = 2.0;
  DataProfile profile = DataProfile::none;
  double head_ratio = 0.99;
  int head_class = 0;
  int tail_class = 1;
  std::size_t two_class_total = 5000;
  double mu = 0.01;
  std::size_t n_max = 450;
  std::size_t val_per_class = 0;
  std::size_t test_per_class = 0;
};

struct ExperimentConfig {
  std::string id = "exp";
  std::string output_root = "runs";
  std::uint64_t seed = 1;
  DataSpec data;
  TrainConfig train;
};

// Parses the whole schema (experiment.*, data.*, train.*, tau.*, stage2.*,
// eval.*) with overrides applied first; rejects unknown keys.
ExperimentConfig build_experiment_config(KeyValueConfig& config);

// Expands a method shorthand into (loss, sampler):
//   ce, focal, cdb_w_ce, cdb_w_fl, inv_freq_ce -> that loss + uniform sampling
//   cdb_s, cfs, class_aware                    -> ce loss + that sampler
void apply_method_bundle(const std::string& method, LossSpec& loss, SamplerSpec& sampler);

// Parses "sigmoid", "linear", ..., or "fixed:1.5" into schedule fields.
void apply_tau_shorthand(const std::string& text, TauSchedule& schedule);

const char* to_string(TauKind kind);
TauKind tau_kind_from_string(const std::string& name);

}  // namespace cdb
