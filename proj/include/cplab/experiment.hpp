#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "cplab/rates.hpp"

namespace cplab {

inline constexpr const char* kArtifactVersion = "0.1.0";

enum class ExperimentKind {
  tail,
  crossing,
  finite_size,
  mixing,
  influence,
  threshold_window,
  sandwich,
  coupling_audit,
  sweep
};

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s);

/// Invalid configuration; maps to the usage exit code.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// INI file read with Boost.PropertyTree:
///
///   experiment = tail
///   seed = 7
///   replicas = 200
///   [geometry]
///   n = 8, 16, 32
///   [params]
///   mode = q
///   values = 0.5, 0.6, 0.7
///
/// Every default is echoed by to_json.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::crossing;
  std::vector<int> n = {16};
  RateMode mode = RateMode::q;
  std::vector<double> values = {0.8};
  /// Upper coupling parameter for coupling_audit.
  double q_prime = 0.95;
  double alpha = 0.25;
  std::optional<double> delta;
  std::optional<double> delta1;
  std::optional<double> beta_prime;
  /// guard or tight.
  std::string rule = "guard";
  std::size_t replicas = 100;
  std::uint64_t seed = 1;
  double level = 0.95;
  int threads = 1;
  /// Path prefix: <output>.json, <output>.csv, <output>.trace.ndjson.
  std::string output = "result";
  bool trace = false;

  /// horizontal, vertical or cylinder.
  std::string event = "horizontal";
  long long tail_floor = 10;
  /// b_interior (B shrunk by floor(sqrt n)) or l.
  std::string tail_field = "b_interior";
  double eps_hat = 0.05;
  double window_eps = 0.25;
  int mixing_k = 2;
  int deep_scale = 0;
  bool per_member = false;

  /// Checks every value the experiment reads; throws ConfigError.
  void validate() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical form with all defaults; output, threads and trace included.
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const nlohmann::json& j);

/// FNV-1a of the canonical JSON without output, threads and trace, as 16 hex
/// digits.  These fields never change the metrics.
std::string config_hash(const ExperimentConfig& c);

struct RunResult {
  /// artifact_version, experiment, config_hash, config, metrics, timing.
  nlohmann::json record;
  std::string csv;
  /// One JSON document per line.
  std::vector<std::string> trace;
  /// Hard invariants broken during the run, with forensics.
  nlohmann::json violations = nlohmann::json::array();

  bool violated() const { return !violations.empty(); }
};

RunResult run_experiment(const ExperimentConfig& c);

/// The record without its timing block: identical for equal config and seed.
std::string result_body(const nlohmann::json& record);

struct WrittenFiles {
  std::filesystem::path json;
  std::filesystem::path csv;
  std::optional<std::filesystem::path> trace;
  std::optional<std::filesystem::path> forensics;
};

/// Atomic writes next to the output prefix.  Violations go to
/// <output>.violation.json.
WrittenFiles write_result(const ExperimentConfig& c, const RunResult& r);

struct ReplayVerdict {
  bool match = false;
  /// JSON patch from the stored metrics to the recomputed ones.
  nlohmann::json differences = nlohmann::json::array();
  std::string config_hash;
};

/// Re-runs the embedded config (threads optionally overridden) and compares
/// metrics exactly.  Throws ConfigError when config or seed is missing.
ReplayVerdict replay(const nlohmann::json& record, std::optional<int> threads = std::nullopt);
ReplayVerdict replay_file(const std::filesystem::path& path, std::optional<int> threads = std::nullopt);

}  // namespace cplab
