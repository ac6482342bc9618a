#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace rkhspi {

/**
 * Effective parameters of one greedy + RKHS-PI run.
 *
 * Text form: one `key = value` per line, `#` starts a comment, blank lines
 * are ignored. Keys are the dotted names listed by ConfigKeys(); unknown
 * keys are an error. `kernel.gamma_squared = v` sets gamma = sqrt(v).
 */
struct ExperimentConfig {
  std::string problem_name = "toy";
  /// Collocation nodes; heat problems only.
  int n_nodes = 50;
  std::string kernel_name = "gaussian";
  double gamma = 1.3038404810405297;  // sqrt(1.7)
  /// "grid": train_size x train_size grid on the (2-D) domain;
  /// "uniform": train_size uniform samples.
  std::string train_kind = "grid";
  int train_size = 100;
  std::uint64_t train_seed = 1;
  int test_size = 100;
  std::uint64_t test_seed = 2;
  int greedy_max_centers = 300;
  double greedy_target_residual = 0.0;
  int greedy_batch = 1;
  double pi_epsilon = 1e-8;
  int pi_max_iters = 10;
  /// "psd", "bounds" (uses alpha/beta) or "auto-lqr" (alpha/beta from the
  /// CARE solution of the linearization).
  std::string verification_mode = "psd";
  double verification_alpha = 0.0;
  double verification_beta = 0.0;
  double verification_tol = 1e-10;
  std::string jitter = "escalate";
  std::string output_dir = "results";
};

/// Dotted key names in canonical order.
const std::vector<std::string>& ConfigKeys();

/// Throws ConfigError on syntax errors, unknown keys or bad values.
ExperimentConfig ParseConfig(const std::string& text);
ExperimentConfig LoadConfig(const std::string& path);

/// Applies one `key=value` assignment.
void ApplyOverride(ExperimentConfig& cfg, const std::string& assignment);

/// Range and name checks; throws ConfigError.
void ValidateConfig(const ExperimentConfig& cfg);

/// Every key with its effective value, in ConfigKeys() order.
std::vector<std::pair<std::string, std::string>> ConfigEntries(
    const ExperimentConfig& cfg);

/// Serializes to the text form accepted by ParseConfig.
std::string FormatConfig(const ExperimentConfig& cfg);

struct Preset {
  std::string name;
  std::string description;
  ExperimentConfig config;
};

const std::vector<Preset>& Presets();
/// Throws ConfigError naming the available presets.
const Preset& FindPreset(const std::string& name);

/**
 * Runs greedy selection and RKHS-PI and writes greedy.csv, centers.csv,
 * pi.csv and manifest.json into cfg.output_dir (created if missing).
 *
 * Returns 0 on completion, 1 when a solver aborted (the CSVs written so far
 * are kept), 2 on configuration errors. Progress goes to `log`.
 */
int RunExperiment(const ExperimentConfig& cfg, std::ostream& log);

/// Library version string.
const char* Version();

}  // namespace rkhspi
