#include "rkhspi/experiment.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "rkhspi/care.h"
#include "rkhspi/errors.h"
#include "rkhspi/kernel.h"
#include "rkhspi/policy_iteration.h"
#include "rkhspi/problems.h"
#include "rkhspi/sampling.h"

#ifndef RKHSPI_VERSION
#define RKHSPI_VERSION "unknown"
#endif

namespace rkhspi {

namespace {

using nlohmann::json;

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T ParseNumber(std::string_view key, std::string_view text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("invalid value '" + std::string(text) + "' for " +
                      std::string(key));
  }
  return value;
}

int ParseInt(std::string_view key, std::string_view text) {
  return ParseNumber<int>(key, text);
}

double ParseDouble(std::string_view key, std::string_view text) {
  const double v = ParseNumber<double>(key, text);
  if (!std::isfinite(v)) {
    throw ConfigError("non-finite value for " + std::string(key));
  }
  return v;
}

struct KeySpec {
  const char* key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<json(const ExperimentConfig&)> get;
};

#define RKHSPI_STRING_KEY(name, field)                                  \
  KeySpec {                                                             \
    name,                                                               \
        [](ExperimentConfig& c, std::string_view v) { c.field = v; },   \
        [](const ExperimentConfig& c) { return json(c.field); }         \
  }
#define RKHSPI_INT_KEY(name, field)                                     \
  KeySpec {                                                             \
    name,                                                               \
        [](ExperimentConfig& c, std::string_view v) {                   \
          c.field = ParseInt(name, v);                                  \
        },                                                              \
        [](const ExperimentConfig& c) { return json(c.field); }         \
  }
#define RKHSPI_SEED_KEY(name, field)                                    \
  KeySpec {                                                             \
    name,                                                               \
        [](ExperimentConfig& c, std::string_view v) {                   \
          c.field = ParseNumber<std::uint64_t>(name, v);                \
        },                                                              \
        [](const ExperimentConfig& c) { return json(c.field); }         \
  }
#define RKHSPI_DOUBLE_KEY(name, field)                                  \
  KeySpec {                                                             \
    name,                                                               \
        [](ExperimentConfig& c, std::string_view v) {                   \
          c.field = ParseDouble(name, v);                               \
        },                                                              \
        [](const ExperimentConfig& c) { return json(c.field); }         \
  }

const std::vector<KeySpec>& KeySpecs() {
  static const std::vector<KeySpec> specs = {
      RKHSPI_STRING_KEY("problem.name", problem_name),
      RKHSPI_INT_KEY("problem.n_nodes", n_nodes),
      RKHSPI_STRING_KEY("kernel.name", kernel_name),
      RKHSPI_DOUBLE_KEY("kernel.gamma", gamma),
      RKHSPI_STRING_KEY("train.kind", train_kind),
      RKHSPI_INT_KEY("train.size", train_size),
      RKHSPI_SEED_KEY("train.seed", train_seed),
      RKHSPI_INT_KEY("test.size", test_size),
      RKHSPI_SEED_KEY("test.seed", test_seed),
      RKHSPI_INT_KEY("greedy.max_centers", greedy_max_centers),
      RKHSPI_DOUBLE_KEY("greedy.target_residual", greedy_target_residual),
      RKHSPI_INT_KEY("greedy.batch", greedy_batch),
      RKHSPI_DOUBLE_KEY("pi.epsilon", pi_epsilon),
      RKHSPI_INT_KEY("pi.max_iters", pi_max_iters),
      RKHSPI_STRING_KEY("verification.mode", verification_mode),
      RKHSPI_DOUBLE_KEY("verification.alpha", verification_alpha),
      RKHSPI_DOUBLE_KEY("verification.beta", verification_beta),
      RKHSPI_DOUBLE_KEY("verification.tol", verification_tol),
      RKHSPI_STRING_KEY("jitter", jitter),
      RKHSPI_STRING_KEY("output_dir", output_dir),
  };
  return specs;
}

#undef RKHSPI_STRING_KEY
#undef RKHSPI_INT_KEY
#undef RKHSPI_SEED_KEY
#undef RKHSPI_DOUBLE_KEY

void SetKey(ExperimentConfig& cfg, std::string_view key,
            std::string_view value) {
  if (key == "kernel.gamma_squared") {
    const double g2 = ParseDouble(key, value);
    if (!(g2 > 0.0)) throw ConfigError("kernel.gamma_squared must be > 0");
    cfg.gamma = std::sqrt(g2);
    return;
  }
  for (const auto& spec : KeySpecs()) {
    if (key == spec.key) {
      spec.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

bool OneOf(const std::string& v, std::initializer_list<const char*> options) {
  return std::any_of(options.begin(), options.end(),
                     [&](const char* o) { return v == o; });
}

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

std::ofstream OpenCsv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void WriteGreedyCsv(const std::filesystem::path& path,
                    const std::vector<GreedyTraceEntry>& trace) {
  auto out = OpenCsv(path);
  out << "n_centers,res_ghjb\n";
  for (const auto& e : trace) {
    out << e.n_centers << ',' << FormatDouble(e.res_ghjb) << '\n';
  }
}

void WriteCentersCsv(const std::filesystem::path& path,
                     const std::vector<Eigen::VectorXd>& centers, int dim) {
  auto out = OpenCsv(path);
  for (int j = 0; j < dim; ++j) out << (j ? ",x" : "x") << (j + 1);
  out << '\n';
  for (const auto& c : centers) {
    for (int j = 0; j < dim; ++j) {
      if (j) out << ',';
      out << FormatDouble(c(j));
    }
    out << '\n';
  }
}

void WritePiCsv(const std::filesystem::path& path,
                const std::vector<PIIterationRecord>& records) {
  auto out = OpenCsv(path);
  out << "iter,e_eta,res_ghjb,error_pi,feasible,worst_lower_violation,"
         "worst_upper_violation,rkhs_norm,jitter_used\n";
  for (const auto& r : records) {
    out << r.iter << ',' << FormatDouble(r.max_value_change) << ','
        << FormatDouble(r.res_ghjb) << ','
        << FormatDouble(r.error_pi.value_or(
               std::numeric_limits<double>::quiet_NaN()))
        << ',' << (r.verification.feasible ? 1 : 0) << ','
        << FormatDouble(r.verification.worst_lower_violation) << ','
        << FormatDouble(r.verification.worst_upper_violation) << ','
        << FormatDouble(r.rkhs_norm) << ',' << FormatDouble(r.jitter_used)
        << '\n';
  }
}

json ConfigJson(const ExperimentConfig& cfg) {
  json out = json::object();
  for (const auto& spec : KeySpecs()) out[spec.key] = spec.get(cfg);
  return out;
}

std::vector<Eigen::VectorXd> TrainingPool(const ExperimentConfig& cfg,
                                          const ControlProblem& p) {
  const Box& box = p.domain();
  if (cfg.train_kind == "grid") {
    if (box.dim() != 2 || box.lower(0) != box.lower(1) ||
        box.upper(0) != box.upper(1)) {
      throw ConfigError("train.kind = grid needs a square 2-D domain");
    }
    return Grid2d(box.lower(0), box.upper(0), cfg.train_size);
  }
  return SampleBox(box, static_cast<std::size_t>(cfg.train_size),
                   cfg.train_seed, true);
}

}  // namespace

const std::vector<std::string>& ConfigKeys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& spec : KeySpecs()) k.emplace_back(spec.key);
    return k;
  }();
  return keys;
}

ExperimentConfig ParseConfig(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = Trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const auto key = Trim(view.substr(0, eq));
    const auto value = Trim(view.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": empty key or value");
    }
    try {
      SetKey(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return ParseConfig(text.str());
}

void ApplyOverride(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  const std::string_view view(assignment);
  const auto key = Trim(view.substr(0, eq));
  const auto value = Trim(view.substr(eq + 1));
  if (key.empty() || value.empty()) {
    throw ConfigError("override '" + assignment + "' has an empty side");
  }
  SetKey(cfg, key, value);
}

void ValidateConfig(const ExperimentConfig& cfg) {
  const auto& problems = BenchmarkNames();
  if (std::find(problems.begin(), problems.end(), cfg.problem_name) ==
      problems.end()) {
    std::string msg = "unknown problem '" + cfg.problem_name + "'; valid:";
    for (const auto& n : problems) msg += " " + n;
    throw ConfigError(msg);
  }
  const auto& kernels = Kernel::ValidNames();
  if (std::find(kernels.begin(), kernels.end(), cfg.kernel_name) ==
      kernels.end()) {
    std::string msg = "unknown kernel '" + cfg.kernel_name + "'; valid:";
    for (const auto& n : kernels) msg += " " + n;
    throw ConfigError(msg);
  }
  if (cfg.n_nodes < 2) throw ConfigError("problem.n_nodes must be >= 2");
  if (!(cfg.gamma > 0.0) || !std::isfinite(cfg.gamma)) {
    throw ConfigError("kernel.gamma must be positive");
  }
  if (!OneOf(cfg.train_kind, {"grid", "uniform"})) {
    throw ConfigError("train.kind must be 'grid' or 'uniform'");
  }
  if (cfg.train_kind == "grid" && cfg.problem_name.rfind("heat", 0) == 0) {
    throw ConfigError("train.kind = grid is only available for 2-D problems");
  }
  if (cfg.train_size < (cfg.train_kind == "grid" ? 2 : 1)) {
    throw ConfigError("train.size too small");
  }
  if (cfg.test_size < 1) throw ConfigError("test.size must be > 0");
  if (cfg.greedy_max_centers < 1) {
    throw ConfigError("greedy.max_centers must be > 0");
  }
  if (!(cfg.greedy_target_residual >= 0.0)) {
    throw ConfigError("greedy.target_residual must be >= 0");
  }
  if (cfg.greedy_batch < 1) throw ConfigError("greedy.batch must be > 0");
  if (!(cfg.pi_epsilon > 0.0)) throw ConfigError("pi.epsilon must be > 0");
  if (cfg.pi_max_iters < 1) throw ConfigError("pi.max_iters must be > 0");
  if (!OneOf(cfg.verification_mode, {"psd", "bounds", "auto-lqr"})) {
    throw ConfigError(
        "verification.mode must be 'psd', 'bounds' or 'auto-lqr'");
  }
  if (cfg.verification_mode == "bounds" &&
      !(cfg.verification_alpha > 0.0 &&
        cfg.verification_beta >= cfg.verification_alpha)) {
    throw ConfigError("verification bounds need 0 < alpha <= beta");
  }
  if (!(cfg.verification_tol >= 0.0)) {
    throw ConfigError("verification.tol must be >= 0");
  }
  if (!OneOf(cfg.jitter, {"escalate", "none"})) {
    throw ConfigError("jitter must be 'escalate' or 'none'");
  }
  if (cfg.output_dir.empty()) throw ConfigError("output_dir is empty");
}

std::vector<std::pair<std::string, std::string>> ConfigEntries(
    const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& spec : KeySpecs()) {
    const json v = spec.get(cfg);
    out.emplace_back(spec.key,
                     v.is_string() ? v.get<std::string>() : v.dump());
  }
  return out;
}

std::string FormatConfig(const ExperimentConfig& cfg) {
  std::string text;
  for (const auto& [k, v] : ConfigEntries(cfg)) text += k + " = " + v + "\n";
  return text;
}

const std::vector<Preset>& Presets() {
  static const std::vector<Preset> presets = [] {
    std::vector<Preset> out;
    auto add = [&out](std::string name, std::string description,
                      const std::vector<std::string>& assignments) {
      ExperimentConfig cfg;
      cfg.output_dir = "results/" + name;
      for (const auto& a : assignments) ApplyOverride(cfg, a);
      out.push_back({std::move(name), std::move(description), cfg});
    };
    const std::vector<std::string> toy = {
        "problem.name=toy", "train.kind=grid", "train.size=100",
        "test.size=100", "greedy.max_centers=300",
        "greedy.target_residual=1e-5", "pi.max_iters=10",
        "verification.mode=auto-lqr"};
    auto with = [](std::vector<std::string> base,
                   std::initializer_list<std::string> extra) {
      base.insert(base.end(), extra);
      return base;
    };
    add("toy", "toy problem, Gaussian kernel, 100x100 grid",
        with(toy, {"kernel.name=gaussian", "kernel.gamma_squared=1.7"}));
    add("toy-quad", "toy problem, quadratic-product Gaussian kernel",
        with(toy, {"kernel.name=gaussian-quad", "kernel.gamma_squared=1.7"}));
    const std::vector<std::string> vdp = {
        "problem.name=vdp", "train.kind=grid", "train.size=100",
        "test.size=100", "greedy.max_centers=300",
        "greedy.target_residual=1e-6", "pi.epsilon=1e-7", "pi.max_iters=10",
        "verification.mode=psd"};
    add("vdp", "Van der Pol, Gaussian kernel",
        with(vdp, {"kernel.name=gaussian", "kernel.gamma_squared=1.7"}));
    add("vdp-quad", "Van der Pol, quadratic-product Gaussian kernel",
        with(vdp, {"kernel.name=gaussian-quad", "kernel.gamma_squared=1.1"}));
    const std::vector<std::string> heat = {
        "problem.n_nodes=50", "train.kind=uniform", "train.size=100000",
        "test.size=100", "greedy.max_centers=1500", "pi.max_iters=10",
        "verification.mode=psd"};
    add("heat-linear", "linear heat equation N=50, linear Matern product",
        with(heat, {"problem.name=heat-linear",
                    "kernel.name=linear-matern-quad", "kernel.gamma=5e-8"}));
    add("heat-linear-gauss", "linear heat equation N=50, Gaussian kernel",
        with(heat, {"problem.name=heat-linear", "kernel.name=gaussian",
                    "kernel.gamma=2.4494897427831781e-5"}));
    add("heat-nonlinear", "nonlinear heat equation N=50, linear Matern product",
        with(heat, {"problem.name=heat-nonlinear",
                    "kernel.name=linear-matern-quad", "kernel.gamma=4e-8"}));
    add("heat-nonlinear-gauss",
        "nonlinear heat equation N=50, Gaussian kernel",
        with(heat, {"problem.name=heat-nonlinear", "kernel.name=gaussian",
                    "kernel.gamma=2.4494897427831781e-5"}));
    add("heat-linear-n10", "linear heat equation at N=10 (fast)",
        {"problem.name=heat-linear", "problem.n_nodes=10",
         "kernel.name=linear-matern-quad", "kernel.gamma=5e-8",
         "train.kind=uniform", "train.size=2000", "test.size=100",
         "greedy.max_centers=100", "pi.max_iters=10",
         "verification.mode=psd"});
    return out;
  }();
  return presets;
}

const Preset& FindPreset(const std::string& name) {
  for (const auto& p : Presets()) {
    if (p.name == name) return p;
  }
  std::string msg = "unknown preset '" + name + "'; available:";
  for (const auto& p : Presets()) msg += " " + p.name;
  throw ConfigError(msg);
}

const char* Version() { return RKHSPI_VERSION; }

int RunExperiment(const ExperimentConfig& cfg, std::ostream& log) {
  try {
    ValidateConfig(cfg);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return 2;
  }

  const auto start = std::chrono::steady_clock::now();
  const std::filesystem::path dir(cfg.output_dir);
  json manifest;
  manifest["version"] = Version();
  manifest["config"] = ConfigJson(cfg);
  int status = 0;
  std::optional<std::string> abort_reason;

  auto finish = [&]() {
    const double wall = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    manifest["status"] = status == 0 ? "completed" : "aborted";
    manifest["abort_reason"] =
        abort_reason ? json(*abort_reason) : json(nullptr);
    manifest["wall_time_seconds"] = wall;
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    out << manifest.dump(2) << '\n';
    return status;
  };

  try {
    std::filesystem::create_directories(dir);
  } catch (const std::exception& e) {
    log << "cannot create output directory: " << e.what() << '\n';
    return 1;
  }

  try {
    const Benchmark bench = MakeBenchmark(cfg.problem_name, cfg.n_nodes);
    const ControlProblem& p = bench.problem;
    const Kernel kernel = Kernel::FromName(cfg.kernel_name, cfg.gamma);
    const JitterPolicy jitter = JitterPolicy::FromName(cfg.jitter);
    if (bench.heat) manifest["heat_k_condition"] = bench.heat->k_condition;

    GreedyConfig gc;
    gc.candidate_pool = TrainingPool(cfg, p);
    gc.max_centers = cfg.greedy_max_centers;
    gc.target_residual = cfg.greedy_target_residual;
    gc.batch = cfg.greedy_batch;
    log << "problem " << p.name() << " (N=" << p.state_dim()
        << "), kernel " << kernel.name() << ", gamma "
        << FormatDouble(cfg.gamma) << ", pool " << gc.candidate_pool.size()
        << '\n';

    const GreedyResult greedy =
        GreedySelect(p, kernel, bench.initial_policy, gc, jitter);
    WriteGreedyCsv(dir / "greedy.csv", greedy.trace);
    WriteCentersCsv(dir / "centers.csv", greedy.centers, p.state_dim());
    manifest["n_centers"] = greedy.centers.size();
    manifest["skipped_candidates"] = greedy.skipped_indices.size();
    if (!greedy.trace.empty()) {
      log << "greedy: " << greedy.centers.size() << " centers, Res-GHJB "
          << FormatDouble(greedy.trace.back().res_ghjb) << '\n';
    }

    PIConfig pc;
    pc.epsilon = cfg.pi_epsilon;
    pc.max_pi_iters = cfg.pi_max_iters;
    pc.verification_tol = cfg.verification_tol;
    pc.jitter = jitter;
    pc.training_points = gc.candidate_pool;
    if (cfg.verification_mode == "bounds") {
      pc.verification_mode =
          QuadraticBounds{cfg.verification_alpha, cfg.verification_beta};
    } else if (cfg.verification_mode == "auto-lqr") {
      if (!bench.care_solution) {
        throw ConfigError("auto-lqr bounds need a CARE solution");
      }
      const LqrBounds b = ComputeLqrBounds(*bench.care_solution);
      pc.verification_mode = QuadraticBounds{b.alpha, b.beta};
      manifest["verification_alpha"] = b.alpha;
      manifest["verification_beta"] = b.beta;
    }
    if (p.has_exact_value()) {
      pc.test_points =
          SampleBox(p.domain(), static_cast<std::size_t>(cfg.test_size),
                    cfg.test_seed, true);
      pc.reference = [&p](const Eigen::VectorXd& x) {
        return p.ExactValue(x);
      };
    }

    const PIResult result = RunRkhsPiOnCenters(p, kernel, bench.initial_policy,
                                               greedy.centers, pc);
    WritePiCsv(dir / "pi.csv", result.history.iterations);
    manifest["pi_iterations"] = result.history.iterations.size();
    manifest["hit_max_iters"] = result.history.hit_max_iters;
    for (const auto& r : result.history.iterations) {
      log << "iter " << r.iter << ": e_eta " << FormatDouble(r.max_value_change)
          << ", Res-GHJB " << FormatDouble(r.res_ghjb);
      if (r.error_pi) log << ", Error-PI " << FormatDouble(*r.error_pi);
      log << (r.verification.feasible ? "" : ", verification failed") << '\n';
    }
    if (result.history.abort_reason) {
      abort_reason = result.history.abort_reason;
      status = 1;
    }
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    abort_reason = e.what();
    status = 2;
  } catch (const std::exception& e) {
    log << "solver aborted: " << e.what() << '\n';
    abort_reason = e.what();
    status = 1;
  }
  if (abort_reason && status == 1) log << "aborted: " << *abort_reason << '\n';
  return finish();
}

}  // namespace rkhspi
