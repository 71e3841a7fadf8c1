#pragma once

#include "agne/solvers.hpp"
#include "agne/task_game.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace agne {

enum class ExecutionMode { Deterministic, Threaded };

std::string to_string(ExecutionMode m);

/// Everything needed to reproduce one run. Parsed from an INI file:
///
///   [game]       seed, topology (figure1|random), instance (path), samples
///   [graph]      type (ring|path|star|random|explicit), p, seed,
///                edges ("0-1 1-2 ..." for explicit, 0-based tail-head)
///   [algorithm]  name (sydney|rbca|adagnes|adagnes-pdi),
///                mode (deterministic|threaded)
///   [steps]      sigma, gamma, tau, eta (number|auto), delta (number|auto),
///                c, max_delay, halve (true|false)
///   [activation] rates (comma separated; empty means equal rates)
///   [seeds]      activation, delay, init
///   [stop]       max_steps, tol (number|inf), record_every
///   [reference]  enabled (true|false), tol
///   [output]     dir, name
///
/// Every key is optional. Relative paths resolve against the config file.
struct ExperimentConfig {
  std::optional<std::string> instance_path;
  std::uint64_t game_seed = kBenchmarkSeed;
  AllocationTopology topology = AllocationTopology::FigureOne;
  int estimate_samples = 1000;

  std::string graph_type = "ring";
  double graph_p = 0.3;
  std::uint64_t graph_seed = 1;
  std::vector<Edge> graph_edges;

  Algorithm algorithm = Algorithm::Sydney;
  ExecutionMode mode = ExecutionMode::Deterministic;

  StepRequest steps;
  std::vector<double> rates;

  std::uint64_t activation_seed = 1;
  std::uint64_t delay_seed = 2;
  std::uint64_t init_seed = 3;

  std::int64_t max_steps = 200000;
  double tol = 1e-8;
  std::int64_t record_every = 1000;

  bool reference = true;
  double reference_tol = 1e-10;

  std::string output_dir;  // empty: $AGNE_OUTPUT_DIR, else "."
  std::string output_name = "run";

  /// Normalized key = value echo of every field, for the metadata.
  std::string echo() const;
};

ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

/// Game, graph, operators, resolved steps and initial point of a config.
struct Experiment {
  ExperimentConfig config;
  TaskGame instance;
  CommGraph graph;
  SplitOperators ops;
  ResolvedSteps steps;
  double p_min = 0.0;
  Vec x0;
};

/// Builds the experiment; certificate failures are reported in
/// `steps.certificate`, not thrown.
Experiment prepare_experiment(const ExperimentConfig& config);

struct RunOutcome {
  Trajectory trajectory;
  std::optional<OracleSolution> reference;
};

/// Runs a prepared experiment (reference equilibrium first when enabled).
/// Throws CertificateError when the resolved steps are invalid.
RunOutcome run_experiment(const Experiment& experiment);

/// Output directory: config value, else $AGNE_OUTPUT_DIR, else ".".
std::string output_directory(const ExperimentConfig& config);

/// Columns: step, agent, agent_updates, kkt_total, kkt_feas, kkt_cons,
/// kkt_stat, pdi_cons, rel_err, disp. Doubles use 17 significant digits.
void write_trajectory_csv(const Trajectory& trajectory, const std::string& path);
std::string trajectory_csv(const Trajectory& trajectory);

nlohmann::json certificate_json(const StepCertificate& c);
nlohmann::json steps_json(const StepSizes& s);
/// Config echo, seeds, steps, certificate, timings and run summary.
nlohmann::json run_metadata(const Experiment& experiment, const RunOutcome& outcome);

}  // namespace agne
