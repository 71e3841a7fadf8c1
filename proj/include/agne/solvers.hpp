#pragma once

#include "agne/history.hpp"
#include "agne/metrics.hpp"
#include "agne/operators.hpp"
#include "agne/state.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace agne {

enum class Algorithm {
  Sydney,      // synchronous relaxed forward-backward
  Rbca,        // randomized block-coordinate, no delays
  Adagnes,     // asynchronous with bounded delays, full information
  AdagnesPdi,  // asynchronous with bounded delays, partial information
};

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);
InfoMode info_mode(Algorithm a);

/// Raised when a run is attempted with steps that failed validation.
class CertificateError : public Error {
 public:
  using Error::Error;
};

/// w <- w + eta (T w - w).
void sydney_step(GlobalState& state, const SplitOperators& ops, const StepSizes& steps);
/// Synchronous iteration of the partial-information map.
void sydney_step(PdiState& state, const SplitOperators& ops, const StepSizes& steps);

/// One randomized block-coordinate step: the sampled agent's coordinates
/// (lambda_i, x_i, z_l for its out-edges) move by eta (T w - w); all other
/// coordinates are untouched. Returns the active agent.
int rbca_step(GlobalState& state, const SplitOperators& ops, const StepSizes& steps,
              const ActivationSampler& sampler, Rng& activation_rng);

/// Per-agent block ids inside a VersionedHistory.
struct HistoryLayout {
  int players = 0;
  int edges = 0;
  int multiplier(int i) const { return i; }
  /// x_i (full information) or the estimate x^(i) (partial information).
  int decision(int i) const { return players + i; }
  /// Cached residual B_i (full information only).
  int residual(int i) const { return 2 * players + i; }
  int edge(int l) const { return 3 * players + l; }
};

/// Shared-memory model of the agents' input/output buffers: every block
/// written so far (bounded depth) plus the global iteration counter.
class AsyncBuffers {
 public:
  AsyncBuffers(const GlobalState& initial, const GameSpec& game, int edges, int max_delay);
  AsyncBuffers(const PdiState& initial, const GameSpec& game, int edges, int max_delay);

  const HistoryLayout& layout() const { return layout_; }
  VersionedHistory& history() { return history_; }
  const VersionedHistory& history() const { return history_; }
  /// Number of completed iterations; the current state has this version.
  std::int64_t iteration() const { return iteration_; }
  void advance() { ++iteration_; }

 private:
  HistoryLayout layout_;
  VersionedHistory history_;
  std::int64_t iteration_ = 0;
};

/// Statistics of the reads performed in one asynchronous step.
struct StepReport {
  int agent = -1;
  int max_delay = 0;
};

/// One ADAGNES activation: the sampled agent draws one delay per source
/// agent (shared by that agent's multiplier, decision and residual) and one
/// per edge variable it reads, assembles the delayed view from the buffers,
/// evaluates its coordinates of T on the view, relaxes its current values
/// by eta and writes them back. Self reads are current.
StepReport adagnes_step(GlobalState& state, AsyncBuffers& buffers, const SplitOperators& ops,
                        const StepSizes& steps, const ActivationSampler& sampler,
                        DelaySchedule& delays, Rng& activation_rng);

/// Partial-information activation: reads neighbors' (delayed) estimates and
/// multipliers and the edge variables adjacent to its out-edges.
StepReport adagnes_pdi_step(PdiState& state, AsyncBuffers& buffers, const SplitOperators& ops,
                            const StepSizes& steps, const ActivationSampler& sampler,
                            DelaySchedule& delays, Rng& activation_rng);

/// Metric columns of a trajectory row.
struct MetricRow {
  double kkt_total = 0.0;
  double kkt_feas = 0.0;
  double kkt_cons = 0.0;
  double kkt_stat = 0.0;
  double pdi_cons = 0.0;
  double rel_err = 0.0;  // NaN without a reference profile
  double disp = 0.0;     // |w_k - w_{k-1}| of the last step
};

struct TrajectoryRow {
  std::int64_t step = 0;
  int agent = -1;  // -1: every agent (synchronous) or the initial row
  std::int64_t agent_updates = 0;
  MetricRow metrics;
};

struct Trajectory {
  std::vector<TrajectoryRow> rows;
  /// Decision profile (R X in partial information) at every recorded row.
  std::vector<Vec> profiles;
  std::vector<std::int64_t> activations;  // per agent
  Vec final_state;                         // flattened
  Vec final_x;
  Vec final_lambda_mean;
  StepCertificate certificate;
  std::int64_t steps_taken = 0;
  bool converged = false;
  int max_observed_delay = 0;
  double wall_seconds = 0.0;
};

struct RunSettings {
  Algorithm algorithm = Algorithm::Sydney;
  StepSizes steps;
  StepCertificate certificate;
  std::vector<double> rates;  // empty: equal rates
  std::uint64_t activation_seed = 1;
  std::uint64_t delay_seed = 2;
  std::int64_t max_steps = 100000;
  /// Stop once kkt_total < tol (checked at recorded steps). An infinite
  /// tolerance runs exactly max_steps.
  double tol = 1e-8;
  std::int64_t record_every = 100;
  std::optional<Vec> reference;
};

/// Runs the configured algorithm from decision x0 (zero multipliers and edge
/// variables; zero estimates of others in partial information). Throws
/// CertificateError unless settings.certificate passed.
Trajectory run(const SplitOperators& ops, const RunSettings& settings, const Vec& x0);

/// Metric row of a full-information state.
MetricRow metrics_of(const GameSpec& game, const GlobalState& state, const std::optional<Vec>& reference);
MetricRow metrics_of(const GameSpec& game, const PdiState& state, const std::optional<Vec>& reference);

struct OracleSolution {
  Vec x;
  Vec lambda;               // mean of the local multipliers
  double consensus_error = 0.0;
  KktResidual residual;
  std::int64_t iterations = 0;
  GlobalState state;        // fixed point (Lambda, z, x)
  StepSizes steps;
};

/// Reference equilibrium: synchronous iteration with automatically resolved
/// steps from the projected midpoint of Omega until kkt_total <= tol.
/// Throws agne::Error if the budget runs out first.
OracleSolution oracle_gne(const GameSpec& game, const CommGraph& graph, double tol = 1e-10,
                          std::int64_t max_iterations = 2'000'000);

}  // namespace agne
