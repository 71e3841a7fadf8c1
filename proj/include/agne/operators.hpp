#pragma once

#include "agne/game.hpp"
#include "agne/graph.hpp"
#include "agne/state.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace agne {

/// Full decision information (players read the true decisions they depend
/// on) or partial decision information (players keep local estimates).
enum class InfoMode { Full, Partial };

std::string to_string(InfoMode mode);

struct StepSizes {
  double sigma = 0.0;  // multiplier step
  double gamma = 0.0;  // edge-variable step
  double tau = 0.0;    // decision step
  double eta = 0.0;    // relaxation
  double delta = 0.0;  // lower bound on the preconditioner spectrum
  double c = 0.9;      // safety factor of the relaxation bound, in (0, 1)
  int max_delay = 0;   // Psi
};

/// Relaxation bound for the asynchronous iteration and the averagedness
/// constant alpha of the forward-backward map.
struct EtaBound {
  double eta_max = 0.0;
  double alpha = 0.0;
};

/// eta_max = c N p_min / (2 Psi sqrt(p_min) + 1) * (4t - 1) / (2t) and
/// alpha = 2t / (4t - 1), where t = delta upsilon / chi^2. Throws when
/// delta does not exceed chi^2 / (2 upsilon).
EtaBound eta_bound(int players, double p_min, int max_delay, double c, double delta,
                   const FullInfoConstants& constants);

/// Partial-information variant with t = delta beta_E.
EtaBound eta_bound_pdi(int players, double p_min, int max_delay, double c, double delta,
                       double beta_e);

/// beta_E = 0.49 min{chi_bar, 1 / (2 d*)}: a cocoercivity constant of the
/// partial-information forward operator strictly inside the admissible range.
double pdi_cocoercivity(double chi_bar, int max_degree);

/// Outcome of step-size validation. `violations` names each failed condition;
/// `passed` iff it is empty.
struct StepCertificate {
  InfoMode mode = InfoMode::Full;
  bool passed = false;
  double lambda_min = 0.0;          // smallest eigenvalue of Phi - delta I
  double delta = 0.0;
  double delta_lower_bound = 0.0;   // chi^2/(2 upsilon) or 1/(2 beta_E)
  double beta_e = 0.0;              // partial information only
  double eta = 0.0;
  double eta_max = 0.0;
  double alpha = 0.0;
  double p_min = 0.0;
  int max_delay = 0;
  std::vector<std::string> violations;
};

/// Selection matrices R (own decisions) and S (estimates of others) acting
/// on stacked full-profile estimates.
struct SelectionMatrices {
  Mat own;     // R: n x N n
  Mat others;  // S: (N n - n) x N n
};

SelectionMatrices selection_matrices(const std::vector<int>& dims);

/// Result of applying the forward-backward map to one agent's coordinates.
struct AgentBlock {
  Vec lambda;  // lambda~_i
  /// Full information: x~_i (length n_i). Partial information: the whole
  /// estimate x~^(i) (length n) with the player's decision in block i.
  Vec x;
  std::vector<std::pair<int, Vec>> z;  // z~_l for every out-edge l
};

/// Splitting operators of the game over a communication graph.
///
/// The forward-backward maps are evaluated in closed form; the resolvent
/// inclusion they solve is only used as a test oracle.
class SplitOperators {
 public:
  SplitOperators(GameSpec game, CommGraph graph, InfoMode mode);

  const GameSpec& game() const { return game_; }
  const CommGraph& graph() const { return graph_; }
  InfoMode mode() const { return mode_; }

  int players() const { return game_.player_count(); }
  int rows() const { return game_.coupling_rows(); }
  /// Length of the flattened iterate.
  Index state_dim() const;

  /// V (x) I_m.
  Mat incidence_kron() const;
  /// L^e (x) I_m.
  Mat edge_laplacian_kron() const;
  /// L (x) I_n (partial information).
  Mat laplacian_kron() const;
  /// blkdiag(A_1, ..., A_N): (N m) x n.
  Mat coupling_blocks() const;
  /// col(b_1, ..., b_N).
  Vec coupling_offsets() const;

  /// Preconditioner Phi (full information) or Phi-bar (partial).
  Mat phi(const StepSizes& steps) const;

  /// The map T on a full-information state.
  GlobalState forward_backward(const GlobalState& state, const StepSizes& steps) const;
  /// The map T-bar on a partial-information state.
  PdiState forward_backward(const PdiState& state, const StepSizes& steps) const;

  /// Agent i's coordinates of T(view). Reads only what agent i may read:
  /// its own blocks, neighbors' multipliers and residuals, the decisions it
  /// depends on, and edge variables adjacent to its out-edges.
  AgentBlock agent_block(int i, const GlobalState& view, const StepSizes& steps) const;
  /// Agent i's coordinates of T-bar(view); reads neighbors' estimates.
  AgentBlock agent_block(int i, const PdiState& view, const StepSizes& steps) const;

 private:
  Vec lambda_tilde(int i, const Vec& lambda, const Vec& z, const Vec& residual_i,
                   const StepSizes& steps) const;
  Vec z_tilde(int l, const Vec& lambda, const Vec& z, const Vec& residual_head,
              const Vec& residual_tail, const StepSizes& steps) const;

  GameSpec game_;
  CommGraph graph_;
  InfoMode mode_;
  Vec lo_;
  Vec hi_;
};

/// Checks steps against the convergence conditions for the operator's mode:
/// finite positive steps, c in (0, 1), delta above its lower bound,
/// Phi - delta I positive semidefinite (smallest eigenvalue >= -1e-10), and
/// eta in (0, eta_max]. Requires the matching constants on the game.
StepCertificate validate_steps(const SplitOperators& ops, const StepSizes& steps, double p_min);

/// Requested steps; unset eta/delta mean "auto".
struct StepRequest {
  double sigma = 0.4;
  double gamma = 0.4;
  double tau = 0.4;
  std::optional<double> eta;
  std::optional<double> delta;
  double c = 0.9;
  int max_delay = 0;
  /// Halve sigma, gamma and tau together until Phi - delta I is PSD.
  bool halve = true;
};

struct ResolvedSteps {
  StepSizes steps;
  StepCertificate certificate;
  int halvings = 0;
};

/// Default delta is chi^2/upsilon (full) or 1/beta_E (partial); default eta
/// is eta_max. Step halving stops after 40 attempts; the certificate then
/// reports the remaining violation.
ResolvedSteps resolve_steps(const SplitOperators& ops, const StepRequest& request, double p_min);

}  // namespace agne
