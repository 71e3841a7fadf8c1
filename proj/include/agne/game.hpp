#pragma once

#include "agne/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace agne {

/// Returns the gradient of one player's objective with respect to its own
/// decision, evaluated at a full decision profile (length n). Must be pure.
using GradientOracle = std::function<Vec(const Vec& profile)>;

struct PlayerSpec {
  int dim = 0;
  GradientOracle gradient;
  /// Box Omega_i = [box_lo, box_hi]; entries may be +-infinity.
  Vec box_lo;
  Vec box_hi;
  /// Coupling block A_i (m x dim) and offset b_i (length m).
  Mat coupling;
  Vec offset;
  /// Players whose decisions enter this player's objective directly.
  std::vector<int> depends_on;
};

/// Strong monotonicity modulus and Lipschitz constant of F over Omega.
struct FullInfoConstants {
  double upsilon = 0.0;
  double chi = 0.0;
};

/// Cocoercivity constant of R^T F (extended pseudo-gradient). The other
/// ingredient of the partial-information bound, the maximum degree d*, is a
/// property of the communication graph and is read from it.
struct PdiConstants {
  double chi_bar = 0.0;
};

/// N players with box constraints and the shared affine coupling
/// sum_i A_i x_i = sum_i b_i. Immutable once built.
class GameSpec {
 public:
  GameSpec(std::vector<PlayerSpec> players, int coupling_rows);

  int player_count() const { return static_cast<int>(players_.size()); }
  int coupling_rows() const { return rows_; }
  int total_dim() const { return total_dim_; }
  int dim(int i) const { return player(i).dim; }
  /// Start of player i's block inside a stacked profile.
  int offset(int i) const { return offsets_[static_cast<std::size_t>(i)]; }
  const PlayerSpec& player(int i) const { return players_[static_cast<std::size_t>(i)]; }

  Vec lower_bounds() const;
  Vec upper_bounds() const;
  /// [A_1, ..., A_N] (m x n).
  Mat stacked_coupling() const;
  /// sum_i b_i.
  Vec total_offset() const;

  std::optional<FullInfoConstants> full_info;
  std::optional<PdiConstants> pdi;

 private:
  std::vector<PlayerSpec> players_;
  int rows_;
  int total_dim_ = 0;
  std::vector<int> offsets_;
};

/// Gradient of player i at a full profile, with a dimension check.
Vec player_gradient(const GameSpec& game, int i, const Vec& profile);

/// F(x) = col(grad_{x_i} f_i(x)).
Vec pseudo_gradient(const GameSpec& game, const Vec& x);

/// Block i is grad_{x_i} f_i evaluated at player i's own estimate x^(i),
/// where `estimates` stacks x^(1), ..., x^(N) (length N*n).
Vec extended_pseudo_gradient(const GameSpec& game, const Vec& estimates);

/// Componentwise clamp onto [lo, hi]; infinite bounds are inactive.
Vec project_box(const Vec& lo, const Vec& hi, const Vec& v);

/// Projection of a full profile onto Omega = prod_i Omega_i.
Vec project_feasible(const GameSpec& game, const Vec& x);

/// Sampled monotonicity constants (heuristic, not certified: the true
/// modulus is at most upsilon and the true Lipschitz constant at least chi).
struct MonotonicityEstimate {
  double upsilon = 0.0;
  double chi = 0.0;
  /// min <X - Y, R^T(F(X) - F(Y))> / |F(X) - F(Y)|^2 over independent
  /// extended samples (each estimate x^(i) drawn from Omega).
  double chi_bar = 0.0;
  /// Same ratio restricted to consensual pairs X = 1 (x) x, Y = 1 (x) y.
  double chi_bar_consensus = 0.0;
  int pairs_used = 0;
};

/// Draws `sample_count` pairs uniformly from Omega (infinite sides are
/// replaced by a width-10 window) and takes min/max of the ratios.
/// Pairs with |x - y| or |F(x) - F(y)| numerically zero are skipped.
MonotonicityEstimate estimate_monotonicity(const GameSpec& game, int sample_count,
                                           std::uint64_t seed);

}  // namespace agne
