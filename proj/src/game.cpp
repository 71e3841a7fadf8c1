#include "agne/game.hpp"

#include "agne/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace agne {

GameSpec::GameSpec(std::vector<PlayerSpec> players, int coupling_rows)
    : players_(std::move(players)), rows_(coupling_rows) {
  if (players_.empty()) throw Error("game needs at least one player");
  if (rows_ < 0) throw Error("coupling row count must be nonnegative");
  for (std::size_t k = 0; k < players_.size(); ++k) {
    const PlayerSpec& p = players_[k];
    const std::string who = "player " + std::to_string(k);
    if (p.dim <= 0) throw Error(who + ": dimension must be positive");
    if (!p.gradient) throw Error(who + ": missing gradient oracle");
    if (p.box_lo.size() != p.dim || p.box_hi.size() != p.dim)
      throw Error(who + ": box bounds have wrong length");
    if ((p.box_lo.array() > p.box_hi.array()).any())
      throw Error(who + ": box lower bound exceeds upper bound");
    if (p.coupling.rows() != rows_ || p.coupling.cols() != p.dim)
      throw Error(who + ": coupling block must be m x n_i");
    if (p.offset.size() != rows_) throw Error(who + ": offset must have length m");
    offsets_.push_back(total_dim_);
    total_dim_ += p.dim;
  }
}

Vec GameSpec::lower_bounds() const {
  Vec lo(total_dim_);
  for (int i = 0; i < player_count(); ++i) lo.segment(offset(i), dim(i)) = player(i).box_lo;
  return lo;
}

Vec GameSpec::upper_bounds() const {
  Vec hi(total_dim_);
  for (int i = 0; i < player_count(); ++i) hi.segment(offset(i), dim(i)) = player(i).box_hi;
  return hi;
}

Mat GameSpec::stacked_coupling() const {
  Mat a(rows_, total_dim_);
  for (int i = 0; i < player_count(); ++i) a.middleCols(offset(i), dim(i)) = player(i).coupling;
  return a;
}

Vec GameSpec::total_offset() const {
  Vec b = Vec::Zero(rows_);
  for (const auto& p : players_) b += p.offset;
  return b;
}

Vec player_gradient(const GameSpec& game, int i, const Vec& profile) {
  Vec g = game.player(i).gradient(profile);
  if (g.size() != game.dim(i))
    throw Error("gradient oracle of player " + std::to_string(i) + " returned wrong length");
  return g;
}

Vec pseudo_gradient(const GameSpec& game, const Vec& x) {
  if (x.size() != game.total_dim()) throw Error("profile has wrong length");
  Vec f(game.total_dim());
  for (int i = 0; i < game.player_count(); ++i)
    f.segment(game.offset(i), game.dim(i)) = player_gradient(game, i, x);
  return f;
}

Vec extended_pseudo_gradient(const GameSpec& game, const Vec& estimates) {
  const int n = game.total_dim();
  if (estimates.size() != static_cast<Index>(n) * game.player_count())
    throw Error("stacked estimates have wrong length");
  Vec f(n);
  for (int i = 0; i < game.player_count(); ++i) {
    const Vec own_view = estimates.segment(static_cast<Index>(i) * n, n);
    f.segment(game.offset(i), game.dim(i)) = player_gradient(game, i, own_view);
  }
  return f;
}

Vec project_box(const Vec& lo, const Vec& hi, const Vec& v) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

Vec project_feasible(const GameSpec& game, const Vec& x) {
  return project_box(game.lower_bounds(), game.upper_bounds(), x);
}

namespace {

Vec sample_box(const Vec& lo, const Vec& hi, Rng& rng) {
  Vec v(lo.size());
  for (Index k = 0; k < lo.size(); ++k) {
    double a = lo[k];
    double b = hi[k];
    if (!std::isfinite(a) && !std::isfinite(b)) {
      a = -5.0;
      b = 5.0;
    } else if (!std::isfinite(a)) {
      a = b - 10.0;
    } else if (!std::isfinite(b)) {
      b = a + 10.0;
    }
    v[k] = rng.uniform(a, b);
  }
  return v;
}

/// Own-decision part R X of stacked estimates.
Vec own_blocks(const GameSpec& game, const Vec& stacked) {
  const int n = game.total_dim();
  Vec x(n);
  for (int i = 0; i < game.player_count(); ++i)
    x.segment(game.offset(i), game.dim(i)) =
        stacked.segment(static_cast<Index>(i) * n + game.offset(i), game.dim(i));
  return x;
}

}  // namespace

MonotonicityEstimate estimate_monotonicity(const GameSpec& game, int sample_count,
                                           std::uint64_t seed) {
  if (sample_count < 2) throw Error("monotonicity estimation needs at least 2 samples");
  constexpr double kTiny = 1e-14;
  const double inf = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  const Vec lo = game.lower_bounds();
  const Vec hi = game.upper_bounds();
  const int players = game.player_count();

  MonotonicityEstimate est;
  est.upsilon = inf;
  est.chi = 0.0;
  est.chi_bar = inf;
  est.chi_bar_consensus = inf;
  for (int s = 0; s < sample_count; ++s) {
    const Vec x = sample_box(lo, hi, rng);
    const Vec y = sample_box(lo, hi, rng);
    const Vec dx = x - y;
    const Vec df = pseudo_gradient(game, x) - pseudo_gradient(game, y);
    const double dx2 = dx.squaredNorm();
    const double df2 = df.squaredNorm();
    if (dx2 > kTiny) {
      est.upsilon = std::min(est.upsilon, dx.dot(df) / dx2);
      est.chi = std::max(est.chi, std::sqrt(df2 / dx2));
      ++est.pairs_used;
    }
    if (df2 > kTiny) {
      // For consensual stacks R^T F(1 (x) x) pairs with R(X - Y) = x - y.
      est.chi_bar_consensus = std::min(est.chi_bar_consensus, dx.dot(df) / df2);
    }

    Vec xs(static_cast<Index>(players) * game.total_dim());
    Vec ys(xs.size());
    for (int i = 0; i < players; ++i) {
      xs.segment(static_cast<Index>(i) * game.total_dim(), game.total_dim()) = sample_box(lo, hi, rng);
      ys.segment(static_cast<Index>(i) * game.total_dim(), game.total_dim()) = sample_box(lo, hi, rng);
    }
    const Vec dfe = extended_pseudo_gradient(game, xs) - extended_pseudo_gradient(game, ys);
    const double dfe2 = dfe.squaredNorm();
    if (dfe2 > kTiny)
      est.chi_bar = std::min(est.chi_bar, (own_blocks(game, xs) - own_blocks(game, ys)).dot(dfe) / dfe2);
  }
  return est;
}

}  // namespace agne
