#include "agne/metrics.hpp"

#include "support.hpp"

#include <doctest.h>

#include <numeric>

using namespace agne;
using namespace agne::testing;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Index>(v.size()));
  Index k = 0;
  for (double x : v) out(k++) = x;
  return out;
}

/// Block permutation of a stacked vector: block perm[i] of the output is
/// block i of the input.
Vec permute_blocks(const Vec& v, const std::vector<int>& perm) {
  const Index len = v.size() / static_cast<Index>(perm.size());
  Vec out(v.size());
  for (std::size_t i = 0; i < perm.size(); ++i)
    out.segment(perm[i] * len, len) = v.segment(static_cast<Index>(i) * len, len);
  return out;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("KKT residual examples") {
  const GameSpec g = single_player_game();
  const KktResidual r = kkt_residual(g, vec({0}), vec({0}));
  CHECK(r.feasibility == 1.0);
  CHECK(r.consensus == 0.0);
  CHECK(r.stationarity == 0.0);
  CHECK(r.total == 1.0);
  CHECK(kkt_residual(g, vec({1}), vec({-2})).total == 0.0);
  // grad = 2x + lambda = 2 at (1, 0); unbounded box, so the natural map is 2.
  CHECK(kkt_residual(g, vec({1}), vec({0})).stationarity == doctest::Approx(2.0));
}

TEST_CASE("multiplier consensus uses the mean") {
  const GameSpec g = difference_game();
  std::vector<PlayerSpec> players;
  for (int i = 0; i < 2; ++i) {
    PlayerSpec p = g.player(i);
    p.coupling = Mat::Zero(2, 1);
    p.offset = Vec::Zero(2);
    players.push_back(p);
  }
  const GameSpec g2(players, 2);
  const KktResidual r = kkt_residual(g2, vec({0, 0}), vec({1, 0, -1, 0}));
  CHECK(r.consensus == doctest::Approx(1.0));
}

TEST_CASE("stationarity is the summed natural-map residual") {
  const QuadraticGame q = quadratic_game({2, 1}, 1, 61, false, 1.0);
  Rng rng(62);
  for (int t = 0; t < 20; ++t) {
    const Vec x = uniform_in_box(rng, q.game.lower_bounds(), q.game.upper_bounds());
    const Vec lam = uniform_vec(rng, 2, -1, 1);
    const double mean = lam.mean();
    const Vec grad = q.Q * x + q.q;
    double expected = 0.0;
    for (int i = 0; i < 2; ++i) {
      const int off = q.game.offset(i), d = q.game.dim(i);
      const Vec g = grad.segment(off, d) + q.game.player(i).coupling.transpose() * Vec::Constant(1, mean);
      expected += (x.segment(off, d) - clamp(x.segment(off, d) - g, Vec::Constant(d, -1), Vec::Constant(d, 1))).norm();
    }
    const KktResidual r = kkt_residual(q.game, x, lam);
    CHECK(r.stationarity == doctest::Approx(expected).epsilon(1e-12));
    Vec balance = -q.game.total_offset();
    for (int i = 0; i < 2; ++i) balance += q.game.player(i).coupling * x.segment(q.game.offset(i), q.game.dim(i));
    CHECK(r.feasibility == doctest::Approx(balance.norm()).epsilon(1e-12));
    CHECK(r.total == std::max({r.feasibility, r.consensus, r.stationarity}));
  }
}

TEST_CASE("estimate consensus") {
  CHECK(pdi_consensus_error(vec({1, 1, 3, 1}), 2) == doctest::Approx(1.0));
  const Vec x = vec({0.2, -3, 4});
  CHECK(pdi_consensus_error(x.replicate(5, 1), 5) == 0.0);
  Rng rng(63);
  const Vec v = uniform_vec(rng, 4 * 3, -1, 1);
  CHECK(pdi_consensus_error(permute_blocks(v, {2, 0, 3, 1}), 4) == doctest::Approx(pdi_consensus_error(v, 4)));
  CHECK(max_deviation_from_mean(permute_blocks(v, {1, 3, 0, 2}), 4) ==
        doctest::Approx(max_deviation_from_mean(v, 4)));
}

TEST_CASE("relative error") {
  const Vec ref = vec({3, 4});
  CHECK(relative_error(ref, ref) == 0.0);
  CHECK(relative_error(2 * ref, ref) == doctest::Approx(1.0));
  CHECK(relative_error(Vec::Zero(2), ref) == doctest::Approx(1.0));
  CHECK_THROWS_AS(relative_error(ref, Vec::Zero(2)), Error);
  CHECK_THROWS_AS(relative_error(ref, Vec::Zero(3)), Error);
}

TEST_CASE("metrics are nonnegative and invariant under relabeling") {
  // Three identical scalar players with a shared coupling row; permuting
  // players permutes x and lambda consistently.
  std::vector<PlayerSpec> players;
  for (int i = 0; i < 3; ++i) {
    PlayerSpec p;
    p.dim = 1;
    p.gradient = [i](const Vec& x) { return Vec::Constant(1, 2.0 * x(i) + 0.5 * (x.sum() - x(i))); };
    p.box_lo = Vec::Constant(1, 0.0);
    p.box_hi = Vec::Constant(1, 1.0);
    p.coupling = Mat::Ones(1, 1);
    p.offset = Vec::Constant(1, 0.4);
    players.push_back(p);
  }
  const GameSpec g(players, 1);
  Rng rng(64);
  const std::vector<int> perm{2, 0, 1};
  for (int t = 0; t < 20; ++t) {
    const Vec x = uniform_vec(rng, 3, 0, 1);
    const Vec lam = uniform_vec(rng, 3, -1, 1);
    const KktResidual a = kkt_residual(g, x, lam);
    const KktResidual b = kkt_residual(g, permute_blocks(x, perm), permute_blocks(lam, perm));
    CHECK(a.feasibility >= 0.0);
    CHECK(a.consensus >= 0.0);
    CHECK(a.stationarity >= 0.0);
    CHECK(a.feasibility == doctest::Approx(b.feasibility));
    CHECK(a.consensus == doctest::Approx(b.consensus));
    CHECK(a.stationarity == doctest::Approx(b.stationarity));
  }
}

}  // TEST_SUITE
