#include "agne/game.hpp"
#include "agne/task_game.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <limits>

using namespace agne;
using namespace agne::testing;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Index>(v.size()));
  Index k = 0;
  for (double x : v) out(k++) = x;
  return out;
}

/// Scalar players with F(x) = M x on [-1, 1]^2.
GameSpec linear_game(const Mat& M) {
  std::vector<PlayerSpec> players;
  for (int i = 0; i < 2; ++i) {
    PlayerSpec p;
    p.dim = 1;
    p.gradient = [M, i](const Vec& x) { return Vec::Constant(1, M.row(i).dot(x)); };
    p.box_lo = Vec::Constant(1, -1.0);
    p.box_hi = Vec::Constant(1, 1.0);
    p.coupling = Mat::Zero(1, 1);
    p.offset = Vec::Zero(1);
    p.depends_on = {1 - i};
    players.push_back(p);
  }
  return GameSpec(std::move(players), 1);
}

const TaskGame& benchmark() {
  static const TaskGame g = generate_task_game(kBenchmarkSeed, AllocationTopology::FigureOne);
  return g;
}

}  // namespace

TEST_SUITE("game") {

TEST_CASE("pseudo-gradient of the difference game") {
  const GameSpec g = difference_game();
  CHECK(pseudo_gradient(g, vec({1, 0})) == vec({2, -2}));
  CHECK(pseudo_gradient(g, vec({0.7, 0.7})) == vec({0, 0}));
}

TEST_CASE("extended pseudo-gradient") {
  const GameSpec g = difference_game();
  CHECK(extended_pseudo_gradient(g, vec({1, 2, 5, 0})) == vec({-2, -10}));
  const Vec x = vec({0.3, -1.2});
  Vec consensual(4);
  consensual << x, x;
  CHECK(extended_pseudo_gradient(g, consensual) == pseudo_gradient(g, x));

  const GameSpec one = single_player_game();
  CHECK(extended_pseudo_gradient(one, vec({3})) == vec({6}));
}

TEST_CASE("project_box") {
  CHECK(project_box(vec({0, 0}), vec({2, 2}), vec({3, -1})) == vec({2, 0}));
  CHECK(project_box(vec({0, 0}), vec({2, 2}), vec({0.5, 1.5})) == vec({0.5, 1.5}));
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(project_box(vec({-inf, 0}), vec({inf, inf}), vec({-1e300, -4})) == vec({-1e300, 0}));

  Rng rng(3);
  const Vec lo = vec({-1, 0, 2});
  const Vec hi = vec({1, 0.5, 3});
  for (int t = 0; t < 200; ++t) {
    const Vec u = uniform_vec(rng, 3, -5, 5);
    const Vec v = uniform_vec(rng, 3, -5, 5);
    const Vec pu = project_box(lo, hi, u);
    CHECK(project_box(lo, hi, pu) == pu);
    CHECK((pu - project_box(lo, hi, v)).norm() <= (u - v).norm());
    CHECK((pu.array() >= lo.array()).all());
    CHECK((pu.array() <= hi.array()).all());
  }
}

TEST_CASE("game construction checks dimensions") {
  GameSpec g = single_player_game();
  CHECK(g.total_dim() == 1);
  PlayerSpec p = g.player(0);
  p.coupling = Mat::Ones(2, 1);
  CHECK_THROWS_AS(GameSpec({p}, 1), Error);
  p = g.player(0);
  p.box_lo = Vec::Constant(1, 1.0);
  p.box_hi = Vec::Constant(1, 0.0);
  CHECK_THROWS_AS(GameSpec({p}, 1), Error);
}

TEST_CASE("monotonicity estimates of linear maps") {
  Mat I2 = 2.0 * Mat::Identity(2, 2);
  const MonotonicityEstimate id = estimate_monotonicity(linear_game(I2), 200, 1);
  CHECK(id.upsilon == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(id.chi == doctest::Approx(2.0).epsilon(1e-12));

  Mat M(2, 2);
  M << 2, 1, 0, 2;
  const MonotonicityEstimate e = estimate_monotonicity(linear_game(M), 500, 2);
  Eigen::JacobiSVD<Mat> svd(M);
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()));
  CHECK(e.chi <= svd.singularValues()(0) + 1e-12);
  CHECK(e.chi <= 2.618);
  CHECK(e.upsilon >= es.eigenvalues()(0) - 1e-12);
  CHECK(e.pairs_used > 0);
}

TEST_CASE("benchmark shape and sampling ranges") {
  const TaskGame& b = benchmark();
  const TaskAllocationParams& p = b.params;
  CHECK(b.game.player_count() == 14);
  CHECK(b.game.coupling_rows() == 8);
  CHECK(b.game.total_dim() == 56);
  for (int j = 0; j < 8; ++j) {
    CHECK(p.load(j) >= 1.0);
    CHECK(p.load(j) <= 2.0);
    CHECK(p.price_slope(j) >= 0.5);
    CHECK(p.price_slope(j) <= 1.0);
    CHECK(p.price_intercept(j) >= 4.0);
    CHECK(p.price_intercept(j) <= 9.0);
  }
  for (int i = 0; i < 14; ++i) {
    CHECK(p.cost_targets[i] >= 1.0);
    CHECK(p.cost_targets[i] <= 2.0);
    CHECK(p.cost_vectors[i].sum() == doctest::Approx(1.0));
    CHECK(p.cost_vectors[i].minCoeff() >= 0.0);
    for (int k = 0; k < 4; ++k) {
      CHECK(p.cost_weights[i](k) >= 0.5);
      CHECK(p.cost_weights[i](k) <= 1.5);
      CHECK(p.capacity[i](k) >= 1.0);
      CHECK(p.capacity[i](k) <= 2.0);
      CHECK(p.loss_factors[i](k) >= 0.5);
      CHECK(p.loss_factors[i](k) <= 1.0);
    }
    const Mat& S = p.cost_quadratic[i];
    CHECK((S - S.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(Eigen::SelfAdjointEigenSolver<Mat>(S).eigenvalues()(0) > 0.0);
    const Mat A = p.allocation(i);
    CHECK(A.rows() == 8);
    for (int k = 0; k < 4; ++k) CHECK((A.col(k).array() != 0.0).count() == 1);
    CHECK(A == b.game.player(i).coupling);
    CHECK(b.game.player(i).offset.isApprox(p.load / 15.0));
    CHECK(b.game.player(i).box_lo == Vec::Zero(4));
    CHECK(b.game.player(i).box_hi == p.capacity[i]);
  }
  CHECK(b.game.full_info->upsilon > 0.0);
  CHECK(b.game.full_info->chi >= b.game.full_info->upsilon);
  CHECK(b.game.pdi->chi_bar > 0.0);
}

TEST_CASE("benchmark gradient matches central finite differences") {
  const TaskGame& b = benchmark();
  Rng rng(77);
  const double h = 1e-6;
  for (int t = 0; t < 20; ++t) {
    const Vec x = uniform_in_box(rng, b.game.lower_bounds(), b.game.upper_bounds());
    const Vec F = pseudo_gradient(b.game, x);
    Vec fd(x.size());
    for (int i = 0; i < 14; ++i)
      for (int k = 0; k < 4; ++k) {
        const Index c = b.game.offset(i) + k;
        Vec up = x, down = x;
        up(c) += h;
        down(c) -= h;
        fd(c) = (task_objective(b.params, i, up) - task_objective(b.params, i, down)) / (2 * h);
      }
    CHECK((F - fd).norm() / F.norm() < 1e-5);
  }
}

TEST_CASE("generation is deterministic") {
  const TaskGame a = generate_task_game(kBenchmarkSeed, AllocationTopology::FigureOne, 100);
  const TaskGame c = generate_task_game(kBenchmarkSeed, AllocationTopology::FigureOne, 100);
  CHECK(to_json(a.params).dump() == to_json(c.params).dump());
  CHECK(a.game.full_info->upsilon == c.game.full_info->upsilon);
  CHECK(a.game.pdi->chi_bar == c.game.pdi->chi_bar);
}

TEST_CASE("random topology keeps the degree profile") {
  const TaskAllocationParams p = sample_task_params(4, AllocationTopology::Random);
  std::vector<int> served(8, 0);
  for (const auto& pair : p.pattern) {
    CHECK(pair[0] != pair[1]);
    ++served[pair[0]];
    ++served[pair[1]];
  }
  for (int j = 0; j < 8; ++j) CHECK(served[j] >= 1);
}

TEST_CASE("capacity margin and infeasible seeds") {
  for (std::uint64_t seed : {1u, 2u, 11u}) {
    const TaskAllocationParams p = sample_task_params(seed, AllocationTopology::FigureOne);
    Vec supply = Vec::Zero(8);
    for (int i = 0; i < 14; ++i) supply += p.allocation(i) * p.capacity[i];
    const Vec expected = supply - 14.0 * p.load / 15.0;
    CHECK((capacity_margin(p) - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(capacity_margin(sample_task_params(2, AllocationTopology::FigureOne)).minCoeff() < 0.0);
  CHECK_THROWS_AS(generate_task_game(2, AllocationTopology::FigureOne, 10), Error);
}

TEST_CASE("instance files reload bit-exactly") {
  const TaskGame& b = benchmark();
  const auto path = std::filesystem::temp_directory_path() / "agne_test_instance.json";
  save_instance(b, path.string());
  const TaskGame back = load_instance(path.string());
  std::filesystem::remove(path);
  CHECK(to_json(back.params).dump() == to_json(b.params).dump());
  CHECK(back.game.full_info->upsilon == b.game.full_info->upsilon);
  CHECK(back.game.full_info->chi == b.game.full_info->chi);
  CHECK(back.game.pdi->chi_bar == b.game.pdi->chi_bar);
  Rng rng(8);
  for (int t = 0; t < 10; ++t) {
    const Vec x = uniform_in_box(rng, b.game.lower_bounds(), b.game.upper_bounds());
    CHECK(pseudo_gradient(back.game, x) == pseudo_gradient(b.game, x));
  }
}

}  // TEST_SUITE
