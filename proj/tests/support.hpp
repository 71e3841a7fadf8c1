#pragma once

// Small games with known constants, random states, and oracles that rebuild
// the splitting operators from dense matrices. Nothing here calls the
// library's per-agent formulas, so the oracles are independent checks.

#include "agne/game.hpp"
#include "agne/graph.hpp"
#include "agne/operators.hpp"
#include "agne/rng.hpp"
#include "agne/state.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace agne::testing {

inline Vec uniform_vec(Rng& rng, Index n, double lo, double hi) {
  Vec v(n);
  for (Index k = 0; k < n; ++k) v(k) = rng.uniform(lo, hi);
  return v;
}

inline Vec uniform_in_box(Rng& rng, const Vec& lo, const Vec& hi) {
  Vec v(lo.size());
  for (Index k = 0; k < lo.size(); ++k) {
    const double a = std::isfinite(lo(k)) ? lo(k) : -5.0;
    const double b = std::isfinite(hi(k)) ? hi(k) : 5.0;
    v(k) = rng.uniform(a, b);
  }
  return v;
}

/// f(x) = x^2, A = 1, b = 1, Omega = R. KKT: 2x + lambda = 0, x = 1, so
/// (x*, lambda*) = (1, -2).
inline GameSpec single_player_game() {
  const double inf = std::numeric_limits<double>::infinity();
  PlayerSpec p;
  p.dim = 1;
  p.gradient = [](const Vec& x) { return Vec::Constant(1, 2.0 * x(0)); };
  p.box_lo = Vec::Constant(1, -inf);
  p.box_hi = Vec::Constant(1, inf);
  p.coupling = Mat::Ones(1, 1);
  p.offset = Vec::Ones(1);
  GameSpec g({p}, 1);
  g.full_info = FullInfoConstants{2.0, 2.0};
  g.pdi = PdiConstants{0.5};
  return g;
}

/// Two scalar players with f_i = (x_i - x_j)^2 and a zero coupling row.
inline GameSpec difference_game() {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<PlayerSpec> players;
  for (int i = 0; i < 2; ++i) {
    PlayerSpec p;
    p.dim = 1;
    p.gradient = [i](const Vec& x) { return Vec::Constant(1, 2.0 * (x(i) - x(1 - i))); };
    p.box_lo = Vec::Constant(1, -inf);
    p.box_hi = Vec::Constant(1, inf);
    p.coupling = Mat::Zero(1, 1);
    p.offset = Vec::Zero(1);
    p.depends_on = {1 - i};
    players.push_back(p);
  }
  return GameSpec(std::move(players), 1);
}

/// Affine game F(x) = Q x + q on boxes with random coupling A_i and a
/// feasible offset (b chosen from a point strictly inside the boxes).
/// Q = S + K with S symmetric positive definite and K skew, so
/// upsilon = lambda_min(S) and chi = |Q|_2 exactly. With `decoupled` the
/// players' objectives do not interact (Q block diagonal, K = 0), which
/// makes R^T F cocoercive with constant 1 / lambda_max(Q).
struct QuadraticGame {
  GameSpec game;
  Mat Q;
  Vec q;
};

inline QuadraticGame quadratic_game(const std::vector<int>& dims, int rows, std::uint64_t seed, bool decoupled = false,
                                    double box = 2.0) {
  Rng rng(seed);
  int n = 0;
  std::vector<int> offsets;
  for (int d : dims) {
    offsets.push_back(n);
    n += d;
  }
  Mat S(n, n);
  Mat K = Mat::Zero(n, n);
  {
    Mat G(n, n);
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < n; ++c) G(r, c) = rng.uniform(-1.0, 1.0);
    S = G.transpose() * G / n + 0.5 * Mat::Identity(n, n);
    for (Index r = 0; r < n; ++r)
      for (Index c = r + 1; c < n; ++c) {
        K(r, c) = rng.uniform(-0.5, 0.5);
        K(c, r) = -K(r, c);
      }
  }
  if (decoupled) {
    K.setZero();
    for (std::size_t i = 0; i < dims.size(); ++i)
      for (std::size_t j = 0; j < dims.size(); ++j)
        if (i != j) S.block(offsets[i], offsets[j], dims[i], dims[j]).setZero();
  }
  const Mat Q = S + K;
  const Vec q = uniform_vec(rng, n, -1.0, 1.0);

  const Vec interior = uniform_vec(rng, n, -0.5 * box, 0.5 * box);
  std::vector<PlayerSpec> players;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    PlayerSpec p;
    p.dim = dims[i];
    const int off = offsets[i];
    const int d = dims[i];
    p.gradient = [Q, q, off, d](const Vec& x) -> Vec { return Q.middleRows(off, d) * x + q.segment(off, d); };
    p.box_lo = Vec::Constant(d, -box);
    p.box_hi = Vec::Constant(d, box);
    p.coupling = Mat(rows, d);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < d; ++c) p.coupling(r, c) = rng.uniform(-1.0, 1.0);
    p.offset = p.coupling * interior.segment(off, d);
    for (std::size_t j = 0; j < dims.size(); ++j)
      if (j != i && !decoupled) p.depends_on.push_back(static_cast<int>(j));
    players.push_back(p);
  }
  GameSpec game(std::move(players), rows);
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  Eigen::JacobiSVD<Mat> svd(Q);
  game.full_info = FullInfoConstants{es.eigenvalues()(0), svd.singularValues()(0)};
  game.pdi = PdiConstants{1.0 / es.eigenvalues()(n - 1)};
  return {std::move(game), Q, q};
}

/// Dense stacked matrices of a split, assembled with Eigen's Kronecker
/// product straight from the incidence matrix and the players' blocks.
struct DenseSplit {
  Mat V;    // V (x) I_m
  Mat A;    // blkdiag(A_i)
  Vec b;    // col(b_i)
  Mat L;    // L (x) I_n
  Mat R;    // own-decision selector
  Mat Sel;  // others' estimates selector
  Vec lo;
  Vec hi;
};

inline DenseSplit dense_split(const GameSpec& game, const CommGraph& graph) {
  const int N = game.player_count();
  const int m = game.coupling_rows();
  const int n = game.total_dim();
  DenseSplit d;
  const Mat V0 = incidence_matrix(graph);
  d.V = Eigen::kroneckerProduct(V0, Mat::Identity(m, m)).eval();
  d.A = Mat::Zero(N * m, n);
  d.b = Vec(N * m);
  for (int i = 0; i < N; ++i) {
    d.A.block(i * m, game.offset(i), m, game.dim(i)) = game.player(i).coupling;
    d.b.segment(i * m, m) = game.player(i).offset;
  }
  d.L = Eigen::kroneckerProduct(Mat(V0 * V0.transpose()), Mat::Identity(n, n)).eval();
  // Row k of R picks entry offset(i) + c of block i (block i = x^(i)).
  d.R = Mat::Zero(n, N * n);
  d.Sel = Mat::Zero(N * n - n, N * n);
  int srow = 0;
  for (int i = 0; i < N; ++i)
    for (int k = 0; k < n; ++k) {
      const bool own = k >= game.offset(i) && k < game.offset(i) + game.dim(i);
      if (own)
        d.R(k, i * n + k) = 1.0;
      else
        d.Sel(srow++, i * n + k) = 1.0;
    }
  d.lo = game.lower_bounds();
  d.hi = game.upper_bounds();
  return d;
}

inline Vec clamp(const Vec& v, const Vec& lo, const Vec& hi) { return v.cwiseMax(lo).cwiseMin(hi); }

/// Full-information preconditioner from the dense blocks.
inline Mat dense_phi(const DenseSplit& d, const StepSizes& s) {
  const Index a = d.V.rows(), b = d.V.cols(), c = d.A.cols();
  Mat P = Mat::Zero(a + b + c, a + b + c);
  P.block(0, 0, a, a) = Mat::Identity(a, a) / s.sigma;
  P.block(a, a, b, b) = Mat::Identity(b, b) / s.gamma;
  P.block(a + b, a + b, c, c) = Mat::Identity(c, c) / s.tau;
  P.block(0, a, a, b) = d.V;
  P.block(a, 0, b, a) = d.V.transpose();
  P.block(0, a + b, a, c) = d.A;
  P.block(a + b, 0, c, a) = d.A.transpose();
  return P;
}

/// Partial-information preconditioner: A R in place of A.
inline Mat dense_phi_pdi(const DenseSplit& d, const StepSizes& s) {
  DenseSplit e = d;
  e.A = d.A * d.R;
  return dense_phi(e, s);
}

/// T from the stacked closed form written with dense matrices.
inline Vec dense_T(const GameSpec& game, const DenseSplit& d, const StepSizes& s, const Vec& w) {
  const Index a = d.V.rows(), b = d.V.cols(), c = d.A.cols();
  const Vec lam = w.head(a), z = w.segment(a, b), x = w.tail(c);
  const Vec lt = lam + s.sigma * (d.A * x + d.V * z - d.b);
  const Vec zt = z - s.gamma * d.V.transpose() * (2.0 * lt - lam);
  const Vec xt = clamp(x - s.tau * (pseudo_gradient(game, x) + d.A.transpose() * (2.0 * lt - lam)), d.lo, d.hi);
  Vec out(w.size());
  out << lt, zt, xt;
  return out;
}

/// T-bar from the stacked closed form written with dense matrices.
inline Vec dense_T_pdi(const GameSpec& game, const DenseSplit& d, const StepSizes& s, const Vec& w) {
  const Index a = d.V.rows(), b = d.V.cols(), c = d.R.cols();
  const Vec lam = w.head(a), z = w.segment(a, b), X = w.tail(c);
  const Vec Rx = d.R * X;
  const Vec LX = d.L * X;
  const Vec lt = lam + s.sigma * (d.A * Rx + d.V * z - d.b);
  const Vec zt = z - s.gamma * d.V.transpose() * (2.0 * lt - lam);
  const Vec xt = clamp(
      Rx - s.tau * (extended_pseudo_gradient(game, X) + d.A.transpose() * (2.0 * lt - lam) + d.R * LX), d.lo, d.hi);
  const Vec others = d.Sel * X - s.tau * d.Sel * LX;
  Vec out(w.size());
  out << lt, zt, d.R.transpose() * xt + d.Sel.transpose() * others;
  return out;
}

/// How far Tw is from solving -B w in A(Tw) + Phi (Tw - w).
struct InclusionResidual {
  double smooth = 0.0;  // largest entry of the multiplier and edge rows
  double cone = 0.0;    // largest normal-cone violation of the decision rows
};

/// Normal cone of a box at y: zero inside, (-inf, 0] at a lower face,
/// [0, inf) at an upper face (both when lo = hi).
inline double cone_violation(const Vec& r, const Vec& y, const Vec& lo, const Vec& hi) {
  double worst = 0.0;
  for (Index k = 0; k < r.size(); ++k) {
    const double scale = 1e-12 * std::max(1.0, std::abs(y(k)));
    const bool at_lo = std::isfinite(lo(k)) && y(k) <= lo(k) + scale;
    const bool at_hi = std::isfinite(hi(k)) && y(k) >= hi(k) - scale;
    double v = std::abs(r(k));
    if (at_lo && at_hi) v = 0.0;
    else if (at_lo) v = std::max(0.0, r(k));
    else if (at_hi) v = std::max(0.0, -r(k));
    worst = std::max(worst, v);
  }
  return worst;
}

/// Full information: A(w') = (-A x' - V z', V^T Lambda', A^T Lambda' + N(x'))
/// and B(w) = (b, 0, F(x)).
inline InclusionResidual inclusion_residual(const GameSpec& game, const DenseSplit& d, const StepSizes& s,
                                            const Vec& w, const Vec& tw) {
  const Index a = d.V.rows(), b = d.V.cols(), c = d.A.cols();
  const Vec P = dense_phi(d, s) * (tw - w);
  const Vec lt = tw.head(a), zt = tw.segment(a, b), xt = tw.tail(c);
  const Vec r_lam = -d.b - (-d.A * xt - d.V * zt) - P.head(a);
  const Vec r_z = -(d.V.transpose() * lt) - P.segment(a, b);
  const Vec r_x = -pseudo_gradient(game, w.tail(c)) - d.A.transpose() * lt - P.tail(c);
  InclusionResidual out;
  out.smooth = std::max(r_lam.cwiseAbs().maxCoeff(), b > 0 ? r_z.cwiseAbs().maxCoeff() : 0.0);
  out.cone = cone_violation(r_x, xt, d.lo, d.hi);
  return out;
}

/// Partial information: A-bar(W') = (0, 0, R^T N(R X')) + skew W' with
/// skew = [[0, -V, -A R], [V^T, 0, 0], [R^T A^T, 0, 0]], and
/// B-bar(W) = (b, 0, R^T F(X) + L X).
inline InclusionResidual inclusion_residual_pdi(const GameSpec& game, const DenseSplit& d, const StepSizes& s,
                                                const Vec& w, const Vec& tw) {
  const Index a = d.V.rows(), b = d.V.cols(), c = d.R.cols();
  const Mat AR = d.A * d.R;
  const Vec P = dense_phi_pdi(d, s) * (tw - w);
  const Vec lt = tw.head(a), zt = tw.segment(a, b), Xt = tw.tail(c);
  const Vec X = w.tail(c);
  const Vec r_lam = -d.b - (-d.V * zt - AR * Xt) - P.head(a);
  const Vec r_z = -(d.V.transpose() * lt) - P.segment(a, b);
  const Vec r_x = -(d.R.transpose() * extended_pseudo_gradient(game, X) + d.L * X) - AR.transpose() * lt - P.tail(c);
  InclusionResidual out;
  out.smooth = std::max(r_lam.cwiseAbs().maxCoeff(), b > 0 ? r_z.cwiseAbs().maxCoeff() : 0.0);
  // Others' rows carry no normal cone; own rows must lie in N(R X').
  out.smooth = std::max(out.smooth, (d.Sel * r_x).size() > 0 ? (d.Sel * r_x).cwiseAbs().maxCoeff() : 0.0);
  out.cone = cone_violation(d.R * r_x, d.R * Xt, d.lo, d.hi);
  return out;
}

inline double phi_norm(const Mat& phi, const Vec& v) { return std::sqrt(std::max(0.0, v.dot(phi * v))); }

/// Random full-information state: decisions in the box, multipliers and
/// edge variables uniform in [-1, 1].
inline GlobalState random_global_state(const GameSpec& game, const CommGraph& graph, Rng& rng) {
  const int m = game.coupling_rows();
  return make_global_state(game, uniform_vec(rng, game.player_count() * m, -1.0, 1.0),
                           uniform_vec(rng, graph.edge_count() * m, -1.0, 1.0),
                           uniform_in_box(rng, game.lower_bounds(), game.upper_bounds()));
}

/// Random partial-information state: every estimate drawn in the box.
inline PdiState random_pdi_state(const GameSpec& game, const CommGraph& graph, Rng& rng) {
  const int N = game.player_count();
  const int m = game.coupling_rows();
  PdiState s;
  s.lambda = uniform_vec(rng, N * m, -1.0, 1.0);
  s.z = uniform_vec(rng, graph.edge_count() * m, -1.0, 1.0);
  s.estimates = Vec(N * game.total_dim());
  for (int i = 0; i < N; ++i)
    s.estimates.segment(i * game.total_dim(), game.total_dim()) =
        uniform_in_box(rng, game.lower_bounds(), game.upper_bounds());
  return s;
}

}  // namespace agne::testing
