#include "agne/operators.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace agne {

namespace {

constexpr double kPsdTolerance = 1e-10;
constexpr int kMaxHalvings = 40;

EtaBound bound_from_ratio(int players, double p_min, int max_delay, double c, double t) {
  if (!(t > 0.5)) throw Error("delta does not exceed its lower bound; the forward-backward map is not averaged");
  if (!(p_min > 0.0 && p_min <= 1.0)) throw Error("p_min must lie in (0, 1]");
  if (max_delay < 0) throw Error("maximum delay must be nonnegative");
  const double delay_factor = c * players * p_min / (2.0 * max_delay * std::sqrt(p_min) + 1.0);
  EtaBound b;
  b.eta_max = delay_factor * (4.0 * t - 1.0) / (2.0 * t);
  b.alpha = 2.0 * t / (4.0 * t - 1.0);
  return b;
}

/// a (x) I_k.
Mat kron_identity(const Mat& a, int k) {
  Mat out = Mat::Zero(a.rows() * k, a.cols() * k);
  for (Index r = 0; r < a.rows(); ++r)
    for (Index c = 0; c < a.cols(); ++c)
      if (a(r, c) != 0.0) out.block(r * k, c * k, k, k).diagonal().setConstant(a(r, c));
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::string to_string(InfoMode mode) { return mode == InfoMode::Full ? "full" : "partial"; }

EtaBound eta_bound(int players, double p_min, int max_delay, double c, double delta,
                   const FullInfoConstants& constants) {
  if (!(constants.upsilon > 0.0 && constants.chi > 0.0))
    throw Error("monotonicity constants must be positive");
  return bound_from_ratio(players, p_min, max_delay, c,
                          delta * constants.upsilon / (constants.chi * constants.chi));
}

EtaBound eta_bound_pdi(int players, double p_min, int max_delay, double c, double delta,
                       double beta_e) {
  if (!(beta_e > 0.0)) throw Error("beta_E must be positive");
  return bound_from_ratio(players, p_min, max_delay, c, delta * beta_e);
}

double pdi_cocoercivity(double chi_bar, int max_degree) {
  const double laplacian_part =
      max_degree > 0 ? 1.0 / (2.0 * max_degree) : std::numeric_limits<double>::infinity();
  return 0.49 * std::min(chi_bar, laplacian_part);
}

SelectionMatrices selection_matrices(const std::vector<int>& dims) {
  int n = 0;
  for (int d : dims) {
    if (d <= 0) throw Error("player dimensions must be positive");
    n += d;
  }
  const auto players = static_cast<Index>(dims.size());
  SelectionMatrices sel{Mat::Zero(n, players * n), Mat::Zero(players * n - n, players * n)};
  Index own_row = 0;
  Index other_row = 0;
  int offset = 0;
  for (Index i = 0; i < players; ++i) {
    const int d = dims[static_cast<std::size_t>(i)];
    for (int k = 0; k < n; ++k) {
      const bool own = k >= offset && k < offset + d;
      if (own)
        sel.own(own_row++, i * n + k) = 1.0;
      else
        sel.others(other_row++, i * n + k) = 1.0;
    }
    offset += d;
  }
  return sel;
}

SplitOperators::SplitOperators(GameSpec game, CommGraph graph, InfoMode mode)
    : game_(std::move(game)), graph_(std::move(graph)), mode_(mode) {
  if (game_.player_count() != graph_.node_count())
    throw Error("communication graph must have one node per player");
  lo_ = game_.lower_bounds();
  hi_ = game_.upper_bounds();
}

Index SplitOperators::state_dim() const {
  const Index duals = static_cast<Index>(players() + graph_.edge_count()) * rows();
  const Index primal = mode_ == InfoMode::Full ? game_.total_dim()
                                               : static_cast<Index>(players()) * game_.total_dim();
  return duals + primal;
}

Mat SplitOperators::incidence_kron() const {
  return kron_identity(incidence_matrix(graph_), rows());
}

Mat SplitOperators::edge_laplacian_kron() const {
  return kron_identity(edge_laplacian(graph_), rows());
}

Mat SplitOperators::laplacian_kron() const {
  return kron_identity(node_laplacian(graph_), game_.total_dim());
}

Mat SplitOperators::coupling_blocks() const {
  const int m = rows();
  Mat out = Mat::Zero(static_cast<Index>(players()) * m, game_.total_dim());
  for (int i = 0; i < players(); ++i)
    out.block(static_cast<Index>(i) * m, game_.offset(i), m, game_.dim(i)) = game_.player(i).coupling;
  return out;
}

Vec SplitOperators::coupling_offsets() const {
  const int m = rows();
  Vec b(static_cast<Index>(players()) * m);
  for (int i = 0; i < players(); ++i) b.segment(static_cast<Index>(i) * m, m) = game_.player(i).offset;
  return b;
}

Mat SplitOperators::phi(const StepSizes& steps) const {
  const Index nm = static_cast<Index>(players()) * rows();
  const Index mm = static_cast<Index>(graph_.edge_count()) * rows();
  Mat coupling = coupling_blocks();
  if (mode_ == InfoMode::Partial)
    coupling = coupling * selection_matrices([&] {
                 std::vector<int> dims;
                 for (int i = 0; i < players(); ++i) dims.push_back(game_.dim(i));
                 return dims;
               }())
                              .own;
  const Index np = coupling.cols();
  const Mat v = incidence_kron();

  Mat phi = Mat::Zero(nm + mm + np, nm + mm + np);
  phi.topLeftCorner(nm, nm).diagonal().setConstant(1.0 / steps.sigma);
  phi.block(nm, nm, mm, mm).diagonal().setConstant(1.0 / steps.gamma);
  phi.bottomRightCorner(np, np).diagonal().setConstant(1.0 / steps.tau);
  phi.block(0, nm, nm, mm) = v;
  phi.block(nm, 0, mm, nm) = v.transpose();
  phi.block(0, nm + mm, nm, np) = coupling;
  phi.block(nm + mm, 0, np, nm) = coupling.transpose();
  return phi;
}

Vec SplitOperators::lambda_tilde(int i, const Vec& lambda, const Vec& z, const Vec& residual_i,
                                 const StepSizes& steps) const {
  const int m = rows();
  Vec drive = residual_i;
  for (int l : graph_.incident_edges(i))
    drive += graph_.incidence(i, l) * z.segment(static_cast<Index>(l) * m, m);
  return lambda.segment(static_cast<Index>(i) * m, m) + steps.sigma * drive;
}

Vec SplitOperators::z_tilde(int l, const Vec& lambda, const Vec& z, const Vec& residual_head,
                            const Vec& residual_tail, const StepSizes& steps) const {
  const int m = rows();
  const Edge& e = graph_.edge(l);
  Vec coupling_term = residual_head - residual_tail;
  for (int q : graph_.edge_neighbors(l))
    coupling_term += edge_laplacian_entry(graph_, l, q) * z.segment(static_cast<Index>(q) * m, m);
  return z.segment(static_cast<Index>(l) * m, m) -
         steps.gamma * (lambda.segment(static_cast<Index>(e.head) * m, m) -
                        lambda.segment(static_cast<Index>(e.tail) * m, m)) -
         2.0 * steps.sigma * steps.gamma * coupling_term;
}

AgentBlock SplitOperators::agent_block(int i, const GlobalState& view, const StepSizes& steps) const {
  const int m = rows();
  const PlayerSpec& p = game_.player(i);
  const Index off = game_.offset(i);
  AgentBlock out;
  out.lambda = lambda_tilde(i, view.lambda, view.z, view.residual.segment(static_cast<Index>(i) * m, m), steps);
  const Vec lambda_i = view.lambda.segment(static_cast<Index>(i) * m, m);
  const Vec grad = player_gradient(game_, i, view.x);
  const Vec step = view.x.segment(off, p.dim) -
                   steps.tau * (grad + p.coupling.transpose() * (2.0 * out.lambda - lambda_i));
  out.x = project_box(p.box_lo, p.box_hi, step);
  for (int l : graph_.out_edges(i)) {
    const int h = graph_.edge(l).head;
    out.z.emplace_back(l, z_tilde(l, view.lambda, view.z,
                                  view.residual.segment(static_cast<Index>(h) * m, m),
                                  view.residual.segment(static_cast<Index>(i) * m, m), steps));
  }
  return out;
}

AgentBlock SplitOperators::agent_block(int i, const PdiState& view, const StepSizes& steps) const {
  const int m = rows();
  const int n = game_.total_dim();
  auto estimate = [&](int j) { return view.estimates.segment(static_cast<Index>(j) * n, n); };
  auto residual = [&](int j) -> Vec {
    const PlayerSpec& pj = game_.player(j);
    return pj.coupling * estimate(j).segment(game_.offset(j), pj.dim) - pj.offset;
  };

  const PlayerSpec& p = game_.player(i);
  const Index off = game_.offset(i);
  AgentBlock out;
  out.lambda = lambda_tilde(i, view.lambda, view.z, residual(i), steps);
  const Vec lambda_i = view.lambda.segment(static_cast<Index>(i) * m, m);

  const Vec own = estimate(i);
  Vec consensus = Vec::Zero(n);
  for (int j : graph_.neighbors(i)) consensus += own - estimate(j);
  const Vec grad = player_gradient(game_, i, own);

  out.x = own - steps.tau * consensus;
  const Vec step = own.segment(off, p.dim) -
                   steps.tau * (grad + p.coupling.transpose() * (2.0 * out.lambda - lambda_i) +
                                consensus.segment(off, p.dim));
  out.x.segment(off, p.dim) = project_box(p.box_lo, p.box_hi, step);

  for (int l : graph_.out_edges(i))
    out.z.emplace_back(l, z_tilde(l, view.lambda, view.z, residual(graph_.edge(l).head), residual(i), steps));
  return out;
}

GlobalState SplitOperators::forward_backward(const GlobalState& state, const StepSizes& steps) const {
  const int m = rows();
  GlobalState out = state;
  for (int i = 0; i < players(); ++i) {
    AgentBlock b = agent_block(i, state, steps);
    out.lambda.segment(static_cast<Index>(i) * m, m) = b.lambda;
    out.x.segment(game_.offset(i), game_.dim(i)) = b.x;
    for (auto& [l, zl] : b.z) out.z.segment(static_cast<Index>(l) * m, m) = zl;
  }
  refresh_residuals(game_, out);
  return out;
}

PdiState SplitOperators::forward_backward(const PdiState& state, const StepSizes& steps) const {
  const int m = rows();
  const int n = game_.total_dim();
  PdiState out = state;
  for (int i = 0; i < players(); ++i) {
    AgentBlock b = agent_block(i, state, steps);
    out.lambda.segment(static_cast<Index>(i) * m, m) = b.lambda;
    out.estimates.segment(static_cast<Index>(i) * n, n) = b.x;
    for (auto& [l, zl] : b.z) out.z.segment(static_cast<Index>(l) * m, m) = zl;
  }
  return out;
}

StepCertificate validate_steps(const SplitOperators& ops, const StepSizes& steps, double p_min) {
  StepCertificate cert;
  cert.mode = ops.mode();
  cert.delta = steps.delta;
  cert.eta = steps.eta;
  cert.p_min = p_min;
  cert.max_delay = steps.max_delay;
  auto& bad = cert.violations;

  const std::pair<const char*, double> positives[] = {{"sigma", steps.sigma}, {"gamma", steps.gamma},
                                                       {"tau", steps.tau},     {"eta", steps.eta},
                                                       {"delta", steps.delta}};
  bool finite = true;
  for (auto [name, v] : positives) {
    if (!std::isfinite(v)) {
      bad.push_back(std::string(name) + " is not finite");
      finite = false;
    } else if (!(v > 0.0)) {
      bad.push_back(std::string(name) + " must be positive");
      finite = false;
    }
  }
  if (!(steps.c > 0.0 && steps.c < 1.0)) bad.push_back("c must lie in (0, 1)");
  if (steps.max_delay < 0) bad.push_back("maximum delay must be nonnegative");
  if (!(p_min > 0.0 && p_min <= 1.0)) bad.push_back("p_min must lie in (0, 1]");

  // delta lower bound.
  double t = std::numeric_limits<double>::quiet_NaN();
  const GameSpec& game = ops.game();
  if (ops.mode() == InfoMode::Full) {
    if (!game.full_info || !(game.full_info->upsilon > 0.0) || !(game.full_info->chi > 0.0)) {
      bad.push_back("missing or nonpositive monotonicity constants (upsilon, chi)");
    } else {
      const auto& k = *game.full_info;
      cert.delta_lower_bound = k.chi * k.chi / (2.0 * k.upsilon);
      t = steps.delta * k.upsilon / (k.chi * k.chi);
      if (!(steps.delta > cert.delta_lower_bound))
        bad.push_back("delta must exceed chi^2/(2 upsilon) = " + fmt(cert.delta_lower_bound));
    }
  } else {
    if (!game.pdi || !(game.pdi->chi_bar > 0.0)) {
      bad.push_back("missing or nonpositive cocoercivity constant chi_bar");
    } else {
      cert.beta_e = pdi_cocoercivity(game.pdi->chi_bar, ops.graph().max_degree());
      cert.delta_lower_bound = 1.0 / (2.0 * cert.beta_e);
      t = steps.delta * cert.beta_e;
      if (!(steps.delta > cert.delta_lower_bound))
        bad.push_back("delta must exceed 1/(2 beta_E) = " + fmt(cert.delta_lower_bound));
    }
  }

  if (finite) {
    Mat shifted = ops.phi(steps);
    shifted.diagonal().array() -= steps.delta;
    Eigen::SelfAdjointEigenSolver<Mat> eig(shifted, Eigen::EigenvaluesOnly);
    cert.lambda_min = eig.eigenvalues().minCoeff();
    if (cert.lambda_min < -kPsdTolerance)
      bad.push_back("PSD violated: lambda_min(Phi - delta I) = " + fmt(cert.lambda_min));
  }

  if (std::isfinite(t) && t > 0.5 && p_min > 0.0 && p_min <= 1.0 && steps.max_delay >= 0) {
    const EtaBound b = bound_from_ratio(ops.players(), p_min, steps.max_delay, steps.c, t);
    cert.eta_max = b.eta_max;
    cert.alpha = b.alpha;
    if (steps.eta > cert.eta_max)
      bad.push_back("eta = " + fmt(steps.eta) + " exceeds eta_max = " + fmt(cert.eta_max));
  }

  cert.passed = bad.empty();
  return cert;
}

ResolvedSteps resolve_steps(const SplitOperators& ops, const StepRequest& request, double p_min) {
  const GameSpec& game = ops.game();
  double delta = 0.0;
  double t = std::numeric_limits<double>::quiet_NaN();
  if (ops.mode() == InfoMode::Full) {
    if (!game.full_info) throw Error("game has no full-information monotonicity constants");
    const auto& k = *game.full_info;
    delta = request.delta.value_or(k.chi * k.chi / k.upsilon);
    t = delta * k.upsilon / (k.chi * k.chi);
  } else {
    if (!game.pdi) throw Error("game has no partial-information cocoercivity constant");
    const double beta = pdi_cocoercivity(game.pdi->chi_bar, ops.graph().max_degree());
    delta = request.delta.value_or(1.0 / beta);
    t = delta * beta;
  }

  ResolvedSteps r;
  r.steps = StepSizes{request.sigma, request.gamma, request.tau, 0.0, delta, request.c, request.max_delay};
  if (request.eta) {
    r.steps.eta = *request.eta;
  } else if (t > 0.5 && request.c > 0.0 && request.c < 1.0) {
    r.steps.eta = bound_from_ratio(ops.players(), p_min, request.max_delay, request.c, t).eta_max;
  }

  r.certificate = validate_steps(ops, r.steps, p_min);
  auto psd_failed = [](const StepCertificate& c) {
    for (const auto& v : c.violations)
      if (v.rfind("PSD violated", 0) == 0) return true;
    return false;
  };
  while (request.halve && psd_failed(r.certificate) && r.halvings < kMaxHalvings) {
    r.steps.sigma *= 0.5;
    r.steps.gamma *= 0.5;
    r.steps.tau *= 0.5;
    ++r.halvings;
    r.certificate = validate_steps(ops, r.steps, p_min);
  }
  return r;
}

}  // namespace agne
