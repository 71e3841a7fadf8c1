#include "agne/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

namespace agne {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Sydney: return "sydney";
    case Algorithm::Rbca: return "rbca";
    case Algorithm::Adagnes: return "adagnes";
    case Algorithm::AdagnesPdi: return "adagnes-pdi";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "sydney") return Algorithm::Sydney;
  if (name == "rbca") return Algorithm::Rbca;
  if (name == "adagnes") return Algorithm::Adagnes;
  if (name == "adagnes-pdi") return Algorithm::AdagnesPdi;
  throw Error("unknown algorithm '" + name + "' (expected sydney, rbca, adagnes or adagnes-pdi)");
}

InfoMode info_mode(Algorithm a) { return a == Algorithm::AdagnesPdi ? InfoMode::Partial : InfoMode::Full; }

namespace {

Vec relax(const Vec& current, const Vec& target, double eta) { return current + eta * (target - current); }

Vec residual_of(const GameSpec& game, int i, const Vec& x_i) {
  const PlayerSpec& p = game.player(i);
  return p.coupling * x_i - p.offset;
}

// Writes agent i's relaxed block into `state` and returns nothing; the caller
// decides whether the history also records it.
void apply_block(GlobalState& state, const SplitOperators& ops, int i, const AgentBlock& b, double eta) {
  const GameSpec& game = ops.game();
  const int m = ops.rows();
  auto lam = state.lambda.segment(static_cast<Index>(i) * m, m);
  lam = relax(lam, b.lambda, eta);
  auto xi = state.x.segment(game.offset(i), game.dim(i));
  xi = relax(xi, b.x, eta);
  state.residual.segment(static_cast<Index>(i) * m, m) = residual_of(game, i, xi);
  for (const auto& [l, zl] : b.z) {
    auto seg = state.z.segment(static_cast<Index>(l) * m, m);
    seg = relax(seg, zl, eta);
  }
}

void apply_block(PdiState& state, const SplitOperators& ops, int i, const AgentBlock& b, double eta) {
  const int m = ops.rows();
  const int n = ops.game().total_dim();
  auto lam = state.lambda.segment(static_cast<Index>(i) * m, m);
  lam = relax(lam, b.lambda, eta);
  auto est = state.estimates.segment(static_cast<Index>(i) * n, n);
  est = relax(est, b.x, eta);
  for (const auto& [l, zl] : b.z) {
    auto seg = state.z.segment(static_cast<Index>(l) * m, m);
    seg = relax(seg, zl, eta);
  }
}

// Edge variables agent i reads but does not own: its in-edges and the edge
// neighbors of its out-edges.
std::vector<int> foreign_edges(const CommGraph& g, int i) {
  std::set<int> read;
  for (int l : g.incident_edges(i)) read.insert(l);
  for (int l : g.out_edges(i))
    for (int q : g.edge_neighbors(l)) read.insert(q);
  for (int l : g.out_edges(i)) read.erase(l);
  return {read.begin(), read.end()};
}

std::vector<int> source_agents(const SplitOperators& ops, int i) {
  std::set<int> src;
  for (int j : ops.graph().neighbors(i)) src.insert(j);
  if (ops.mode() == InfoMode::Full)
    for (int j : ops.game().player(i).depends_on) src.insert(j);
  src.erase(i);
  return {src.begin(), src.end()};
}

void record_writes(AsyncBuffers& buffers, const GlobalState& state, const SplitOperators& ops, int i) {
  const GameSpec& game = ops.game();
  const int m = ops.rows();
  const HistoryLayout& lay = buffers.layout();
  const std::int64_t v = buffers.iteration() + 1;
  buffers.history().write(lay.multiplier(i), v, state.lambda.segment(static_cast<Index>(i) * m, m));
  buffers.history().write(lay.decision(i), v, state.x.segment(game.offset(i), game.dim(i)));
  buffers.history().write(lay.residual(i), v, state.residual.segment(static_cast<Index>(i) * m, m));
  for (int l : ops.graph().out_edges(i))
    buffers.history().write(lay.edge(l), v, state.z.segment(static_cast<Index>(l) * m, m));
  buffers.advance();
}

void record_writes(AsyncBuffers& buffers, const PdiState& state, const SplitOperators& ops, int i) {
  const int m = ops.rows();
  const int n = ops.game().total_dim();
  const HistoryLayout& lay = buffers.layout();
  const std::int64_t v = buffers.iteration() + 1;
  buffers.history().write(lay.multiplier(i), v, state.lambda.segment(static_cast<Index>(i) * m, m));
  buffers.history().write(lay.decision(i), v, state.estimates.segment(static_cast<Index>(i) * n, n));
  for (int l : ops.graph().out_edges(i))
    buffers.history().write(lay.edge(l), v, state.z.segment(static_cast<Index>(l) * m, m));
  buffers.advance();
}

}  // namespace

void sydney_step(GlobalState& state, const SplitOperators& ops, const StepSizes& steps) {
  const GlobalState t = ops.forward_backward(state, steps);
  state.lambda = relax(state.lambda, t.lambda, steps.eta);
  state.z = relax(state.z, t.z, steps.eta);
  state.x = relax(state.x, t.x, steps.eta);
  refresh_residuals(ops.game(), state);
}

void sydney_step(PdiState& state, const SplitOperators& ops, const StepSizes& steps) {
  const PdiState t = ops.forward_backward(state, steps);
  state.lambda = relax(state.lambda, t.lambda, steps.eta);
  state.z = relax(state.z, t.z, steps.eta);
  state.estimates = relax(state.estimates, t.estimates, steps.eta);
}

int rbca_step(GlobalState& state, const SplitOperators& ops, const StepSizes& steps,
              const ActivationSampler& sampler, Rng& activation_rng) {
  const int i = sampler.sample(activation_rng);
  const AgentBlock b = ops.agent_block(i, state, steps);
  apply_block(state, ops, i, b, steps.eta);
  return i;
}

AsyncBuffers::AsyncBuffers(const GlobalState& initial, const GameSpec& game, int edges, int max_delay)
    : layout_{game.player_count(), edges}, history_(max_delay + 1) {
  const int N = game.player_count();
  const int m = game.coupling_rows();
  for (int i = 0; i < N; ++i) history_.add_block(initial.lambda.segment(static_cast<Index>(i) * m, m));
  for (int i = 0; i < N; ++i) history_.add_block(initial.x.segment(game.offset(i), game.dim(i)));
  for (int i = 0; i < N; ++i) history_.add_block(initial.residual.segment(static_cast<Index>(i) * m, m));
  for (int l = 0; l < edges; ++l) history_.add_block(initial.z.segment(static_cast<Index>(l) * m, m));
}

AsyncBuffers::AsyncBuffers(const PdiState& initial, const GameSpec& game, int edges, int max_delay)
    : layout_{game.player_count(), edges}, history_(max_delay + 1) {
  const int N = game.player_count();
  const int m = game.coupling_rows();
  const int n = game.total_dim();
  for (int i = 0; i < N; ++i) history_.add_block(initial.lambda.segment(static_cast<Index>(i) * m, m));
  for (int i = 0; i < N; ++i) history_.add_block(initial.estimates.segment(static_cast<Index>(i) * n, n));
  // Residuals are recomputed from estimates; empty blocks keep the layout.
  for (int i = 0; i < N; ++i) history_.add_block(Vec());
  for (int l = 0; l < edges; ++l) history_.add_block(initial.z.segment(static_cast<Index>(l) * m, m));
}

StepReport adagnes_step(GlobalState& state, AsyncBuffers& buffers, const SplitOperators& ops,
                        const StepSizes& steps, const ActivationSampler& sampler,
                        DelaySchedule& delays, Rng& activation_rng) {
  const GameSpec& game = ops.game();
  const int m = ops.rows();
  const HistoryLayout& lay = buffers.layout();
  const std::int64_t k = buffers.iteration();
  StepReport report;
  report.agent = sampler.sample(activation_rng);
  const int i = report.agent;

  GlobalState view = state;
  for (int j : source_agents(ops, i)) {
    const int d = delays.draw(k);
    report.max_delay = std::max(report.max_delay, d);
    view.lambda.segment(static_cast<Index>(j) * m, m) = buffers.history().read(lay.multiplier(j), k - d);
    view.x.segment(game.offset(j), game.dim(j)) = buffers.history().read(lay.decision(j), k - d);
    view.residual.segment(static_cast<Index>(j) * m, m) = buffers.history().read(lay.residual(j), k - d);
  }
  for (int q : foreign_edges(ops.graph(), i)) {
    const int d = delays.draw(k);
    report.max_delay = std::max(report.max_delay, d);
    view.z.segment(static_cast<Index>(q) * m, m) = buffers.history().read(lay.edge(q), k - d);
  }

  const AgentBlock b = ops.agent_block(i, view, steps);
  apply_block(state, ops, i, b, steps.eta);
  record_writes(buffers, state, ops, i);
  return report;
}

StepReport adagnes_pdi_step(PdiState& state, AsyncBuffers& buffers, const SplitOperators& ops,
                            const StepSizes& steps, const ActivationSampler& sampler,
                            DelaySchedule& delays, Rng& activation_rng) {
  const int m = ops.rows();
  const int n = ops.game().total_dim();
  const HistoryLayout& lay = buffers.layout();
  const std::int64_t k = buffers.iteration();
  StepReport report;
  report.agent = sampler.sample(activation_rng);
  const int i = report.agent;

  PdiState view = state;
  for (int j : source_agents(ops, i)) {
    const int d = delays.draw(k);
    report.max_delay = std::max(report.max_delay, d);
    view.lambda.segment(static_cast<Index>(j) * m, m) = buffers.history().read(lay.multiplier(j), k - d);
    view.estimates.segment(static_cast<Index>(j) * n, n) = buffers.history().read(lay.decision(j), k - d);
  }
  for (int q : foreign_edges(ops.graph(), i)) {
    const int d = delays.draw(k);
    report.max_delay = std::max(report.max_delay, d);
    view.z.segment(static_cast<Index>(q) * m, m) = buffers.history().read(lay.edge(q), k - d);
  }

  const AgentBlock b = ops.agent_block(i, view, steps);
  apply_block(state, ops, i, b, steps.eta);
  record_writes(buffers, state, ops, i);
  return report;
}

MetricRow metrics_of(const GameSpec& game, const GlobalState& state, const std::optional<Vec>& reference) {
  const KktResidual k = kkt_residual(game, state.x, state.lambda);
  MetricRow r;
  r.kkt_total = k.total;
  r.kkt_feas = k.feasibility;
  r.kkt_cons = k.consensus;
  r.kkt_stat = k.stationarity;
  r.pdi_cons = 0.0;
  r.rel_err = reference ? relative_error(state.x, *reference) : std::numeric_limits<double>::quiet_NaN();
  return r;
}

MetricRow metrics_of(const GameSpec& game, const PdiState& state, const std::optional<Vec>& reference) {
  const Vec x = own_decisions(game, state);
  const KktResidual k = kkt_residual(game, x, state.lambda);
  MetricRow r;
  r.kkt_total = k.total;
  r.kkt_feas = k.feasibility;
  r.kkt_cons = k.consensus;
  r.kkt_stat = k.stationarity;
  r.pdi_cons = pdi_consensus_error(state.estimates, game.player_count());
  r.rel_err = reference ? relative_error(x, *reference) : std::numeric_limits<double>::quiet_NaN();
  return r;
}

namespace {

Vec decisions_of(const GameSpec&, const GlobalState& s) { return s.x; }
Vec decisions_of(const GameSpec& game, const PdiState& s) { return own_decisions(game, s); }

template <class State, class Step>
Trajectory drive(const SplitOperators& ops, const RunSettings& settings, State state, Step&& step) {
  const GameSpec& game = ops.game();
  const int N = ops.players();
  const auto start = std::chrono::steady_clock::now();

  Trajectory traj;
  traj.certificate = settings.certificate;
  traj.activations.assign(static_cast<std::size_t>(N), 0);
  std::int64_t updates = 0;

  auto record = [&](std::int64_t k, int agent, double disp) {
    TrajectoryRow row;
    row.step = k;
    row.agent = agent;
    row.agent_updates = updates;
    row.metrics = metrics_of(game, state, settings.reference);
    row.metrics.disp = disp;
    traj.rows.push_back(row);
    traj.profiles.push_back(decisions_of(game, state));
    return row.metrics.kkt_total;
  };

  const std::int64_t every = std::max<std::int64_t>(settings.record_every, 1);
  // An infinite tolerance disables the stopping rule: exactly max_steps.
  const bool stopping = std::isfinite(settings.tol);
  double kkt = record(0, -1, 0.0);
  traj.converged = kkt < settings.tol;
  std::int64_t k = 0;
  while (!(stopping && traj.converged) && k < settings.max_steps) {
    const bool recorded = (k + 1) % every == 0 || k + 1 == settings.max_steps;
    Vec before;
    if (recorded) before = state.flat();
    const StepReport rep = step(state);
    ++k;
    if (rep.agent < 0) {
      for (auto& c : traj.activations) ++c;
      updates += N;
    } else {
      ++traj.activations[static_cast<std::size_t>(rep.agent)];
      ++updates;
    }
    traj.max_observed_delay = std::max(traj.max_observed_delay, rep.max_delay);
    if (recorded) {
      kkt = record(k, rep.agent, (state.flat() - before).norm());
      traj.converged = kkt < settings.tol;
    }
  }

  traj.steps_taken = k;
  traj.final_state = state.flat();
  traj.final_x = decisions_of(game, state);
  traj.final_lambda_mean = block_mean(state.lambda, N);
  traj.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return traj;
}

}  // namespace

Trajectory run(const SplitOperators& ops, const RunSettings& settings, const Vec& x0) {
  if (!settings.certificate.passed) {
    std::string why = "step sizes failed validation";
    for (const auto& v : settings.certificate.violations) why += "; " + v;
    throw CertificateError(why);
  }
  if (ops.mode() != info_mode(settings.algorithm))
    throw Error("algorithm " + to_string(settings.algorithm) + " needs " +
                to_string(info_mode(settings.algorithm)) + "-information operators");
  if (settings.certificate.mode != ops.mode()) throw Error("certificate was issued for another information mode");
  if (settings.max_steps < 0) throw Error("max_steps must be nonnegative");
  if (x0.size() != ops.game().total_dim()) throw Error("initial decision has wrong length");

  const GameSpec& game = ops.game();
  const CommGraph& graph = ops.graph();
  const StepSizes& steps = settings.steps;
  const ActivationSampler sampler =
      settings.rates.empty() ? ActivationSampler::uniform(ops.players()) : ActivationSampler(settings.rates);
  if (sampler.players() != ops.players()) throw Error("activation rates must have one entry per player");
  Rng activation_rng(settings.activation_seed);
  DelaySchedule delays(steps.max_delay, settings.delay_seed);

  switch (settings.algorithm) {
    case Algorithm::Sydney:
      return drive(ops, settings, initial_global_state(game, graph, x0), [&](GlobalState& s) {
        sydney_step(s, ops, steps);
        return StepReport{};
      });
    case Algorithm::Rbca:
      return drive(ops, settings, initial_global_state(game, graph, x0), [&](GlobalState& s) {
        return StepReport{rbca_step(s, ops, steps, sampler, activation_rng), 0};
      });
    case Algorithm::Adagnes: {
      GlobalState s0 = initial_global_state(game, graph, x0);
      AsyncBuffers buffers(s0, game, graph.edge_count(), steps.max_delay);
      return drive(ops, settings, std::move(s0), [&](GlobalState& s) {
        return adagnes_step(s, buffers, ops, steps, sampler, delays, activation_rng);
      });
    }
    case Algorithm::AdagnesPdi: {
      PdiState s0 = initial_pdi_state(game, graph, x0);
      AsyncBuffers buffers(s0, game, graph.edge_count(), steps.max_delay);
      return drive(ops, settings, std::move(s0), [&](PdiState& s) {
        return adagnes_pdi_step(s, buffers, ops, steps, sampler, delays, activation_rng);
      });
    }
  }
  throw Error("unknown algorithm");
}

OracleSolution oracle_gne(const GameSpec& game, const CommGraph& graph, double tol, std::int64_t max_iterations) {
  const SplitOperators ops(game, graph, InfoMode::Full);
  const int N = game.player_count();
  const ResolvedSteps rs = resolve_steps(ops, StepRequest{}, 1.0 / N);
  if (!rs.certificate.passed) throw Error("oracle could not find admissible step sizes");

  const Vec lo = game.lower_bounds();
  const Vec hi = game.upper_bounds();
  Vec x0 = Vec::Zero(game.total_dim());
  for (Index r = 0; r < x0.size(); ++r) {
    if (std::isfinite(lo[r]) && std::isfinite(hi[r])) x0[r] = 0.5 * (lo[r] + hi[r]);
    else x0[r] = std::clamp(0.0, lo[r], hi[r]);
  }

  OracleSolution sol;
  sol.steps = rs.steps;
  sol.state = initial_global_state(game, graph, x0);
  constexpr std::int64_t kCheckEvery = 50;
  for (std::int64_t k = 0;; ++k) {
    if (k % kCheckEvery == 0) {
      sol.residual = kkt_residual(game, sol.state.x, sol.state.lambda);
      if (sol.residual.total <= tol) {
        sol.iterations = k;
        break;
      }
      if (k >= max_iterations)
        throw Error("oracle did not reach tolerance within " + std::to_string(max_iterations) +
                    " iterations (residual " + std::to_string(sol.residual.total) + ")");
    }
    sydney_step(sol.state, ops, rs.steps);
  }
  sol.x = sol.state.x;
  sol.lambda = block_mean(sol.state.lambda, N);
  sol.consensus_error = sol.residual.consensus;
  return sol;
}

}  // namespace agne
