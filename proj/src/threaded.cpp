#include "agne/threaded.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <thread>

namespace agne {

namespace {

thread_local ThreadedStats g_last_stats;

Vec decisions_of(const GameSpec&, const GlobalState& s) { return s.x; }
Vec decisions_of(const GameSpec& game, const PdiState& s) { return own_decisions(game, s); }

void write_block(GlobalState& state, const SplitOperators& ops, int i, const AgentBlock& b, double eta) {
  const GameSpec& game = ops.game();
  const int m = ops.rows();
  auto lam = state.lambda.segment(static_cast<Index>(i) * m, m);
  lam += eta * (b.lambda - lam);
  auto xi = state.x.segment(game.offset(i), game.dim(i));
  xi += eta * (b.x - xi);
  state.residual.segment(static_cast<Index>(i) * m, m) = game.player(i).coupling * xi - game.player(i).offset;
  for (const auto& [l, zl] : b.z) {
    auto seg = state.z.segment(static_cast<Index>(l) * m, m);
    seg += eta * (zl - seg);
  }
}

void write_block(PdiState& state, const SplitOperators& ops, int i, const AgentBlock& b, double eta) {
  const int m = ops.rows();
  const int n = ops.game().total_dim();
  auto lam = state.lambda.segment(static_cast<Index>(i) * m, m);
  lam += eta * (b.lambda - lam);
  auto est = state.estimates.segment(static_cast<Index>(i) * n, n);
  est += eta * (b.x - est);
  for (const auto& [l, zl] : b.z) {
    auto seg = state.z.segment(static_cast<Index>(l) * m, m);
    seg += eta * (zl - seg);
  }
}

template <class State>
Trajectory threaded_drive(const SplitOperators& ops, const RunSettings& settings, State shared) {
  const GameSpec& game = ops.game();
  const int N = ops.players();
  const int psi = settings.steps.max_delay;
  const double eta = settings.steps.eta;
  const std::int64_t every = std::max<std::int64_t>(settings.record_every, 1);
  const auto start = std::chrono::steady_clock::now();

  std::mutex mu;
  std::condition_variable cv;
  std::int64_t commits = 0;
  bool stop = settings.max_steps == 0;
  int in_flight = 0;
  std::vector<std::int64_t> read_version(static_cast<std::size_t>(N), -1);  // -1: not in flight
  std::vector<char> computing(static_cast<std::size_t>(N), 0);
  ThreadedStats stats;

  Trajectory traj;
  traj.certificate = settings.certificate;
  traj.activations.assign(static_cast<std::size_t>(N), 0);

  auto record = [&](const State& snap, std::int64_t step) {
    TrajectoryRow row;
    row.step = step;
    row.agent = -1;
    row.agent_updates = step;
    row.metrics = metrics_of(game, snap, settings.reference);
    traj.rows.push_back(row);
    traj.profiles.push_back(decisions_of(game, snap));
    return row.metrics.kkt_total;
  };
  const bool stopping = std::isfinite(settings.tol);
  if (record(shared, 0) < settings.tol && stopping) stop = true;

  auto worker = [&](int i) {
    const auto me = static_cast<std::size_t>(i);
    std::unique_lock lock(mu);
    while (!stop) {
      // Admission: at most Psi + 1 reads in flight, so in the common case
      // no write can push another reader past the bound.
      cv.wait(lock, [&] { return stop || in_flight < psi + 1; });
      if (stop) break;
      ++in_flight;
      const std::int64_t r = commits;
      const State view = shared;
      read_version[me] = r;
      computing[me] = 1;
      lock.unlock();

      // Let other workers read before this one computes, so reads overlap
      // and delays actually occur even on a single core.
      std::this_thread::yield();
      const AgentBlock b = ops.agent_block(i, view, settings.steps);

      lock.lock();
      computing[me] = 0;
      cv.notify_all();
      auto blocks_someone = [&] {
        for (int j = 0; j < N; ++j) {
          const auto uj = static_cast<std::size_t>(j);
          if (j != i && computing[uj] && commits + 1 - read_version[uj] > psi) return true;
        }
        return false;
      };
      if (!stop && blocks_someone()) {
        ++stats.stalls;
        cv.wait(lock, [&] { return stop || !blocks_someone(); });
      }
      read_version[me] = -1;
      --in_flight;
      cv.notify_all();
      if (stop) break;
      const std::int64_t staleness = commits - r;
      if (staleness > psi) {
        ++stats.discarded_writes;
        continue;
      }
      write_block(shared, ops, i, b, eta);
      ++commits;
      ++traj.activations[me];
      traj.max_observed_delay = std::max<int>(traj.max_observed_delay, static_cast<int>(staleness));
      if (commits >= settings.max_steps) stop = true;
      cv.notify_all();
      // Hand the core over after every commit. Without this, time slicing
      // lets one worker commit hundreds of times in a row, and such bursts
      // (each agent driving its own block to a local fixed point in turn)
      // make the multipliers diverge.
      lock.unlock();
      std::this_thread::yield();
      lock.lock();
    }
    read_version[me] = -1;
    computing[me] = 0;
    cv.notify_all();
  };

  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) threads.emplace_back(worker, i);

  // Collector: waits for the next record point, copies the state, computes
  // metrics outside the lock.
  {
    std::int64_t next = every;
    std::unique_lock lock(mu);
    for (;;) {
      cv.wait(lock, [&] { return stop || commits >= next; });
      const bool finished = stop;
      const std::int64_t step = commits;
      if (step == traj.rows.back().step) break;
      const State snap = shared;
      lock.unlock();
      const double kkt = record(snap, step);
      lock.lock();
      if (kkt < settings.tol && stopping) {
        traj.converged = true;
        stop = true;
        cv.notify_all();
      }
      if (finished || stop) break;
      next = step + every;
    }
    stop = true;
    cv.notify_all();
  }
  for (auto& t : threads) t.join();

  // Final row at the exact stopping point.
  if (traj.rows.back().step != commits) record(shared, commits);
  traj.converged = traj.rows.back().metrics.kkt_total < settings.tol;
  traj.steps_taken = commits;
  traj.final_state = shared.flat();
  traj.final_x = decisions_of(game, shared);
  traj.final_lambda_mean = block_mean(shared.lambda, N);
  traj.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  g_last_stats = stats;
  if (traj.max_observed_delay > psi) throw Error("threaded run violated the staleness bound");
  return traj;
}

}  // namespace

ThreadedStats last_threaded_stats() { return g_last_stats; }

Trajectory threaded_run(const SplitOperators& ops, const RunSettings& settings, const Vec& x0) {
  if (!settings.certificate.passed) throw CertificateError("step sizes failed validation");
  if (settings.algorithm != Algorithm::Adagnes && settings.algorithm != Algorithm::AdagnesPdi)
    throw Error("threaded mode supports adagnes and adagnes-pdi only");
  if (ops.mode() != info_mode(settings.algorithm)) throw Error("operators do not match the algorithm's information mode");
  if (x0.size() != ops.game().total_dim()) throw Error("initial decision has wrong length");
  if (settings.algorithm == Algorithm::Adagnes)
    return threaded_drive(ops, settings, initial_global_state(ops.game(), ops.graph(), x0));
  return threaded_drive(ops, settings, initial_pdi_state(ops.game(), ops.graph(), x0));
}

}  // namespace agne
