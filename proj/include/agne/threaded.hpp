#pragma once

#include "agne/solvers.hpp"

namespace agne {

/// Runs ADAGNES or ADAGNES-PDI with one OS thread per agent.
///
/// Each worker loops read -> compute -> write against one shared state. At
/// most Psi + 1 workers hold a read at a time. A read snapshots the state
/// together with the commit counter r; the write is accepted only if at
/// most Psi commits landed since r (the staleness). A worker that reaches
/// its write while another worker is still computing on a read that one
/// more commit would push past Psi stalls until that worker arrives; a
/// write that would still exceed Psi is discarded and the worker reads
/// again. Workers yield after reading and after writing so the scheduler
/// interleaves them instead of letting one agent commit in long bursts. A
/// collector thread snapshots the state every record_every commits and
/// stops the run at tol or max_steps.
///
/// Non-deterministic. Activation rates are not emulated: workers run as
/// fast as the scheduler lets them. Rows' `agent` is -1.
Trajectory threaded_run(const SplitOperators& ops, const RunSettings& settings, const Vec& x0);

/// Extra statistics of the last threaded run on this thread.
struct ThreadedStats {
  std::int64_t discarded_writes = 0;
  std::int64_t stalls = 0;
};
ThreadedStats last_threaded_stats();

}  // namespace agne
