#pragma once

#include "agne/game.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace agne {

/// Which worker -> task arrows the benchmark uses.
enum class AllocationTopology {
  /// Fixed 14-worker / 8-task benchmark pattern.
  FigureOne,
  /// Random pattern with the same degree profile: every worker serves two
  /// distinct tasks and every task has at least one worker.
  Random,
};

std::string to_string(AllocationTopology t);
AllocationTopology parse_topology(const std::string& name);

/// All data of the task allocation game. Worker i chooses x_i in [0, B_i]
/// (4 outputs); outputs 1-2 feed task pattern[i][0], outputs 3-4 feed
/// pattern[i][1], scaled by the loss factors.
///
///   f_i(x) = sum_k q_i^k (x_i^k + 1) log(x_i^k + 1) + (p_i^T x_i - d_i)^2
///            + x_i^T S_i x_i - R(x)^T A_i x_i,
///   R_j(x) = kappa_j - chi_j [A x]_j.
struct TaskAllocationParams {
  std::uint64_t seed = 0;
  AllocationTopology topology = AllocationTopology::FigureOne;
  int task_count = 8;
  int worker_count = 14;
  /// b_i = local_share * C for every worker.
  double local_share = 1.0 / 15.0;

  Vec load;             // C_j
  Vec price_intercept;  // kappa_j
  Vec price_slope;      // chi_j
  std::vector<Vec> cost_weights;  // q_i (4)
  std::vector<Vec> cost_vectors;  // p_i (4), stochastic
  std::vector<double> cost_targets;  // d_i
  std::vector<Mat> cost_quadratic;   // S_i (4x4), symmetric positive definite
  std::vector<Vec> capacity;         // B_i (4)
  std::vector<std::array<int, 2>> pattern;  // 0-based task indices
  std::vector<Vec> loss_factors;            // nonzero of each column of A_i (4)

  /// A_i (task_count x 4) assembled from pattern and loss factors.
  Mat allocation(int worker) const;
};

/// Fixed benchmark pattern (0-based task indices).
const std::vector<std::array<int, 2>>& figure_one_pattern();

/// Per task: the most the workers can deliver (sum of loss factor times
/// capacity over the outputs feeding it) minus the demand sum_i b_i. The
/// coupling equality has a solution in the boxes iff every entry is >= 0,
/// since each output feeds exactly one task.
Vec capacity_margin(const TaskAllocationParams& params);

/// Default benchmark instance seed (fixed topology).
inline constexpr std::uint64_t kBenchmarkSeed = 11;

/// Draws every parameter from its sampling range with Rng(seed).
TaskAllocationParams sample_task_params(std::uint64_t seed, AllocationTopology topology);

/// Objective value f_i; used to check the analytic gradient.
double task_objective(const TaskAllocationParams& params, int worker, const Vec& profile);

/// Builds the game (analytic gradient oracles, boxes, coupling) from params.
/// Leaves the monotonicity constants unset.
GameSpec build_task_game(const TaskAllocationParams& params);

struct TaskGame {
  TaskAllocationParams params;
  GameSpec game;
};

/// Sampled instance with full-information and partial-information
/// constants estimated from `estimate_samples` sampled pairs.
///
/// The partial-information constant uses the unrestricted extended-sample
/// estimate when it is positive. For games whose objectives couple players
/// it is not (perturbing only x^(i)_{-i} moves F without moving R X), and
/// the consensus-restricted estimate is used instead.
/// Throws agne::Error when the sampled demand exceeds some task's capacity
/// (no equilibrium exists).
TaskGame generate_task_game(std::uint64_t seed, AllocationTopology topology,
                            int estimate_samples = 1000);

/// Sets game.full_info / game.pdi from a sampled estimate.
void apply_estimate(GameSpec& game, const MonotonicityEstimate& est);

/// Instance file ("agne-task-game/1"): every parameter plus seed. Doubles are
/// written in shortest round-trip form, so loading is bit-exact.
nlohmann::json to_json(const TaskAllocationParams& params);
TaskAllocationParams params_from_json(const nlohmann::json& j);

void save_instance(const TaskGame& instance, const std::string& path);
/// Rebuilds the game from the stored parameters; constants are taken from
/// the file.
TaskGame load_instance(const std::string& path);

}  // namespace agne
