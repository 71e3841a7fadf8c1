#include "agne/task_game.hpp"

#include "agne/rng.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <set>
#include <string>

namespace agne {

namespace {

constexpr int kOutputs = 4;
constexpr const char* kFormat = "agne-task-game/1";

// Sampling ranges.
constexpr double kLoadLo = 1.0, kLoadHi = 2.0;
constexpr double kSlopeLo = 0.5, kSlopeHi = 1.0;
constexpr double kInterceptLo = 4.0, kInterceptHi = 9.0;
constexpr double kWeightLo = 0.5, kWeightHi = 1.5;
constexpr double kTargetLo = 1.0, kTargetHi = 2.0;
constexpr double kCapacityLo = 1.0, kCapacityHi = 2.0;
constexpr double kLossLo = 0.5, kLossHi = 1.0;
constexpr double kQuadraticShift = 0.1;

Vec uniform_vec(Rng& rng, int size, double lo, double hi) {
  Vec v(size);
  for (int k = 0; k < size; ++k) v[k] = rng.uniform(lo, hi);
  return v;
}

std::vector<int> dependencies(const std::vector<std::array<int, 2>>& pattern, int worker) {
  std::set<int> deps;
  const auto& mine = pattern[static_cast<std::size_t>(worker)];
  for (int j = 0; j < static_cast<int>(pattern.size()); ++j) {
    if (j == worker) continue;
    const auto& theirs = pattern[static_cast<std::size_t>(j)];
    for (int a : mine)
      for (int b : theirs)
        if (a == b) deps.insert(j);
  }
  return {deps.begin(), deps.end()};
}

Vec json_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Index>(v.size()));
}

nlohmann::json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json mat_json(const Mat& m) {
  auto rows = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) rows.push_back(vec_json(m.row(r).transpose()));
  return rows;
}

Mat json_mat(const nlohmann::json& j) {
  const auto rows = static_cast<Index>(j.size());
  const auto cols = rows == 0 ? Index{0} : static_cast<Index>(j[0].size());
  Mat m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    if (static_cast<Index>(j[static_cast<std::size_t>(r)].size()) != cols)
      throw Error("ragged matrix in instance file");
    m.row(r) = json_vec(j[static_cast<std::size_t>(r)]).transpose();
  }
  return m;
}

}  // namespace

std::string to_string(AllocationTopology t) {
  return t == AllocationTopology::FigureOne ? "figure1" : "random";
}

AllocationTopology parse_topology(const std::string& name) {
  if (name == "figure1") return AllocationTopology::FigureOne;
  if (name == "random") return AllocationTopology::Random;
  throw Error("unknown allocation topology '" + name + "' (expected figure1 or random)");
}

const std::vector<std::array<int, 2>>& figure_one_pattern() {
  // worker -> {task of outputs 1-2, task of outputs 3-4}
  static const std::vector<std::array<int, 2>> pattern = {
      {0, 1}, {1, 2}, {2, 3}, {1, 2}, {2, 3}, {4, 5}, {5, 6},
      {4, 5}, {5, 6}, {6, 7}, {1, 4}, {1, 5}, {2, 6}, {3, 6},
  };
  return pattern;
}

Mat TaskAllocationParams::allocation(int worker) const {
  const auto w = static_cast<std::size_t>(worker);
  Mat a = Mat::Zero(task_count, kOutputs);
  for (int k = 0; k < kOutputs; ++k) a(pattern[w][static_cast<std::size_t>(k / 2)], k) = loss_factors[w][k];
  return a;
}

TaskAllocationParams sample_task_params(std::uint64_t seed, AllocationTopology topology) {
  TaskAllocationParams p;
  p.seed = seed;
  p.topology = topology;
  Rng rng(seed);

  if (topology == AllocationTopology::FigureOne) {
    p.pattern = figure_one_pattern();
  } else {
    for (;;) {
      p.pattern.clear();
      std::vector<int> served(static_cast<std::size_t>(p.task_count), 0);
      for (int i = 0; i < p.worker_count; ++i) {
        const int first = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(p.task_count - 1)));
        int second = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(p.task_count - 2)));
        if (second >= first) ++second;
        p.pattern.push_back({first, second});
        ++served[static_cast<std::size_t>(first)];
        ++served[static_cast<std::size_t>(second)];
      }
      bool covered = true;
      for (int s : served) covered = covered && s > 0;
      if (covered) break;
    }
  }

  p.load = uniform_vec(rng, p.task_count, kLoadLo, kLoadHi);
  p.price_slope = uniform_vec(rng, p.task_count, kSlopeLo, kSlopeHi);
  p.price_intercept = uniform_vec(rng, p.task_count, kInterceptLo, kInterceptHi);
  for (int i = 0; i < p.worker_count; ++i) {
    p.cost_weights.push_back(uniform_vec(rng, kOutputs, kWeightLo, kWeightHi));
    p.cost_targets.push_back(rng.uniform(kTargetLo, kTargetHi));
    Vec stochastic = uniform_vec(rng, kOutputs, 0.0, 1.0);
    stochastic /= stochastic.sum();
    p.cost_vectors.push_back(stochastic);
    Mat q(kOutputs, kOutputs);
    for (int r = 0; r < kOutputs; ++r)
      for (int c = 0; c < kOutputs; ++c) q(r, c) = rng.uniform();
    p.cost_quadratic.push_back(q.transpose() * q + kQuadraticShift * Mat::Identity(kOutputs, kOutputs));
    p.capacity.push_back(uniform_vec(rng, kOutputs, kCapacityLo, kCapacityHi));
    p.loss_factors.push_back(uniform_vec(rng, kOutputs, kLossLo, kLossHi));
  }
  return p;
}

double task_objective(const TaskAllocationParams& params, int worker, const Vec& profile) {
  const auto w = static_cast<std::size_t>(worker);
  Vec ax = Vec::Zero(params.task_count);
  for (int j = 0; j < params.worker_count; ++j)
    ax += params.allocation(j) * profile.segment(kOutputs * j, kOutputs);
  const Vec price = params.price_intercept - params.price_slope.cwiseProduct(ax);
  const Vec xi = profile.segment(kOutputs * worker, kOutputs);
  double cost = 0.0;
  for (int k = 0; k < kOutputs; ++k) cost += params.cost_weights[w][k] * (xi[k] + 1.0) * std::log(xi[k] + 1.0);
  const double r = params.cost_vectors[w].dot(xi) - params.cost_targets[w];
  cost += r * r + xi.dot(params.cost_quadratic[w] * xi);
  return cost - price.dot(params.allocation(worker) * xi);
}

GameSpec build_task_game(const TaskAllocationParams& params) {
  if (params.worker_count <= 0 || params.task_count <= 0) throw Error("empty task game");
  if (static_cast<int>(params.pattern.size()) != params.worker_count)
    throw Error("allocation pattern must list every worker");
  for (const auto& arrows : params.pattern)
    for (int t : arrows)
      if (t < 0 || t >= params.task_count) throw Error("allocation pattern references unknown task");

  // Shared, immutable data for the oracles.
  struct Data {
    int workers;
    Vec intercept;
    Vec slope;
    std::vector<Mat> alloc;
    std::vector<Vec> weights;
    std::vector<Vec> cost_vectors;
    std::vector<double> targets;
    std::vector<Mat> quadratic;
  };
  auto data = std::make_shared<Data>();
  data->workers = params.worker_count;
  data->intercept = params.price_intercept;
  data->slope = params.price_slope;
  data->weights = params.cost_weights;
  data->cost_vectors = params.cost_vectors;
  data->targets = params.cost_targets;
  data->quadratic = params.cost_quadratic;
  for (int i = 0; i < params.worker_count; ++i) data->alloc.push_back(params.allocation(i));

  std::vector<PlayerSpec> players;
  for (int i = 0; i < params.worker_count; ++i) {
    PlayerSpec p;
    p.dim = kOutputs;
    p.box_lo = Vec::Zero(kOutputs);
    p.box_hi = params.capacity[static_cast<std::size_t>(i)];
    p.coupling = data->alloc[static_cast<std::size_t>(i)];
    p.offset = params.local_share * params.load;
    p.depends_on = dependencies(params.pattern, i);
    const std::vector<int> deps = p.depends_on;
    p.gradient = [data, i, deps](const Vec& x) -> Vec {
      const auto w = static_cast<std::size_t>(i);
      const Mat& ai = data->alloc[w];
      const auto xi = x.segment(kOutputs * i, kOutputs);
      const Vec own = ai * xi;
      Vec ax = own;
      for (int j : deps) ax += data->alloc[static_cast<std::size_t>(j)] * x.segment(kOutputs * j, kOutputs);
      // Rows outside player i's tasks do not reach A_i^T, so summing over
      // the dependency set is exact.
      const Vec price = data->intercept - data->slope.cwiseProduct(ax);
      Vec g(kOutputs);
      for (int k = 0; k < kOutputs; ++k) g[k] = data->weights[w][k] * (std::log(xi[k] + 1.0) + 1.0);
      g += 2.0 * (data->cost_vectors[w].dot(xi) - data->targets[w]) * data->cost_vectors[w];
      g += 2.0 * data->quadratic[w] * xi;
      g -= ai.transpose() * price;
      g += ai.transpose() * data->slope.cwiseProduct(own);
      return g;
    };
    players.push_back(std::move(p));
  }
  return GameSpec(std::move(players), params.task_count);
}

void apply_estimate(GameSpec& game, const MonotonicityEstimate& est) {
  game.full_info = FullInfoConstants{est.upsilon, est.chi};
  game.pdi = PdiConstants{est.chi_bar > 0.0 ? est.chi_bar : est.chi_bar_consensus};
}

Vec capacity_margin(const TaskAllocationParams& params) {
  Vec margin = -params.local_share * params.worker_count * params.load;
  for (int i = 0; i < params.worker_count; ++i)
    margin += params.allocation(i) * params.capacity[static_cast<std::size_t>(i)];
  return margin;
}

TaskGame generate_task_game(std::uint64_t seed, AllocationTopology topology, int estimate_samples) {
  TaskAllocationParams params = sample_task_params(seed, topology);
  const Vec margin = capacity_margin(params);
  Index worst = 0;
  if (margin.minCoeff(&worst) < 0.0)
    throw Error("seed " + std::to_string(seed) + " gives an infeasible instance: task " + std::to_string(worst + 1) +
                " demands " + std::to_string(-margin[worst]) + " more than its workers can deliver");
  GameSpec game = build_task_game(params);
  apply_estimate(game, estimate_monotonicity(game, estimate_samples, seed));
  return {std::move(params), std::move(game)};
}

nlohmann::json to_json(const TaskAllocationParams& p) {
  nlohmann::json j;
  j["format"] = kFormat;
  j["seed"] = p.seed;
  j["topology"] = to_string(p.topology);
  j["task_count"] = p.task_count;
  j["worker_count"] = p.worker_count;
  j["local_share"] = p.local_share;
  j["load"] = vec_json(p.load);
  j["price_intercept"] = vec_json(p.price_intercept);
  j["price_slope"] = vec_json(p.price_slope);
  auto workers = nlohmann::json::array();
  for (std::size_t i = 0; i < static_cast<std::size_t>(p.worker_count); ++i) {
    nlohmann::json w;
    w["tasks"] = {p.pattern[i][0], p.pattern[i][1]};
    w["loss_factors"] = vec_json(p.loss_factors[i]);
    w["capacity"] = vec_json(p.capacity[i]);
    w["cost_weights"] = vec_json(p.cost_weights[i]);
    w["cost_vector"] = vec_json(p.cost_vectors[i]);
    w["cost_target"] = p.cost_targets[i];
    w["cost_quadratic"] = mat_json(p.cost_quadratic[i]);
    workers.push_back(std::move(w));
  }
  j["workers"] = std::move(workers);
  return j;
}

TaskAllocationParams params_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != kFormat)
    throw Error(std::string("instance file format must be ") + kFormat);
  TaskAllocationParams p;
  p.seed = j.at("seed").get<std::uint64_t>();
  p.topology = parse_topology(j.at("topology").get<std::string>());
  p.task_count = j.at("task_count").get<int>();
  p.worker_count = j.at("worker_count").get<int>();
  p.local_share = j.at("local_share").get<double>();
  p.load = json_vec(j.at("load"));
  p.price_intercept = json_vec(j.at("price_intercept"));
  p.price_slope = json_vec(j.at("price_slope"));
  const auto& workers = j.at("workers");
  if (static_cast<int>(workers.size()) != p.worker_count) throw Error("worker list length mismatch");
  for (const auto& w : workers) {
    const auto tasks = w.at("tasks").get<std::vector<int>>();
    if (tasks.size() != 2) throw Error("each worker must list exactly two tasks");
    p.pattern.push_back({tasks[0], tasks[1]});
    p.loss_factors.push_back(json_vec(w.at("loss_factors")));
    p.capacity.push_back(json_vec(w.at("capacity")));
    p.cost_weights.push_back(json_vec(w.at("cost_weights")));
    p.cost_vectors.push_back(json_vec(w.at("cost_vector")));
    p.cost_targets.push_back(w.at("cost_target").get<double>());
    p.cost_quadratic.push_back(json_mat(w.at("cost_quadratic")));
  }
  if (p.load.size() != p.task_count || p.price_intercept.size() != p.task_count ||
      p.price_slope.size() != p.task_count)
    throw Error("task vectors must have task_count entries");
  for (int i = 0; i < p.worker_count; ++i) {
    const auto w = static_cast<std::size_t>(i);
    if (p.loss_factors[w].size() != kOutputs || p.capacity[w].size() != kOutputs ||
        p.cost_weights[w].size() != kOutputs || p.cost_vectors[w].size() != kOutputs ||
        p.cost_quadratic[w].rows() != kOutputs || p.cost_quadratic[w].cols() != kOutputs)
      throw Error("worker " + std::to_string(i) + " has parameters of the wrong size");
  }
  return p;
}

void save_instance(const TaskGame& instance, const std::string& path) {
  nlohmann::json j = to_json(instance.params);
  if (instance.game.full_info) {
    j["constants"]["upsilon"] = instance.game.full_info->upsilon;
    j["constants"]["chi"] = instance.game.full_info->chi;
  }
  if (instance.game.pdi) j["constants"]["chi_bar"] = instance.game.pdi->chi_bar;
  std::ofstream out(path);
  if (!out) throw Error("cannot write instance file " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing instance file " + path);
}

TaskGame load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open instance file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed instance file " + path + ": " + e.what());
  }
  TaskAllocationParams params = params_from_json(j);
  GameSpec game = build_task_game(params);
  if (j.contains("constants")) {
    const auto& c = j["constants"];
    if (c.contains("upsilon") && c.contains("chi"))
      game.full_info = FullInfoConstants{c["upsilon"].get<double>(), c["chi"].get<double>()};
    if (c.contains("chi_bar")) game.pdi = PdiConstants{c["chi_bar"].get<double>()};
  }
  return {std::move(params), std::move(game)};
}

}  // namespace agne
