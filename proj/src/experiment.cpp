#include "agne/experiment.hpp"

#include "agne/threaded.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace agne {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

std::string to_string(ExecutionMode m) { return m == ExecutionMode::Threaded ? "threaded" : "deterministic"; }

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"game", {"seed", "topology", "instance", "samples"}},
      {"graph", {"type", "p", "seed", "edges"}},
      {"algorithm", {"name", "mode"}},
      {"steps", {"sigma", "gamma", "tau", "eta", "delta", "c", "max_delay", "halve"}},
      {"activation", {"rates"}},
      {"seeds", {"activation", "delay", "init"}},
      {"stop", {"max_steps", "tol", "record_every"}},
      {"reference", {"enabled", "tol"}},
      {"output", {"dir", "name"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

double parse_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error("config key " + key + ": '" + raw + "' is not a number");
}

std::int64_t parse_int(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used == v.size()) return n;
  } catch (const std::exception&) {
  }
  throw Error("config key " + key + ": '" + raw + "' is not an integer");
}

std::uint64_t parse_seed(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  try {
    std::size_t used = 0;
    const unsigned long long n = std::stoull(v, &used);
    if (used == v.size() && v.front() != '-') return n;
  } catch (const std::exception&) {
  }
  throw Error("config key " + key + ": '" + raw + "' is not a nonnegative integer");
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw Error("config key " + key + ": '" + raw + "' is not a boolean");
}

std::optional<double> parse_auto(const std::string& key, const std::string& raw) {
  if (trim(raw) == "auto") return std::nullopt;
  return parse_double(key, raw);
}

std::vector<double> parse_list(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(parse_double(key, item));
  return out;
}

std::vector<Edge> parse_edges(const std::string& raw) {
  std::vector<Edge> out;
  std::stringstream ss(raw);
  std::string item;
  while (ss >> item) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) throw Error("graph.edges: '" + item + "' is not of the form tail-head");
    out.push_back({static_cast<int>(parse_int("graph.edges", item.substr(0, dash))),
                   static_cast<int>(parse_int("graph.edges", item.substr(dash + 1)))});
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

CommGraph build_graph(const ExperimentConfig& c, int players) {
  if (c.graph_type == "ring") return CommGraph::ring(players);
  if (c.graph_type == "path") return CommGraph::path(players);
  if (c.graph_type == "star") return CommGraph::star(players);
  if (c.graph_type == "random") return CommGraph::random_connected(players, c.graph_p, c.graph_seed);
  if (c.graph_type == "explicit") return CommGraph(players, c.graph_edges);
  throw Error("unknown graph type '" + c.graph_type + "' (expected ring, path, star, random or explicit)");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
  }

  for (const auto& [section, body] : tree) {
    const auto known = known_keys().find(section);
    if (known == known_keys().end()) throw Error("config: unknown section [" + section + "]");
    if (!body.data().empty()) throw Error("config: key " + section + " outside a section");
    for (const auto& kv : body)
      if (!known->second.count(kv.first)) throw Error("config: unknown key " + section + "." + kv.first);
  }

  ExperimentConfig c;
  auto get = [&](const std::string& key) { return tree.get_optional<std::string>(key); };

  if (auto v = get("game.seed")) c.game_seed = parse_seed("game.seed", *v);
  if (auto v = get("game.topology")) c.topology = parse_topology(trim(*v));
  if (auto v = get("game.instance"); v && !trim(*v).empty()) {
    fs::path p = trim(*v);
    if (p.is_relative()) p = fs::path(base_dir) / p;
    c.instance_path = p.string();
  }
  if (auto v = get("game.samples")) c.estimate_samples = static_cast<int>(parse_int("game.samples", *v));

  if (auto v = get("graph.type")) c.graph_type = trim(*v);
  if (auto v = get("graph.p")) c.graph_p = parse_double("graph.p", *v);
  if (auto v = get("graph.seed")) c.graph_seed = parse_seed("graph.seed", *v);
  if (auto v = get("graph.edges")) c.graph_edges = parse_edges(*v);
  if (c.graph_type == "explicit" && c.graph_edges.empty()) throw Error("config: explicit graph needs graph.edges");

  if (auto v = get("algorithm.name")) c.algorithm = parse_algorithm(trim(*v));
  if (auto v = get("algorithm.mode")) {
    const std::string m = trim(*v);
    if (m == "deterministic") c.mode = ExecutionMode::Deterministic;
    else if (m == "threaded") c.mode = ExecutionMode::Threaded;
    else throw Error("config: algorithm.mode must be deterministic or threaded");
  }

  if (auto v = get("steps.sigma")) c.steps.sigma = parse_double("steps.sigma", *v);
  if (auto v = get("steps.gamma")) c.steps.gamma = parse_double("steps.gamma", *v);
  if (auto v = get("steps.tau")) c.steps.tau = parse_double("steps.tau", *v);
  if (auto v = get("steps.eta")) c.steps.eta = parse_auto("steps.eta", *v);
  if (auto v = get("steps.delta")) c.steps.delta = parse_auto("steps.delta", *v);
  if (auto v = get("steps.c")) c.steps.c = parse_double("steps.c", *v);
  if (auto v = get("steps.max_delay")) c.steps.max_delay = static_cast<int>(parse_int("steps.max_delay", *v));
  if (auto v = get("steps.halve")) c.steps.halve = parse_bool("steps.halve", *v);

  if (auto v = get("activation.rates")) c.rates = parse_list("activation.rates", *v);

  if (auto v = get("seeds.activation")) c.activation_seed = parse_seed("seeds.activation", *v);
  if (auto v = get("seeds.delay")) c.delay_seed = parse_seed("seeds.delay", *v);
  if (auto v = get("seeds.init")) c.init_seed = parse_seed("seeds.init", *v);

  if (auto v = get("stop.max_steps")) c.max_steps = parse_int("stop.max_steps", *v);
  if (auto v = get("stop.tol")) c.tol = parse_double("stop.tol", *v);
  if (auto v = get("stop.record_every")) c.record_every = parse_int("stop.record_every", *v);

  if (auto v = get("reference.enabled")) c.reference = parse_bool("reference.enabled", *v);
  if (auto v = get("reference.tol")) c.reference_tol = parse_double("reference.tol", *v);

  if (auto v = get("output.dir"); v && !trim(*v).empty()) {
    fs::path p = trim(*v);
    if (p.is_relative()) p = fs::path(base_dir) / p;
    c.output_dir = p.string();
  }
  if (auto v = get("output.name")) c.output_name = trim(*v);

  if (c.max_steps < 0) throw Error("config: stop.max_steps must be nonnegative");
  if (c.record_every < 1) throw Error("config: stop.record_every must be positive");
  if (c.steps.max_delay < 0) throw Error("config: steps.max_delay must be nonnegative");
  if ((c.algorithm == Algorithm::Sydney || c.algorithm == Algorithm::Rbca) && c.steps.max_delay != 0)
    throw Error("config: " + to_string(c.algorithm) + " has no delays; set steps.max_delay = 0");
  if (c.mode == ExecutionMode::Threaded && c.algorithm != Algorithm::Adagnes && c.algorithm != Algorithm::AdagnesPdi)
    throw Error("config: threaded mode supports adagnes and adagnes-pdi only");
  if (c.output_name.empty() || c.output_name.find('/') != std::string::npos)
    throw Error("config: output.name must be a plain file stem");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const fs::path parent = fs::path(path).parent_path();
  return parse_config_text(buf.str(), parent.empty() ? "." : parent.string());
}

std::string ExperimentConfig::echo() const {
  std::ostringstream os;
  os << "[game]\n";
  if (instance_path) os << "instance = " << *instance_path << "\n";
  else os << "seed = " << game_seed << "\ntopology = " << to_string(topology) << "\nsamples = " << estimate_samples << "\n";
  os << "[graph]\ntype = " << graph_type << "\n";
  if (graph_type == "random") os << "p = " << fmt(graph_p) << "\nseed = " << graph_seed << "\n";
  if (graph_type == "explicit") {
    os << "edges =";
    for (const Edge& e : graph_edges) os << " " << e.tail << "-" << e.head;
    os << "\n";
  }
  os << "[algorithm]\nname = " << to_string(algorithm) << "\nmode = " << to_string(mode) << "\n";
  os << "[steps]\nsigma = " << fmt(steps.sigma) << "\ngamma = " << fmt(steps.gamma) << "\ntau = " << fmt(steps.tau)
     << "\neta = " << (steps.eta ? fmt(*steps.eta) : "auto") << "\ndelta = " << (steps.delta ? fmt(*steps.delta) : "auto")
     << "\nc = " << fmt(steps.c) << "\nmax_delay = " << steps.max_delay << "\nhalve = " << (steps.halve ? "true" : "false")
     << "\n";
  os << "[activation]\nrates =";
  for (std::size_t k = 0; k < rates.size(); ++k) os << (k ? ", " : " ") << fmt(rates[k]);
  os << "\n[seeds]\nactivation = " << activation_seed << "\ndelay = " << delay_seed << "\ninit = " << init_seed << "\n";
  os << "[stop]\nmax_steps = " << max_steps << "\ntol = " << (std::isinf(tol) ? "inf" : fmt(tol))
     << "\nrecord_every = " << record_every << "\n";
  os << "[reference]\nenabled = " << (reference ? "true" : "false") << "\ntol = " << fmt(reference_tol) << "\n";
  os << "[output]\nname = " << output_name << "\n";
  return os.str();
}

Experiment prepare_experiment(const ExperimentConfig& config) {
  TaskGame instance = config.instance_path ? load_instance(*config.instance_path)
                                           : generate_task_game(config.game_seed, config.topology, config.estimate_samples);
  const int players = instance.game.player_count();
  CommGraph graph = build_graph(config, players);
  SplitOperators ops(instance.game, graph, info_mode(config.algorithm));

  ActivationSampler sampler = config.rates.empty() ? ActivationSampler::uniform(players) : ActivationSampler(config.rates);
  if (sampler.players() != players)
    throw Error("config: activation.rates has " + std::to_string(sampler.players()) + " entries for " +
                std::to_string(players) + " players");
  // The synchronous iteration updates every agent, which the relaxation
  // bound treats as p_min = 1/N.
  const double p_min = config.algorithm == Algorithm::Sydney ? 1.0 / players : sampler.p_min();
  ResolvedSteps steps = resolve_steps(ops, config.steps, p_min);

  Rng rng(config.init_seed);
  const Vec lo = instance.game.lower_bounds();
  const Vec hi = instance.game.upper_bounds();
  Vec x0(instance.game.total_dim());
  for (Index k = 0; k < x0.size(); ++k) {
    if (!std::isfinite(lo[k]) || !std::isfinite(hi[k])) throw Error("random initial point needs finite boxes");
    x0[k] = rng.uniform(lo[k], hi[k]);
  }
  return Experiment{config, std::move(instance), std::move(graph), std::move(ops), std::move(steps), p_min, std::move(x0)};
}

RunOutcome run_experiment(const Experiment& e) {
  if (!e.steps.certificate.passed) {
    std::string why = "step sizes failed validation";
    for (const auto& v : e.steps.certificate.violations) why += "; " + v;
    throw CertificateError(why);
  }
  RunOutcome out;
  RunSettings s;
  s.algorithm = e.config.algorithm;
  s.steps = e.steps.steps;
  s.certificate = e.steps.certificate;
  s.rates = e.config.rates;
  s.activation_seed = e.config.activation_seed;
  s.delay_seed = e.config.delay_seed;
  s.max_steps = e.config.max_steps;
  s.tol = e.config.tol;
  s.record_every = e.config.record_every;
  if (e.config.reference) {
    out.reference = oracle_gne(e.instance.game, e.graph, e.config.reference_tol);
    s.reference = out.reference->x;
  }
  out.trajectory = e.config.mode == ExecutionMode::Threaded ? threaded_run(e.ops, s, e.x0) : run(e.ops, s, e.x0);
  return out;
}

std::string output_directory(const ExperimentConfig& config) {
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv("AGNE_OUTPUT_DIR"); env && *env) return env;
  return ".";
}

std::string trajectory_csv(const Trajectory& t) {
  std::ostringstream os;
  os << "step,agent,agent_updates,kkt_total,kkt_feas,kkt_cons,kkt_stat,pdi_cons,rel_err,disp\n";
  for (const auto& r : t.rows) {
    const MetricRow& m = r.metrics;
    os << r.step << ',' << r.agent << ',' << r.agent_updates << ',' << fmt(m.kkt_total) << ',' << fmt(m.kkt_feas)
       << ',' << fmt(m.kkt_cons) << ',' << fmt(m.kkt_stat) << ',' << fmt(m.pdi_cons) << ','
       << (std::isnan(m.rel_err) ? std::string("nan") : fmt(m.rel_err)) << ',' << fmt(m.disp) << '\n';
  }
  return os.str();
}

void write_trajectory_csv(const Trajectory& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << trajectory_csv(t);
  if (!out) throw Error("failed writing " + path);
}

nlohmann::json certificate_json(const StepCertificate& c) {
  nlohmann::json j;
  j["mode"] = to_string(c.mode);
  j["passed"] = c.passed;
  j["lambda_min"] = c.lambda_min;
  j["delta"] = c.delta;
  j["delta_lower_bound"] = c.delta_lower_bound;
  if (c.mode == InfoMode::Partial) j["beta_e"] = c.beta_e;
  j["eta"] = c.eta;
  j["eta_max"] = c.eta_max;
  j["alpha"] = c.alpha;
  j["p_min"] = c.p_min;
  j["max_delay"] = c.max_delay;
  j["violations"] = c.violations;
  return j;
}

nlohmann::json steps_json(const StepSizes& s) {
  return {{"sigma", s.sigma}, {"gamma", s.gamma}, {"tau", s.tau}, {"eta", s.eta},
          {"delta", s.delta}, {"c", s.c},         {"max_delay", s.max_delay}};
}

nlohmann::json run_metadata(const Experiment& e, const RunOutcome& o) {
  const Trajectory& t = o.trajectory;
  nlohmann::json j;
  j["config"] = e.config.echo();
  j["seeds"] = {{"game", e.instance.params.seed},
                {"activation", e.config.activation_seed},
                {"delay", e.config.delay_seed},
                {"init", e.config.init_seed},
                {"graph", e.config.graph_seed}};
  j["game"] = {{"players", e.instance.game.player_count()},
               {"coupling_rows", e.instance.game.coupling_rows()},
               {"dimension", e.instance.game.total_dim()}};
  if (e.instance.game.full_info)
    j["game"]["constants"] = {{"upsilon", e.instance.game.full_info->upsilon}, {"chi", e.instance.game.full_info->chi}};
  if (e.instance.game.pdi) j["game"]["constants"]["chi_bar"] = e.instance.game.pdi->chi_bar;
  j["graph"] = {{"nodes", e.graph.node_count()}, {"edges", e.graph.edge_count()}, {"max_degree", e.graph.max_degree()}};
  j["steps"] = steps_json(e.steps.steps);
  j["halvings"] = e.steps.halvings;
  j["certificate"] = certificate_json(t.certificate);
  j["run"] = {{"steps_taken", t.steps_taken},
              {"converged", t.converged},
              {"rows", t.rows.size()},
              {"max_observed_delay", t.max_observed_delay},
              {"activations", t.activations},
              {"wall_seconds", t.wall_seconds},
              {"final_x", std::vector<double>(t.final_x.data(), t.final_x.data() + t.final_x.size())}};
  if (o.reference)
    j["reference"] = {{"iterations", o.reference->iterations},
                      {"kkt_total", o.reference->residual.total},
                      {"x", std::vector<double>(o.reference->x.data(), o.reference->x.data() + o.reference->x.size())}};
  return j;
}

}  // namespace agne
