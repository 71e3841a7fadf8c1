// Command-line entry point: generate benchmark instances, validate step
// sizes, run experiments and compare two runs.
//
// Exit codes: 0 success, 1 usage/config error, 2 step-size certificate
// failure, 3 run did not reach its tolerance within max_steps.

#include "agne/experiment.hpp"
#include "agne/task_game.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace agne;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitCertificate = 2;
constexpr int kExitNotConverged = 3;

void print_certificate(const ResolvedSteps& r) {
  const StepCertificate& c = r.certificate;
  std::printf("mode            %s\n", to_string(c.mode).c_str());
  std::printf("sigma gamma tau %.6g %.6g %.6g (%d halvings)\n", r.steps.sigma, r.steps.gamma, r.steps.tau, r.halvings);
  std::printf("delta           %.6g (must exceed %.6g)\n", c.delta, c.delta_lower_bound);
  if (c.mode == InfoMode::Partial) std::printf("beta_E          %.6g\n", c.beta_e);
  std::printf("lambda_min      %.6e  (Phi - delta I)\n", c.lambda_min);
  std::printf("p_min, Psi      %.6g, %d\n", c.p_min, c.max_delay);
  std::printf("eta / eta_max   %.6g / %.6g\n", c.eta, c.eta_max);
  std::printf("alpha           %.6g\n", c.alpha);
  for (const auto& v : c.violations) std::printf("violation: %s\n", v.c_str());
  std::printf("certificate     %s\n", c.passed ? "PASS" : "FAIL");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

struct Written {
  std::string csv;
  std::string json;
};

Written write_outputs(const Experiment& e, const RunOutcome& o, const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  Written w{(fs::path(dir) / (name + ".csv")).string(), (fs::path(dir) / (name + ".json")).string()};
  write_trajectory_csv(o.trajectory, w.csv);
  write_text(w.json, run_metadata(e, o).dump(2) + "\n");
  return w;
}

void summarize(const Experiment& e, const RunOutcome& o) {
  const Trajectory& t = o.trajectory;
  const MetricRow& m = t.rows.back().metrics;
  std::printf("%s (%s): %lld steps, %s, %.3f s\n", to_string(e.config.algorithm).c_str(),
              to_string(e.config.mode).c_str(), static_cast<long long>(t.steps_taken),
              t.converged ? "converged" : "not converged", t.wall_seconds);
  std::printf("  kkt_total %.3e  feas %.3e  cons %.3e  stat %.3e  pdi_cons %.3e  rel_err %.3e\n", m.kkt_total,
              m.kkt_feas, m.kkt_cons, m.kkt_stat, m.pdi_cons, m.rel_err);
  std::printf("  max observed delay %d\n", t.max_observed_delay);
}

int cmd_generate(std::uint64_t seed, const std::string& topology, int samples, std::string out) {
  const TaskGame g = generate_task_game(seed, parse_topology(topology), samples);
  if (out.empty()) {
    ExperimentConfig defaults;
    out = (fs::path(output_directory(defaults)) / ("instance_" + topology + "_" + std::to_string(seed) + ".json")).string();
  }
  if (const auto parent = fs::path(out).parent_path(); !parent.empty()) fs::create_directories(parent);
  save_instance(g, out);
  const Vec margin = capacity_margin(g.params);
  std::printf("instance %s\n", out.c_str());
  std::printf("  seed %llu, topology %s, %d players, %d coupling rows, n = %d\n", static_cast<unsigned long long>(seed),
              topology.c_str(), g.game.player_count(), g.game.coupling_rows(), g.game.total_dim());
  std::printf("  upsilon %.6g, chi %.6g, chi_bar %.6g\n", g.game.full_info->upsilon, g.game.full_info->chi,
              g.game.pdi->chi_bar);
  std::printf("  smallest capacity margin %.6g\n", margin.minCoeff());
  return kExitOk;
}

int cmd_validate(const std::string& config_path) {
  const Experiment e = prepare_experiment(load_config(config_path));
  print_certificate(e.steps);
  return e.steps.certificate.passed ? kExitOk : kExitCertificate;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, const std::string& name) {
  const Experiment e = prepare_experiment(load_config(config_path));
  if (!e.steps.certificate.passed) {
    print_certificate(e.steps);
    return kExitCertificate;
  }
  const RunOutcome o = run_experiment(e);
  const Written w = write_outputs(e, o, out_dir.empty() ? output_directory(e.config) : out_dir,
                                  name.empty() ? e.config.output_name : name);
  summarize(e, o);
  std::printf("  wrote %s and %s\n", w.csv.c_str(), w.json.c_str());
  return o.trajectory.converged ? kExitOk : kExitNotConverged;
}

int cmd_compare(const std::string& path_a, const std::string& path_b, const std::string& out_dir) {
  const Experiment a = prepare_experiment(load_config(path_a));
  const Experiment b = prepare_experiment(load_config(path_b));
  for (const Experiment* e : {&a, &b})
    if (!e->steps.certificate.passed) {
      print_certificate(e->steps);
      return kExitCertificate;
    }
  if (a.instance.game.total_dim() != b.instance.game.total_dim()) throw Error("compared runs have different games");
  const RunOutcome ra = run_experiment(a);
  const RunOutcome rb = run_experiment(b);
  const Trajectory& ta = ra.trajectory;
  const Trajectory& tb = rb.trajectory;

  // Rows are matched by step index; metric columns give b - a.
  std::ostringstream csv;
  csv << "step,kkt_total_a,kkt_total_b,rel_err_a,rel_err_b,profile_diff\n";
  csv.precision(17);
  std::size_t ib = 0;
  double worst_profile = 0.0;
  for (std::size_t ia = 0; ia < ta.rows.size(); ++ia) {
    while (ib < tb.rows.size() && tb.rows[ib].step < ta.rows[ia].step) ++ib;
    if (ib == tb.rows.size()) break;
    if (tb.rows[ib].step != ta.rows[ia].step) continue;
    const double d = (ta.profiles[ia] - tb.profiles[ib]).norm();
    worst_profile = std::max(worst_profile, d);
    csv << ta.rows[ia].step << ',' << ta.rows[ia].metrics.kkt_total << ',' << tb.rows[ib].metrics.kkt_total << ','
        << ta.rows[ia].metrics.rel_err << ',' << tb.rows[ib].metrics.rel_err << ',' << d << '\n';
  }

  const double final_diff = (ta.final_x - tb.final_x).norm();
  const double final_rel = tb.final_x.norm() > 0.0 ? final_diff / tb.final_x.norm() : final_diff;
  nlohmann::json report;
  report["a"] = {{"config", path_a}, {"algorithm", to_string(a.config.algorithm)}, {"steps", ta.steps_taken},
                 {"converged", ta.converged}, {"activations", ta.activations}};
  report["b"] = {{"config", path_b}, {"algorithm", to_string(b.config.algorithm)}, {"steps", tb.steps_taken},
                 {"converged", tb.converged}, {"activations", tb.activations}};
  report["final_profile_difference"] = final_diff;
  report["final_profile_relative_difference"] = final_rel;
  report["max_profile_difference_on_shared_steps"] = worst_profile;

  const std::string dir = out_dir.empty() ? output_directory(a.config) : out_dir;
  fs::create_directories(dir);
  const std::string stem = a.config.output_name + "_vs_" + b.config.output_name;
  write_text((fs::path(dir) / (stem + ".csv")).string(), csv.str());
  write_text((fs::path(dir) / (stem + ".json")).string(), report.dump(2) + "\n");

  summarize(a, ra);
  summarize(b, rb);
  std::printf("final profile difference %.3e (relative %.3e)\n", final_diff, final_rel);
  std::printf("max profile difference on shared steps %.3e\n", worst_profile);
  std::printf("%-6s %14s %14s\n", "agent", "updates_a", "updates_b");
  for (std::size_t i = 0; i < ta.activations.size(); ++i)
    std::printf("%-6zu %14lld %14lld\n", i, static_cast<long long>(ta.activations[i]),
                static_cast<long long>(i < tb.activations.size() ? tb.activations[i] : 0));
  std::printf("wrote %s.{csv,json} in %s\n", stem.c_str(), dir.c_str());
  return ta.converged && tb.converged ? kExitOk : kExitNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational GNE solvers for monotone games with affine coupling"};
  app.require_subcommand(1);

  std::uint64_t seed = kBenchmarkSeed;
  std::string topology = "figure1";
  int samples = 1000;
  std::string out;
  auto* gen = app.add_subcommand("generate", "Sample a task-allocation instance and write it as JSON");
  gen->add_option("--seed", seed, "Instance seed")->capture_default_str();
  gen->add_option("--topology", topology, "figure1 or random")->capture_default_str();
  gen->add_option("--samples", samples, "Sampled pairs for the monotonicity constants")->capture_default_str();
  gen->add_option("-o,--out", out, "Output path (default: $AGNE_OUTPUT_DIR/instance_<topology>_<seed>.json)");

  std::string config;
  auto* val = app.add_subcommand("validate", "Resolve and certify the step sizes of a config");
  val->add_option("config", config, "Experiment config (INI)")->required()->check(CLI::ExistingFile);

  std::string out_dir;
  std::string name;
  auto* run = app.add_subcommand("run", "Run an experiment; write trajectory CSV and metadata JSON");
  run->add_option("config", config, "Experiment config (INI)")->required()->check(CLI::ExistingFile);
  run->add_option("--out-dir", out_dir, "Output directory (overrides config and $AGNE_OUTPUT_DIR)");
  run->add_option("--name", name, "Output file stem (overrides output.name)");

  std::string config_b;
  auto* cmp = app.add_subcommand("compare", "Run two configs and report profile differences and update counts");
  cmp->add_option("config_a", config, "First config")->required()->check(CLI::ExistingFile);
  cmp->add_option("config_b", config_b, "Second config")->required()->check(CLI::ExistingFile);
  cmp->add_option("--out-dir", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*gen) return cmd_generate(seed, topology, samples, out);
    if (*val) return cmd_validate(config);
    if (*run) return cmd_run(config, out_dir, name);
    if (*cmp) return cmd_compare(config, config_b, out_dir);
  } catch (const CertificateError& e) {
    std::fprintf(stderr, "certificate failure: %s\n", e.what());
    return kExitCertificate;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
