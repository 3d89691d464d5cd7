// Batch front end: instance generation, mechanism runs over instance files,
// a per-agent misreport audit, the fixed worked-example regression, and a
// quick self-contained property suite.  Exit code 0 only when everything
// asserted by the chosen subcommand passes.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "edp/extensions.hpp"
#include "edp/harness.hpp"
#include "edp/instance.hpp"
#include "edp/mechanism.hpp"
#include "edp/oracles.hpp"
#include "edp/rounding.hpp"
#include "edp/values.hpp"

namespace {

int cmd_gen(int n, int d, const std::string& model_name, std::uint64_t seed,
            int count, const std::string& out_dir) {
  edp::cost_model model = edp::cost_model::uniform;
  if (model_name == "uniform") {
    model = edp::cost_model::uniform;
  } else if (model_name == "proportional-to-norm") {
    model = edp::cost_model::proportional_to_norm;
  } else if (model_name == "adversarial-singleton") {
    model = edp::cost_model::adversarial_singleton;
  } else {
    std::cerr << "gen: unknown model '" << model_name << "'\n";
    return 2;
  }
  std::filesystem::create_directories(out_dir);
  for (int k = 0; k < count; ++k) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(k);
    edp::instance inst = edp::generate_instance(n, d, model, s);
    std::ostringstream name;
    name << "instance_" << model_name << "_n" << n << "_d" << d << "_s" << s
         << ".json";
    const std::string path =
        (std::filesystem::path(out_dir) / name.str()).string();
    edp::save_instance(inst, path);
    std::cout << path << "  digest " << edp::instance_digest(inst) << '\n';
  }
  return 0;
}

edp::batch_config parse_batch_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("run: cannot open config " + path);
  nlohmann::json j;
  in >> j;
  edp::batch_config cfg;
  cfg.instance_paths = j.at("instances").get<std::vector<std::string>>();
  if (j.contains("delta")) cfg.params.delta = j["delta"].get<double>();
  if (j.contains("eps")) cfg.params.eps = j["eps"].get<double>();
  if (j.contains("pay_tol")) cfg.params.pay_tol = j["pay_tol"].get<double>();
  if (j.contains("oracle"))
    cfg.params.with_oracle = j["oracle"].get<std::string>() != "none";
  if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
  return cfg;
}

int cmd_run(const std::string& config_path, const std::string& out_path,
            const std::string& csv_path, double delta, double eps,
            double pay_tol, const std::string& oracle, int workers) {
  edp::batch_config cfg = parse_batch_config(config_path);
  if (delta > 0) cfg.params.delta = delta;
  if (eps > 0) cfg.params.eps = eps;
  if (pay_tol > 0) cfg.params.pay_tol = pay_tol;
  if (!oracle.empty()) cfg.params.with_oracle = oracle != "none";
  if (workers > 0) cfg.workers = workers;

  edp::batch_result result = edp::run_batch(cfg);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << edp::report_to_json(result);
  }
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    out << edp::report_to_csv(result);
  }
  const edp::batch_summary& s = result.summary;
  std::cout << "instances " << s.total << "  failed " << s.failed
            << "  budget violations " << s.budget_violations
            << "  max payment total " << s.max_payment_total << '\n';
  if (s.max_opt_over_allocated > 0)
    std::cout << "max OPT / allocated value: " << s.max_opt_over_allocated
              << '\n';
  std::cout << "all checks pass: " << (s.all_checks_pass ? "yes" : "NO")
            << '\n';
  return (s.failed == 0 && s.all_checks_pass) ? 0 : 1;
}

int cmd_audit(const std::string& instance_path, double delta, double eps,
              int grid_points, double pay_tol, const std::string& out_path) {
  edp::instance inst = edp::load_instance(instance_path);
  edp::audit_report rep =
      edp::audit_truthfulness(inst, delta, eps, grid_points, pay_tol);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << edp::audit_to_json(rep);
  }
  const double allowed = rep.pay_tol + 2.0 * eps;
  std::cout << "agents " << inst.n() << "  grid " << grid_points
            << "  max misreport gain outside the delta band " << rep.max_gain
            << "  (allowed " << allowed << ")\n";
  for (const edp::agent_audit& au : rep.agents)
    std::cout << "  agent " << au.agent << ": truthful utility "
              << au.truthful_utility << ", max gain outside band "
              << au.max_gain_outside_band << '\n';
  return rep.max_gain <= allowed ? 0 : 1;
}

int cmd_demo() {
  edp::demo_report rep = edp::non_monotonicity_demo();
  std::cout << edp::demo_report_to_text(rep);
  return (rep.all_checks_pass && rep.flip_demonstrated) ? 0 : 1;
}

struct prop_tally {
  int pass = 0;
  int fail = 0;
  void note(bool ok) { (ok ? pass : fail) += 1; }
};

int cmd_props(std::uint64_t seed, int count) {
  prop_tally mechanism_ok, sandwich_ok, rounding_ok;
  for (int k = 0; k < count; ++k) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(k);
    const int n = 2 + static_cast<int>(s % 7);  // 2..8
    const int d = 2 + static_cast<int>(s % 3);  // 2..4
    const edp::cost_model model = (k % 2 == 0)
                                      ? edp::cost_model::uniform
                                      : edp::cost_model::proportional_to_norm;
    edp::instance inst = edp::generate_instance(n, d, model, s);

    edp::run_report rep = edp::run_one(inst, edp::run_params{});
    bool ok = rep.ok;
    for (const edp::property_check& c : rep.checks) ok = ok && c.pass;
    mechanism_ok.note(ok);
    if (!ok)
      std::cout << "  mechanism check failed on seed " << s
                << (rep.ok ? "" : std::string(": ") + rep.error) << '\n';

    // Random box-and-budget feasible point for the relaxation / rounding
    // properties.
    edp::rng r(s ^ 0x5eedULL);
    Eigen::VectorXd lambda(n);
    for (int i = 0; i < n; ++i) lambda(i) = r.uniform();
    const double spend = inst.costs().dot(lambda);
    if (spend > inst.budget()) lambda *= inst.budget() / spend;

    const double l_val = edp::L_value(inst, lambda);
    const double f_val = edp::F_exact(inst, lambda);
    const bool sandwich =
        0.5 * l_val <= f_val + 1e-9 && f_val <= l_val + 1e-9;
    sandwich_ok.note(sandwich);
    if (!sandwich)
      std::cout << "  sandwich violated on seed " << s << ": L " << l_val
                << " F " << f_val << '\n';

    edp::rounding_result rounded = edp::pipage_round(inst, lambda);
    int fractional = 0;
    for (int i = 0; i < n; ++i) {
      const double v = rounded.indicator(i);
      if (std::min(v, 1.0 - v) > 1e-9) ++fractional;
    }
    const double drift =
        std::abs(inst.costs().dot(rounded.indicator) - inst.costs().dot(lambda));
    const double f_after = edp::F_exact(inst, rounded.indicator);
    const bool sound = fractional <= 1 && drift <= 1e-9 &&
                       f_after >= f_val - 1e-9;
    rounding_ok.note(sound);
    if (!sound)
      std::cout << "  rounding unsound on seed " << s << ": fractional "
                << fractional << " drift " << drift << " dF "
                << (f_after - f_val) << '\n';
  }

  auto line = [](const char* name, const prop_tally& t) {
    std::cout << name << ": " << t.pass << "/" << (t.pass + t.fail)
              << (t.fail == 0 ? "  pass" : "  FAIL") << '\n';
    return t.fail == 0;
  };
  bool all = true;
  all = line("mechanism invariants + oracle bounds", mechanism_ok) && all;
  all = line("relaxation sandwich", sandwich_ok) && all;
  all = line("pipage soundness", rounding_ok) && all;
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Budget-feasible experiment-purchase mechanism: generate instances, "
      "run the mechanism in batch, audit misreports, and check properties."};
  app.require_subcommand(1);

  // gen
  int gen_n = 8, gen_d = 3, gen_count = 1;
  std::uint64_t gen_seed = 1;
  std::string gen_model = "uniform", gen_out_dir = ".";
  CLI::App* gen = app.add_subcommand("gen", "Generate instance files");
  gen->add_option("--n", gen_n, "Number of agents")->check(CLI::PositiveNumber);
  gen->add_option("--d", gen_d, "Feature dimension")
      ->check(CLI::PositiveNumber);
  gen->add_option("--model", gen_model,
                  "Cost model: uniform | proportional-to-norm | "
                  "adversarial-singleton");
  gen->add_option("--seed", gen_seed, "Base seed (k-th file uses seed+k)");
  gen->add_option("--count", gen_count, "Number of instances")
      ->check(CLI::PositiveNumber);
  gen->add_option("--out-dir", gen_out_dir, "Output directory");

  // run
  std::string run_config, run_out, run_csv, run_oracle;
  double run_delta = -1, run_eps = -1, run_pay_tol = -1;
  int run_workers = 0;
  CLI::App* run =
      app.add_subcommand("run", "Run the mechanism over a batch config");
  run->add_option("config", run_config, "Batch config JSON")->required();
  run->add_option("--out", run_out, "Write the JSON report here");
  run->add_option("--csv", run_csv, "Write the flat CSV table here");
  run->add_option("--delta", run_delta, "Override: truthfulness slack delta");
  run->add_option("--eps", run_eps, "Override: accuracy epsilon");
  run->add_option("--pay-tol", run_pay_tol,
                  "Override: payment bisection tolerance");
  run->add_option("--oracle", run_oracle, "Override: brute | none")
      ->check(CLI::IsMember({"brute", "none"}));
  run->add_option("--workers", run_workers, "Worker threads (0: $EDP_WORKERS)");

  // audit
  std::string audit_instance, audit_out;
  double audit_delta = 0.05, audit_eps = 0.01, audit_pay_tol = -1;
  int audit_grid = 21;
  CLI::App* audit = app.add_subcommand(
      "audit", "Misreport audit for every agent of one instance");
  audit->add_option("instance", audit_instance, "Instance JSON")->required();
  audit->add_option("--delta", audit_delta, "Truthfulness slack delta");
  audit->add_option("--eps", audit_eps, "Accuracy epsilon");
  audit->add_option("--grid-points", audit_grid, "Misreport grid size")
      ->check(CLI::Range(2, 100000));
  audit->add_option("--pay-tol", audit_pay_tol,
                    "Payment bisection tolerance (<=0: 1e-6 * budget)");
  audit->add_option("--out", audit_out, "Write the JSON audit here");

  // demo-appendix-g
  app.add_subcommand("demo-appendix-g",
                     "Reproduce the fixed worked example: cited figures and "
                     "the baseline's non-monotonicity flip");

  // props
  std::uint64_t props_seed = 1;
  int props_count = 25;
  CLI::App* props = app.add_subcommand(
      "props", "Quick randomized property suite (exit 0 only if all pass)");
  props->add_option("--seed", props_seed, "Base seed");
  props->add_option("--count", props_count, "Instances to draw")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_gen(gen_n, gen_d, gen_model, gen_seed, gen_count, gen_out_dir);
    if (run->parsed())
      return cmd_run(run_config, run_out, run_csv, run_delta, run_eps,
                     run_pay_tol, run_oracle, run_workers);
    if (audit->parsed())
      return cmd_audit(audit_instance, audit_delta, audit_eps, audit_grid,
                       audit_pay_tol, audit_out);
    if (app.get_subcommand("demo-appendix-g")->parsed()) return cmd_demo();
    if (props->parsed()) return cmd_props(props_seed, props_count);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
