#include "edp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "edp/values.hpp"

namespace edp {

namespace {

using ordered_json = nlohmann::ordered_json;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t rng::next_bits() { return splitmix64(seed_ ^ splitmix64(counter_++)); }

double rng::uniform() {
  return static_cast<double>(next_bits() >> 11) * 0x1.0p-53;
}

double rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller; reject u1 = 0 so the log stays finite.
  double u1 = 0.0;
  do { u1 = uniform(); } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::acos(-1.0) * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

std::string cost_model_name(cost_model m) {
  switch (m) {
    case cost_model::uniform: return "uniform";
    case cost_model::proportional_to_norm: return "proportional-to-norm";
    case cost_model::adversarial_singleton: return "adversarial-singleton";
  }
  return "unknown";
}

instance generate_instance(int n, int d, cost_model model,
                           std::uint64_t seed) {
  if (n < 1 || d < 1)
    throw std::invalid_argument("generate_instance: n and d must be >= 1");
  const double budget = 1.0;
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd c(n);
  rng r(seed);

  if (model == cost_model::adversarial_singleton) {
    // Standard-basis rows, every cost just above B/2: any two together blow
    // the budget, so at most one agent can ever be afforded.
    x.setZero();
    for (int i = 0; i < n; ++i) x(i, i % d) = 1.0;
    c.setConstant(budget / 2.0 + 1e-3);
  } else {
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd g(d);
      double norm = 0.0;
      do {
        for (int j = 0; j < d; ++j) g(j) = r.gaussian();
        norm = g.norm();
      } while (norm == 0.0);
      const double target_sq = r.uniform(0.25, 1.0);
      x.row(i) = (g / norm * std::sqrt(target_sq)).transpose();
    }
    if (model == cost_model::uniform) {
      for (int i = 0; i < n; ++i) c(i) = budget * r.uniform(0.02, 0.7);
    } else {
      for (int i = 0; i < n; ++i)
        c(i) = budget * x.row(i).squaredNorm() * r.uniform(0.3, 0.7);
    }
  }

  instance out(x, c, budget);
  out.metadata["generator"] = cost_model_name(model);
  out.metadata["seed"] = std::to_string(seed);
  return out;
}

namespace {

ordered_json instance_data_json(const instance& inst) {
  ordered_json j;
  j["schema_version"] = 1;
  j["n"] = inst.n();
  j["d"] = inst.d();
  std::vector<double> feat;
  feat.reserve(static_cast<size_t>(inst.n()) * static_cast<size_t>(inst.d()));
  for (int i = 0; i < inst.n(); ++i)
    for (int k = 0; k < inst.d(); ++k) feat.push_back(inst.features()(i, k));
  j["features"] = feat;
  std::vector<double> costs(inst.costs().data(),
                            inst.costs().data() + inst.n());
  j["costs"] = costs;
  j["budget"] = inst.budget();
  if (inst.has_prior()) {
    std::vector<double> prior;
    prior.reserve(static_cast<size_t>(inst.d()) * static_cast<size_t>(inst.d()));
    for (int i = 0; i < inst.d(); ++i)
      for (int k = 0; k < inst.d(); ++k) prior.push_back(inst.prior()(i, k));
    j["prior"] = prior;
  }
  return j;
}

}  // namespace

void save_instance(const instance& inst, const std::string& path) {
  ordered_json j = instance_data_json(inst);
  j["metadata"] = inst.metadata;
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("save_instance: cannot open " + path);
  out << j.dump(2) << '\n';
  if (!out)
    throw std::runtime_error("save_instance: write failed for " + path);
}

instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("load_instance: cannot open " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("load_instance: parse error in " + path + ": " +
                             e.what());
  }
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
    throw std::runtime_error("load_instance: unsupported schema in " + path);
  const int n = j.at("n").get<int>();
  const int d = j.at("d").get<int>();
  const auto feat = j.at("features").get<std::vector<double>>();
  const auto costs = j.at("costs").get<std::vector<double>>();
  if (n < 1 || d < 1 || feat.size() != static_cast<size_t>(n) * static_cast<size_t>(d) ||
      costs.size() != static_cast<size_t>(n))
    throw std::runtime_error("load_instance: shape mismatch in " + path);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k)
      x(i, k) = feat[static_cast<size_t>(i) * static_cast<size_t>(d) +
                     static_cast<size_t>(k)];
  Eigen::VectorXd c =
      Eigen::Map<const Eigen::VectorXd>(costs.data(), n);
  const double budget = j.at("budget").get<double>();

  std::optional<instance> out;
  if (j.contains("prior")) {
    const auto pr = j.at("prior").get<std::vector<double>>();
    if (pr.size() != static_cast<size_t>(d) * static_cast<size_t>(d))
      throw std::runtime_error("load_instance: prior shape mismatch in " + path);
    Eigen::MatrixXd prior(d, d);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k)
        prior(i, k) = pr[static_cast<size_t>(i) * static_cast<size_t>(d) +
                         static_cast<size_t>(k)];
    out.emplace(x, c, budget, prior);
  } else {
    out.emplace(x, c, budget);
  }
  if (j.contains("metadata"))
    out->metadata = j.at("metadata").get<std::map<std::string, std::string>>();
  return std::move(*out);
}

std::string instance_digest(const instance& inst) {
  const std::string canon = instance_data_json(inst).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

run_report run_one(const instance& inst, const run_params& params) {
  run_report rep;
  rep.digest = instance_digest(inst);
  rep.n = inst.n();
  rep.d = inst.d();
  rep.params = params;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    mechanism_outcome out =
        run_mechanism(inst, params.delta, params.eps, params.pay_tol);
    rep.branch = out.branch == branch_kind::singleton ? "singleton" : "greedy";
    rep.allocated = out.allocated;
    rep.payments.assign(out.payments.data(), out.payments.data() + inst.n());
    rep.value_allocated = out.value_allocated;
    rep.payment_total = out.payments.sum();

    std::vector<bool> in_set(static_cast<size_t>(inst.n()), false);
    for (int i : out.allocated) in_set[static_cast<size_t>(i)] = true;

    double off_support = 0.0;
    double ir_margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < inst.n(); ++i) {
      if (in_set[static_cast<size_t>(i)])
        ir_margin = std::min(ir_margin, out.payments(i) - inst.cost(i));
      else
        off_support = std::max(off_support, std::abs(out.payments(i)));
    }
    if (out.allocated.empty()) ir_margin = 0.0;

    rep.checks.push_back({"payments_normalized", off_support == 0.0,
                          -off_support});
    rep.checks.push_back({"individual_rationality", ir_margin >= 0.0,
                          ir_margin});
    const double budget_slack = inst.budget() - rep.payment_total;
    rep.checks.push_back({"budget_feasible", budget_slack >= -1e-9,
                          budget_slack});

    if (params.with_oracle && inst.n() <= 22) {
      opt_result opt = brute_force_opt(inst);
      rep.oracle_ran = true;
      rep.opt_value = opt.value;
      rep.opt_set = opt.set;
      rep.baseline_value = value(inst, greedy_max_baseline(inst));
      const double bound =
          approximation_ratio() * rep.value_allocated + params.eps;
      rep.checks.push_back(
          {"approximation_bound", rep.opt_value <= bound,
           bound - rep.opt_value});
      const double e = std::exp(1.0);
      const double base_bound = 5.0 * e / (e - 1.0) * rep.baseline_value;
      rep.checks.push_back({"baseline_ratio", rep.opt_value <= base_bound + 1e-9,
                            base_bound - rep.opt_value});
    }
    rep.ok = true;
  } catch (const std::exception& e) {
    rep.ok = false;
    rep.error = e.what();
  }
  rep.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return rep;
}

namespace {

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("EDP_WORKERS")) {
    const int k = std::atoi(env);
    if (k > 0) return k;
  }
  return 1;
}

}  // namespace

batch_result run_batch(const batch_config& config) {
  batch_result result;
  const size_t total = config.instance_paths.size();
  result.reports.resize(total);
  const int workers =
      static_cast<int>(std::min<size_t>(
          static_cast<size_t>(resolve_workers(config.workers)),
          total == 0 ? 1 : total));

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const size_t k = next.fetch_add(1);
      if (k >= total) return;
      const std::string& path = config.instance_paths[k];
      try {
        instance inst = load_instance(path);
        result.reports[k] = run_one(inst, config.params);
      } catch (const std::exception& e) {
        result.reports[k].ok = false;
        result.reports[k].error = e.what();
      }
      result.reports[k].path = path;
    }
  };

  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  batch_summary& s = result.summary;
  s.total = static_cast<int>(total);
  for (const run_report& r : result.reports) {
    if (!r.ok) {
      ++s.failed;
      s.all_checks_pass = false;
      continue;
    }
    if (r.oracle_ran && r.value_allocated > 0.0)
      s.max_opt_over_allocated =
          std::max(s.max_opt_over_allocated, r.opt_value / r.value_allocated);
    s.max_payment_total = std::max(s.max_payment_total, r.payment_total);
    for (const property_check& c : r.checks) {
      if (!c.pass) s.all_checks_pass = false;
      if (c.name == "budget_feasible" && !c.pass) ++s.budget_violations;
    }
  }
  return result;
}

batch_result run_batch_file(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in)
    throw std::runtime_error("run_batch_file: cannot open " + config_path);
  ordered_json j;
  in >> j;
  batch_config cfg;
  cfg.instance_paths = j.at("instances").get<std::vector<std::string>>();
  if (j.contains("delta")) cfg.params.delta = j["delta"].get<double>();
  if (j.contains("eps")) cfg.params.eps = j["eps"].get<double>();
  if (j.contains("pay_tol")) cfg.params.pay_tol = j["pay_tol"].get<double>();
  if (j.contains("oracle"))
    cfg.params.with_oracle = j["oracle"].get<std::string>() != "none";
  if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
  return run_batch(cfg);
}

audit_report audit_truthfulness(const instance& inst, double delta, double eps,
                                int grid_points, double pay_tol) {
  if (grid_points < 2)
    throw std::invalid_argument("audit_truthfulness: grid_points must be >= 2");
  if (pay_tol <= 0.0) pay_tol = 1e-6 * inst.budget();

  audit_report rep;
  rep.digest = instance_digest(inst);
  rep.delta = delta;
  rep.eps = eps;
  rep.pay_tol = pay_tol;
  rep.grid_points = grid_points;

  mechanism_outcome truthful = run_mechanism(inst, delta, eps, pay_tol);
  std::vector<bool> in_set(static_cast<size_t>(inst.n()), false);
  for (int i : truthful.allocated) in_set[static_cast<size_t>(i)] = true;

  for (int i = 0; i < inst.n(); ++i) {
    agent_audit au;
    au.agent = i;
    au.truthful_utility =
        in_set[static_cast<size_t>(i)] ? truthful.payments(i) - inst.cost(i)
                                       : 0.0;
    for (int g = 0; g < grid_points; ++g) {
      audit_point pt;
      pt.reported = inst.budget() * static_cast<double>(g) /
                    static_cast<double>(grid_points - 1);
      pt.in_band = std::abs(pt.reported - inst.cost(i)) <= delta;
      const instance probed = inst.with_cost(i, pt.reported);
      mechanism_outcome out = allocate(probed, delta, eps);
      pt.allocated = std::find(out.allocated.begin(), out.allocated.end(),
                               i) != out.allocated.end();
      if (pt.allocated) {
        pt.payment = threshold_payment(probed, out, i, delta, eps, pay_tol);
        pt.utility = pt.payment - inst.cost(i);  // true cost is incurred
      }
      pt.gain = pt.utility - au.truthful_utility;
      if (!pt.in_band)
        au.max_gain_outside_band =
            std::max(au.max_gain_outside_band, pt.gain);
      au.grid.push_back(pt);
    }
    rep.max_gain = std::max(rep.max_gain, au.max_gain_outside_band);
    rep.agents.push_back(std::move(au));
  }
  return rep;
}

namespace {

ordered_json report_item_json(const run_report& r) {
  ordered_json j;
  j["path"] = r.path;
  j["digest"] = r.digest;
  j["n"] = r.n;
  j["d"] = r.d;
  j["ok"] = r.ok;
  if (!r.ok) {
    j["error"] = r.error;
    return j;
  }
  j["branch"] = r.branch;
  j["allocated"] = r.allocated;
  j["payments"] = r.payments;
  j["value_allocated"] = r.value_allocated;
  j["payment_total"] = r.payment_total;
  if (r.oracle_ran) {
    j["opt_value"] = r.opt_value;
    j["opt_set"] = r.opt_set;
    j["baseline_value"] = r.baseline_value;
  }
  ordered_json checks = ordered_json::array();
  for (const property_check& c : r.checks) {
    ordered_json cj;
    cj["name"] = c.name;
    cj["pass"] = c.pass;
    cj["slack"] = c.slack;
    checks.push_back(cj);
  }
  j["checks"] = checks;
  return j;
}

}  // namespace

std::string report_to_json(const batch_result& result) {
  ordered_json j;
  j["params"] = {
      {"delta",
       result.reports.empty() ? 0.0 : result.reports.front().params.delta},
      {"eps", result.reports.empty() ? 0.0 : result.reports.front().params.eps},
      {"pay_tol", result.reports.empty()
                      ? 0.0
                      : result.reports.front().params.pay_tol}};
  ordered_json items = ordered_json::array();
  for (const run_report& r : result.reports) items.push_back(report_item_json(r));
  j["items"] = items;
  j["summary"] = {{"total", result.summary.total},
                  {"failed", result.summary.failed},
                  {"max_opt_over_allocated", result.summary.max_opt_over_allocated},
                  {"max_payment_total", result.summary.max_payment_total},
                  {"budget_violations", result.summary.budget_violations},
                  {"all_checks_pass", result.summary.all_checks_pass}};
  ordered_json timings = ordered_json::array();
  for (const run_report& r : result.reports) timings.push_back(r.wall_ms);
  j["timings"] = {{"per_item_ms", timings}};
  return j.dump(2) + "\n";
}

std::string report_to_csv(const batch_result& result) {
  std::ostringstream os;
  os << "path,digest,n,d,ok,branch,value_allocated,payment_total,opt_value,"
        "checks_pass\n";
  for (const run_report& r : result.reports) {
    bool checks_pass = r.ok;
    for (const property_check& c : r.checks) checks_pass = checks_pass && c.pass;
    os << r.path << ',' << r.digest << ',' << r.n << ',' << r.d << ','
       << (r.ok ? 1 : 0) << ',' << r.branch << ',' << std::setprecision(17)
       << r.value_allocated << ',' << r.payment_total << ','
       << (r.oracle_ran ? r.opt_value : std::nan("")) << ','
       << (checks_pass ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string audit_to_json(const audit_report& report) {
  ordered_json j;
  j["digest"] = report.digest;
  j["delta"] = report.delta;
  j["eps"] = report.eps;
  j["pay_tol"] = report.pay_tol;
  j["grid_points"] = report.grid_points;
  j["max_gain"] = report.max_gain;
  ordered_json agents = ordered_json::array();
  for (const agent_audit& au : report.agents) {
    ordered_json aj;
    aj["agent"] = au.agent;
    aj["truthful_utility"] = au.truthful_utility;
    aj["max_gain_outside_band"] = au.max_gain_outside_band;
    ordered_json grid = ordered_json::array();
    for (const audit_point& pt : au.grid) {
      ordered_json pj;
      pj["reported"] = pt.reported;
      pj["in_band"] = pt.in_band;
      pj["allocated"] = pt.allocated;
      pj["payment"] = pt.payment;
      pj["utility"] = pt.utility;
      pj["gain"] = pt.gain;
      grid.push_back(pj);
    }
    aj["grid"] = grid;
    agents.push_back(aj);
  }
  j["agents"] = agents;
  return j.dump(2) + "\n";
}

std::string demo_report_to_text(const demo_report& report) {
  std::ostringstream os;
  os << "cited-figure regression\n";
  os << std::left;
  for (const demo_check& c : report.checks) {
    os << "  " << std::setw(20) << c.label << " computed "
       << std::setprecision(7) << std::fixed << c.computed << "  cited "
       << std::setprecision(3) << c.cited << "  tol " << std::setprecision(1)
       << std::scientific << c.tolerance << "  "
       << (c.pass ? "pass" : "FAIL") << '\n';
    os.unsetf(std::ios::floatfield);
  }
  auto set_to_string = [](const std::vector<int>& s) {
    std::ostringstream ss;
    ss << '{';
    for (size_t k = 0; k < s.size(); ++k)
      ss << (k ? "," : "") << s[k];
    ss << '}';
    return ss.str();
  };
  os << "baseline at true costs    -> "
     << set_to_string(report.baseline_at_true_costs) << '\n';
  os << "baseline at lowered cost  -> "
     << set_to_string(report.baseline_at_lowered_cost) << " (agent "
     << report.flip_agent << " reports " << report.lowered_cost << ")\n";
  os << "allocation flip for agent " << report.flip_agent << ": "
     << (report.flip_demonstrated ? "demonstrated" : "NOT demonstrated")
     << '\n';
  os << "overall: " << (report.all_checks_pass ? "pass" : "FAIL") << '\n';
  return os.str();
}

}  // namespace edp
