#pragma once

// Batch plumbing around the library: deterministic instance generation,
// versioned JSON instance files, mechanism runs with per-run property
// checks, a misreport audit, and report serialization (JSON plus a flat CSV
// table).  Reports are reproducible byte-for-byte given the same inputs;
// wall-clock timings live in their own section so comparisons can drop them.

#include <cstdint>
#include <string>
#include <vector>

#include "edp/instance.hpp"
#include "edp/mechanism.hpp"
#include "edp/oracles.hpp"

namespace edp {

// Counter-based deterministic generator (same seed, same draws, on every
// platform we compile for).
class rng {
 public:
  explicit rng(std::uint64_t seed) : seed_(seed) {}
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double gaussian();                     // standard normal
  std::uint64_t next_bits();

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

enum class cost_model { uniform, proportional_to_norm, adversarial_singleton };

std::string cost_model_name(cost_model m);

// Random instance with budget 1, row norms-squared in [0.25, 1], and costs
// drawn per the model (documented in metadata along with the seed).  The
// adversarial model lays rows on the standard basis with all costs just
// above B/2, the structure where singling out one agent is forced.
instance generate_instance(int n, int d, cost_model model, std::uint64_t seed);

// Versioned JSON on disk; load(save(x)) reproduces x bit-exactly, metadata
// included.  Digest is a 64-bit FNV-1a over the canonical data fields
// (metadata excluded), hex-encoded.
void save_instance(const instance& inst, const std::string& path);
instance load_instance(const std::string& path);
std::string instance_digest(const instance& inst);

struct run_params {
  double delta = 0.05;
  double eps = 0.01;
  double pay_tol = -1.0;  // <= 0: default 1e-6 * budget
  bool with_oracle = true;
};

struct property_check {
  std::string name;
  bool pass = false;
  double slack = 0.0;  // margin by which the property held (negative: failed)
};

struct run_report {
  std::string path;  // source file, empty for in-memory instances
  std::string digest;
  int n = 0;
  int d = 0;
  run_params params;

  std::string branch;
  std::vector<int> allocated;
  std::vector<double> payments;
  double value_allocated = 0.0;
  double payment_total = 0.0;

  bool oracle_ran = false;
  double opt_value = 0.0;
  std::vector<int> opt_set;
  double baseline_value = 0.0;

  std::vector<property_check> checks;
  bool ok = false;     // false when this item errored; see `error`
  std::string error;
  double wall_ms = 0.0;
};

run_report run_one(const instance& inst, const run_params& params);

struct batch_config {
  std::vector<std::string> instance_paths;
  run_params params;
  int workers = 0;  // 0: $EDP_WORKERS, else 1
};

struct batch_summary {
  int total = 0;
  int failed = 0;
  double max_opt_over_allocated = 0.0;  // over items with an oracle value
  double max_payment_total = 0.0;
  int budget_violations = 0;
  bool all_checks_pass = true;
};

struct batch_result {
  std::vector<run_report> reports;  // in input order
  batch_summary summary;
};

batch_result run_batch(const batch_config& config);
batch_result run_batch_file(const std::string& config_path);

// Misreport audit: utility of agent i reporting c' (with everyone else
// truthful) minus her truthful utility, over an even grid on [0, B].  Points
// within delta of the true cost are flagged and excluded from the reported
// maximum; the headline number is the best gain any agent can find by lying
// by more than delta.
struct audit_point {
  double reported = 0.0;
  bool in_band = false;
  bool allocated = false;
  double payment = 0.0;
  double utility = 0.0;
  double gain = 0.0;
};

struct agent_audit {
  int agent = -1;
  double truthful_utility = 0.0;
  double max_gain_outside_band = 0.0;
  std::vector<audit_point> grid;
};

struct audit_report {
  std::string digest;
  double delta = 0.0;
  double eps = 0.0;
  double pay_tol = 0.0;
  int grid_points = 0;
  std::vector<agent_audit> agents;
  double max_gain = 0.0;  // max over agents, outside the band
};

audit_report audit_truthfulness(const instance& inst, double delta, double eps,
                                int grid_points, double pay_tol = -1.0);

// Serialization.  JSON bodies are deterministic; timings sit under a
// dedicated "timings" key so byte comparisons can exclude them.
std::string report_to_json(const batch_result& result);
std::string report_to_csv(const batch_result& result);
std::string audit_to_json(const audit_report& report);
std::string demo_report_to_text(const demo_report& report);

}  // namespace edp
