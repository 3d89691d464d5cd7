#pragma once

// The budget-feasible procurement mechanism.  Allocation runs in two
// branches: either the single most valuable agent wins, or a greedy pass
// admits agents by marginal-gain-per-cost subject to a B/2 proportional-
// share stopping rule.  The branch is chosen by comparing a solver bound on
// what everyone except the best singleton could deliver against C times the
// best singleton's value, with C a fixed constant just under 12.  Payments
// are threshold payments: the highest cost an agent could have reported and
// still been allocated, found by bisection against re-runs of the
// allocation rule.

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "edp/instance.hpp"
#include "edp/solver.hpp"

namespace edp {

enum class branch_kind { singleton, greedy };

struct greedy_step {
  int index = -1;
  double gain = 0.0;             // marginal gain when considered
  double cost = 0.0;             // reported cost at that time
  double admission_bound = 0.0;  // (B/2) * gain / V(S u {i})
  double set_value_after = 0.0;  // V(S u {i}), whether or not admitted
  bool accepted = false;
};
using greedy_trace = std::vector<greedy_step>;

struct greedy_result {
  std::vector<int> members;  // admitted, in admission order
  greedy_trace trace;        // admitted steps plus the final rejection
  double value = 0.0;        // V(members)
};

// Greedy selection: repeatedly take the remaining agent with the best
// marginal-gain/cost ratio (zero-cost agents with positive gain first,
// ties to the lowest index), admit while
//   c_i <= (B/2) * (V(S u {i}) - V(S)) / V(S u {i}),
// and stop at the first violation.  Agents with (numerically) zero gain are
// never candidates; the loop stops when none remain.
greedy_result greedy_allocate(const instance& inst);

// The branch-test constant C = (8e - 1 + sqrt(64e^2 - 24e + 9)) / (2(e-1)),
// about 11.977, and the end-to-end approximation factor 1 + C.
double branch_constant();
double approximation_ratio();

struct mechanism_outcome {
  branch_kind branch = branch_kind::singleton;
  std::vector<int> allocated;
  Eigen::VectorXd payments;  // length n; zero for unallocated agents

  int best_singleton = -1;            // i*
  double best_singleton_value = 0.0;  // V({i*})
  double opt_minus_istar = 0.0;       // solver estimate excluding i*
  double c_vstar = 0.0;               // C * V({i*})
  double value_allocated = 0.0;       // V(allocated)

  // Diagnostics.
  greedy_trace trace;  // empty on the singleton branch
  solver_report solve; // the branch-test solve (excludes i*)
};

// Allocation only (payments left at zero): compute i*, bound the rest of
// the market with solve_monotone excluding i*, then branch.
mechanism_outcome allocate(const instance& inst, double delta, double eps,
                           const solver_config& config = {});

// Predicate used by payment bisection: "is agent i allocated when the
// instance's cost vector carries their probed report?"  Overridable so
// tests can pin the allocation rule a payment is measured against.
using allocation_probe = std::function<bool(const instance&, int)>;

// Threshold payment for allocated agent i.  Singleton branch: exactly B.
// Greedy branch: bisection over reported costs in [c_i, cap_i] with
// cap_i = B * gain_i(S_i) / V(S_G); returns the lower bracket endpoint once
// the bracket is narrower than pay_tol (the cap itself when the agent
// survives even at the cap).  pay_tol <= 0 selects the default 1e-6 * B.
double threshold_payment(const instance& inst, int i, branch_kind branch,
                         double delta, double eps, double pay_tol,
                         const allocation_probe& probe = {});

// Same, reusing an already computed truthful outcome for the cap.
double threshold_payment(const instance& inst, const mechanism_outcome& truthful,
                         int i, double delta, double eps, double pay_tol,
                         const allocation_probe& probe = {});

// Allocation plus payments for every allocated agent.
mechanism_outcome run_mechanism(const instance& inst, double delta, double eps,
                                double pay_tol = -1.0,
                                const solver_config& config = {});

}  // namespace edp
