#include "edp/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "edp/values.hpp"

namespace edp {

namespace {

// Gains at or below this are treated as zero: the agent's row lies in the
// span already covered, up to roundoff.
constexpr double kGainFloor = 1e-14;

}  // namespace

double branch_constant() {
  const double e = std::exp(1.0);
  return (8.0 * e - 1.0 + std::sqrt(64.0 * e * e - 24.0 * e + 9.0)) /
         (2.0 * (e - 1.0));
}

double approximation_ratio() { return 1.0 + branch_constant(); }

greedy_result greedy_allocate(const instance& inst) {
  const int n = inst.n();
  const double half_budget = inst.budget() / 2.0;

  greedy_result out;
  subset_state state(inst);
  std::vector<bool> taken(n, false);

  while (true) {
    // Best remaining agent by gain/cost; zero-cost agents with positive
    // gain rank above everything, lowest index first in every tie.
    int best = -1;
    double best_gain = 0.0;
    bool best_free = false;
    double best_ratio = 0.0;
    for (int i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double gain = state.marginal_gain(i);
      if (gain <= kGainFloor) continue;
      const bool free = inst.cost(i) == 0.0;
      const double ratio = free ? 0.0 : gain / inst.cost(i);
      const bool better =
          best < 0 || (free && !best_free) ||
          (free == best_free && !free && ratio > best_ratio);
      if (better) {
        best = i;
        best_gain = gain;
        best_free = free;
        best_ratio = ratio;
      }
    }
    if (best < 0) break;  // nothing with positive gain remains

    const double value_with = state.value() + best_gain;
    greedy_step step;
    step.index = best;
    step.gain = best_gain;
    step.cost = inst.cost(best);
    step.admission_bound = half_budget * best_gain / value_with;
    step.set_value_after = value_with;
    step.accepted = step.cost <= step.admission_bound;
    out.trace.push_back(step);
    if (!step.accepted) break;  // first violation ends the pass

    taken[best] = true;
    out.members.push_back(best);
    state.extend(best);
  }

  out.value = state.value();
  return out;
}

mechanism_outcome allocate(const instance& inst, double delta, double eps,
                           const solver_config& config) {
  // The mechanism's guarantees assume every cost is affordable on its own;
  // oracles accept costs above B, but allocation does not.
  if ((inst.costs().array() > inst.budget()).any())
    throw std::invalid_argument("allocate: cost exceeds budget");

  mechanism_outcome out;
  out.payments = Eigen::VectorXd::Zero(inst.n());

  const auto [istar, vstar] = max_singleton(inst);
  out.best_singleton = istar;
  out.best_singleton_value = vstar;
  out.c_vstar = branch_constant() * vstar;

  out.solve = solve_monotone(inst, delta, eps, {istar}, config);
  out.opt_minus_istar = out.solve.l_hat;

  if (out.opt_minus_istar < out.c_vstar) {
    out.branch = branch_kind::singleton;
    out.allocated = {istar};
    out.value_allocated = vstar;
  } else {
    out.branch = branch_kind::greedy;
    greedy_result g = greedy_allocate(inst);
    out.allocated = g.members;
    out.value_allocated = g.value;
    out.trace = std::move(g.trace);
  }
  return out;
}

namespace {

double payment_cap(const instance& inst, const mechanism_outcome& truthful,
                   int i) {
  if (truthful.value_allocated <= 0.0)
    throw std::logic_error("threshold_payment: allocated set has no value");
  for (const greedy_step& step : truthful.trace)
    if (step.index == i && step.accepted)
      return inst.budget() * step.gain / truthful.value_allocated;
  throw std::invalid_argument("threshold_payment: agent not allocated");
}

double bisect_threshold(const instance& inst, int i, double lo, double hi,
                        double pay_tol, const allocation_probe& probe) {
  // Precondition: probe says yes at lo.  If the agent survives even at the
  // cap, the cap is the payment (it is the budget-feasible ceiling).
  if (probe(inst.with_cost(i, hi), i)) return hi;
  while (hi - lo > pay_tol) {
    const double mid = lo + 0.5 * (hi - lo);
    if (probe(inst.with_cost(i, mid), i)) lo = mid;
    else hi = mid;
  }
  return lo;  // under-approximates the true threshold by at most pay_tol
}

}  // namespace

double threshold_payment(const instance& inst,
                         const mechanism_outcome& truthful, int i,
                         double delta, double eps, double pay_tol,
                         const allocation_probe& probe) {
  if (i < 0 || i >= inst.n())
    throw std::invalid_argument("threshold_payment: index out of range");
  if (std::find(truthful.allocated.begin(), truthful.allocated.end(), i) ==
      truthful.allocated.end())
    throw std::invalid_argument("threshold_payment: agent not allocated");
  if (pay_tol <= 0.0) pay_tol = 1e-6 * inst.budget();

  if (truthful.branch == branch_kind::singleton) return inst.budget();

  allocation_probe effective = probe;
  if (!effective)
    effective = [delta, eps](const instance& probed, int agent) {
      mechanism_outcome o = allocate(probed, delta, eps);
      return std::find(o.allocated.begin(), o.allocated.end(), agent) !=
             o.allocated.end();
    };

  const double cap = payment_cap(inst, truthful, i);
  // cap >= c_i in exact arithmetic (the admission rule implies it); the max
  // guards the bracket against roundoff at the boundary.
  const double lo = inst.cost(i);
  const double hi = std::max(cap, lo);
  return bisect_threshold(inst, i, lo, hi, pay_tol, effective);
}

double threshold_payment(const instance& inst, int i, branch_kind branch,
                         double delta, double eps, double pay_tol,
                         const allocation_probe& probe) {
  if (branch == branch_kind::singleton) {
    if (i < 0 || i >= inst.n())
      throw std::invalid_argument("threshold_payment: index out of range");
    return inst.budget();
  }
  // Reconstruct the truthful greedy outcome for the cap; the branch is
  // dictated by the caller.
  mechanism_outcome truthful;
  truthful.branch = branch_kind::greedy;
  greedy_result g = greedy_allocate(inst);
  truthful.allocated = g.members;
  truthful.value_allocated = g.value;
  truthful.trace = std::move(g.trace);
  truthful.payments = Eigen::VectorXd::Zero(inst.n());
  return threshold_payment(inst, truthful, i, delta, eps, pay_tol, probe);
}

mechanism_outcome run_mechanism(const instance& inst, double delta, double eps,
                                double pay_tol, const solver_config& config) {
  mechanism_outcome out = allocate(inst, delta, eps, config);
  if (pay_tol <= 0.0) pay_tol = 1e-6 * inst.budget();
  for (int i : out.allocated)
    out.payments(i) = threshold_payment(inst, out, i, delta, eps, pay_tol);
  return out;
}

}  // namespace edp
