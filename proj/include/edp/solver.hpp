#pragma once

// Interior-point maximization of the concave relaxation L over the truncated
// budget polytope
//
//   D = { lambda : alpha <= lambda_i <= 1,  c . lambda <= B },
//
// plus a wrapper that picks (alpha, eps') so the reported optimum is both
// eps-accurate and strictly decreasing when any single cost is raised by at
// least delta.  The decreasing property is what downstream payment logic
// relies on, so the wrapper's accuracy schedule errs on the conservative
// side.

#include <Eigen/Dense>

#include <vector>

#include "edp/extensions.hpp"
#include "edp/instance.hpp"

namespace edp {

struct solver_config {
  // Defaults used when a caller drives the solver through the high-level
  // mechanism entry points without picking its own schedule.
  double epsilon = 0.01;  // value accuracy target, in (0,1]
  double delta = 0.05;    // cost-monotonicity gap, in (0,1]

  // Barrier schedule.
  double t0 = 1.0;   // initial barrier weight
  double mu = 20.0;  // barrier weight multiplier, > 1

  // Newton loop.
  double newton_tol = 1e-10;  // stop centering at decrement^2 <= 2*tol
  int max_newton_iters = 200; // per centering
  int max_outer_iters = 80;
  double armijo = 0.25;
  double backtrack = 0.5;

  // Linear-algebra route for the Newton system.  `automatic` uses the dense
  // n x n system for small n and a d^2-space Schur-complement solve
  // otherwise; both give the same step to high accuracy.
  enum class route_kind { automatic, dense, schur };
  route_kind route = route_kind::automatic;
  int dense_route_factor = 4;  // dense when n <= factor * d

  double budget_margin = 1e-6;  // initial point keeps c.lambda <= B(1-margin)
};

struct solver_report {
  double l_hat = 0.0;            // L evaluated at lambda_hat (lower estimate)
  fractional_point lambda_hat;   // full-length; zeros at excluded coordinates
  double alpha_used = 0.0;
  double eps_prime_used = 0.0;   // effective accuracy after any clamping
  double gap_certificate = 0.0;  // m / t_final; bounds L* - l_hat from above
  int newton_iterations = 0;
  int outer_iterations = 0;
  bool eps_prime_clamped = false;
};

// Maximize L over D to additive accuracy eps_prime, certified by the barrier
// duality gap.  `exclude` removes coordinates from the problem entirely
// (they come back as zeros in lambda_hat).  On success,
//   l_hat <= L* <= l_hat + gap_certificate   and   gap_certificate <= eps'.
// Throws std::invalid_argument on precondition violations and
// std::runtime_error when the interior is empty or Newton fails to converge.
// eps_prime below 1e-12 is clamped (warning on stderr, flag in the report).
solver_report solve_barrier(const instance& inst, double alpha,
                            double eps_prime,
                            const std::vector<int>& exclude = {},
                            const solver_config& config = {});

// Accuracy schedule on top of solve_barrier:
//   alpha = eps / (delta/B + n^2),   eps' = alpha * delta * b / (2^{n+1} B)
// with n the number of non-excluded coordinates and b the instance's norm
// floor.  The returned value is within eps of the untruncated optimum L*_c
// and strictly decreases when any cost is raised by delta or more (up to the
// eps' clamp floor).  With everything excluded the problem is empty and the
// report is all zeros.
solver_report solve_monotone(const instance& inst, double delta, double eps,
                             const std::vector<int>& exclude = {},
                             const solver_config& config = {});

}  // namespace edp
