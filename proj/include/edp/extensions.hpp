#pragma once

// Two continuous extensions of the set value V to lambda in [0,1]^n:
//
//   F(lambda) = E[V(S)] where S includes each i independently w.p. lambda_i
//   L(lambda) = log det(I + sum_i lambda_i x_i x_i^T)
//
// L is concave, and the two are sandwiched as (1/2) L <= F <= L, which is
// what lets a maximizer of L stand in for a maximizer of F at a bounded
// loss.  F is computed exactly by enumeration for small n and by Monte
// Carlo otherwise.

#include <Eigen/Dense>

#include <cstdint>

#include "edp/instance.hpp"

namespace edp {

// A relaxed point together with the box floor alpha used by the barrier
// solver (coordinates live in [alpha, 1] there; alpha = 0 means the plain
// box [0,1]^n).
struct fractional_point {
  Eigen::VectorXd lambda;
  double alpha = 0.0;

  bool box_feasible(double tol = 1e-12) const;
  bool budget_feasible(const instance& inst, double tol = 1e-9) const;
};

// L(lambda) = log det(I + X^T diag(lambda) X).
double L_value(const instance& inst, const Eigen::VectorXd& lambda);

// Gradient of L: component i equals x_i^T A(lambda)^{-1} x_i, which lies in
// (0, 1] on the box.
Eigen::VectorXd L_gradient(const instance& inst, const Eigen::VectorXd& lambda);

// Hessian of L: entry (i,j) equals -(x_i^T A(lambda)^{-1} x_j)^2.  Negative
// semidefinite everywhere on the box.
Eigen::MatrixXd L_hessian(const instance& inst, const Eigen::VectorXd& lambda);

// Exact F by enumerating all 2^n subsets; refuses n > 20.
double F_exact(const instance& inst, const Eigen::VectorXd& lambda);

struct mc_estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
};

// Monte Carlo estimate of F with a deterministic counter-based stream: the
// same (lambda, samples, seed) triple always yields the same estimate.
mc_estimate F_mc(const instance& inst, const Eigen::VectorXd& lambda,
                 std::int64_t samples, std::uint64_t seed);

namespace detail {

// One factorization, all derivative ingredients: value L(lambda), gradient,
// and the symmetric cross matrix G with G(i,j) = x_i^T A^{-1} x_j (so the
// Hessian is -G.cwiseProduct(G)).  The raw overload skips the instance
// wrapper so the solver can work on a reduced row set.
struct relaxation_eval {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd cross;
};

relaxation_eval eval_relaxation(const instance& inst,
                                const Eigen::VectorXd& lambda,
                                bool want_cross);
relaxation_eval eval_relaxation(const Eigen::MatrixXd& rows,
                                const Eigen::VectorXd& lambda,
                                bool want_cross);

}  // namespace detail

}  // namespace edp
