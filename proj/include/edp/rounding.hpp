#pragma once

// Pipage rounding: walk a fractional lambda to an integral indicator vector
// along budget-preserving two-coordinate directions, never decreasing the
// expectation F.  Because F restricted to the direction e_i - (c_i/c_j) e_j
// is convex, one of the two interval endpoints is at least as good as the
// interior, and each move makes at least one coordinate integral.

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "edp/instance.hpp"

namespace edp {

struct rounding_result {
  std::vector<int> members;       // indices rounded to 1
  Eigen::VectorXd indicator;      // the final 0/1 vector
  int moves = 0;                  // number of pipage steps taken
};

// Rounds lambda (budget-feasible, in [0,1]^n) to an integral set with cost
// within the budget and F(result) >= F(lambda) up to evaluation noise.
// `f_eval` defaults to exact enumeration (so n must stay small unless a
// Monte Carlo evaluator is supplied).
rounding_result pipage_round(
    const instance& inst, Eigen::VectorXd lambda,
    std::function<double(const Eigen::VectorXd&)> f_eval = {});

}  // namespace edp
