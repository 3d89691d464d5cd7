#include "edp/rounding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "edp/extensions.hpp"

namespace edp {

namespace {

// A coordinate counts as integral when it is within this distance of 0 or 1;
// snapping onto the bound afterwards keeps float drift from stalling
// termination.
constexpr double kIntegralTol = 1e-9;

bool is_fractional(double v) { return std::min(v, 1.0 - v) > kIntegralTol; }

void snap(Eigen::VectorXd& lambda) {
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) <= kIntegralTol) lambda(i) = 0.0;
    else if (lambda(i) >= 1.0 - kIntegralTol) lambda(i) = 1.0;
  }
}

}  // namespace

rounding_result pipage_round(
    const instance& inst, Eigen::VectorXd lambda,
    std::function<double(const Eigen::VectorXd&)> f_eval) {
  const int n = inst.n();
  if (lambda.size() != n)
    throw std::invalid_argument("pipage_round: lambda size mismatch");
  if ((lambda.array() < -1e-9).any() || (lambda.array() > 1.0 + 1e-9).any())
    throw std::invalid_argument("pipage_round: lambda outside [0,1]");
  if (lambda.dot(inst.costs()) > inst.budget() * (1.0 + 1e-9) + 1e-12)
    throw std::invalid_argument("pipage_round: over budget");

  if (!f_eval)
    f_eval = [&inst](const Eigen::VectorXd& l) { return F_exact(inst, l); };

  const Eigen::VectorXd& c = inst.costs();
  rounding_result out;
  snap(lambda);

  // Zero-cost coordinates go straight to 1: the budget inner product is
  // untouched and the expectation is monotone in every coordinate.
  for (int k = 0; k < n; ++k)
    if (c(k) == 0.0 && is_fractional(lambda(k))) {
      lambda(k) = 1.0;
      ++out.moves;
    }

  while (true) {
    // The two lowest-index fractional coordinates; all have positive cost.
    int i = -1, j = -1;
    for (int k = 0; k < n; ++k) {
      if (!is_fractional(lambda(k))) continue;
      if (i < 0) i = k;
      else { j = k; break; }
    }
    if (j < 0) break;  // 0 or 1 fractional coordinate left: done

    // Step eps along e_i - (c_i/c_j) e_j keeps c . lambda constant; the
    // range below is where both coordinates stay inside [0,1].  At either
    // endpoint at least one of the two hits a bound, so each move retires a
    // fractional coordinate and the loop terminates.
    const double lo = std::max(-lambda(i), (lambda(j) - 1.0) * c(j) / c(i));
    const double hi = std::min(1.0 - lambda(i), lambda(j) * c(j) / c(i));
    if (lo > hi) throw std::logic_error("pipage_round: empty step interval");

    auto apply = [&](double eps) {
      Eigen::VectorXd l = lambda;
      l(i) = lambda(i) + eps;
      l(j) = lambda(j) - eps * (c(i) / c(j));
      // Assign the binding coordinate its exact bound; the other keeps the
      // float value so the budget identity holds to roundoff.
      if (eps == lo) {
        if (lo == -lambda(i)) l(i) = 0.0;
        else l(j) = 1.0;
      } else {
        if (hi == 1.0 - lambda(i)) l(i) = 1.0;
        else l(j) = 0.0;
      }
      return l;
    };

    const Eigen::VectorXd at_lo = apply(lo);
    const Eigen::VectorXd at_hi = apply(hi);
    const double f_lo = f_eval(at_lo);
    const double f_hi = f_eval(at_hi);
    if (f_lo > f_hi) lambda = at_lo;
    else if (f_hi > f_lo) lambda = at_hi;
    else {
      // Tie: prefer the endpoint that makes coordinate i integral; if both
      // or neither do, take the lower endpoint.
      const bool lo_int = !is_fractional(at_lo(i));
      const bool hi_int = !is_fractional(at_hi(i));
      lambda = (hi_int && !lo_int) ? at_hi : at_lo;
    }
    ++out.moves;
    snap(lambda);
  }

  out.indicator = lambda;
  for (int k = 0; k < n; ++k)
    if (lambda(k) >= 1.0 - kIntegralTol) out.members.push_back(k);
  return out;
}

}  // namespace edp
