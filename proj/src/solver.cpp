#include "edp/solver.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <set>
#include <stdexcept>

namespace edp {

namespace {

constexpr double kEpsPrimeFloor = 1e-12;

struct reduced_problem {
  Eigen::MatrixXd rows;     // kept feature rows, one per coordinate
  Eigen::VectorXd costs;
  double budget = 0.0;
  double alpha = 0.0;
  std::vector<int> to_full;  // reduced index -> original index
};

reduced_problem reduce(const instance& inst, double alpha,
                       const std::vector<int>& exclude) {
  std::set<int> drop;
  for (int i : exclude) {
    if (i < 0 || i >= inst.n())
      throw std::invalid_argument("solve_barrier: exclude index out of range");
    drop.insert(i);
  }
  reduced_problem r;
  r.budget = inst.budget();
  r.alpha = alpha;
  const int keep = inst.n() - static_cast<int>(drop.size());
  r.rows.resize(keep, inst.d());
  r.costs.resize(keep);
  r.to_full.reserve(keep);
  int k = 0;
  for (int i = 0; i < inst.n(); ++i) {
    if (drop.count(i)) continue;
    r.rows.row(k) = inst.features().row(i);
    r.costs(k) = inst.cost(i);
    r.to_full.push_back(i);
    ++k;
  }
  return r;
}

// Barrier objective psi_t = -t L(lambda) - sum log(lambda_i - alpha)
//                           - sum log(1 - lambda_i) - log(B - c.lambda).
// Returns +inf outside the open domain so the line search can reject steps.
double psi(const reduced_problem& p, const Eigen::VectorXd& lambda, double t) {
  const double inf = std::numeric_limits<double>::infinity();
  const double budget_slack = p.budget - p.costs.dot(lambda);
  if (budget_slack <= 0.0) return inf;
  double barrier = -std::log(budget_slack);
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const double lo = lambda(i) - p.alpha;
    const double hi = 1.0 - lambda(i);
    if (lo <= 0.0 || hi <= 0.0) return inf;
    barrier -= std::log(lo) + std::log(hi);
  }
  const double l = detail::eval_relaxation(p.rows, lambda, false).value;
  return -t * l + barrier;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

// Rows of W are vec(x_i x_i^T); then the relaxation's Hessian satisfies
// -(G o G) = -W (A^{-1} kron A^{-1}) W^T, which is what makes the
// d^2-dimensional Newton solve below possible.
Eigen::MatrixXd build_outer_rows(const Eigen::MatrixXd& rows) {
  const Eigen::Index n = rows.rows(), d = rows.cols();
  Eigen::MatrixXd w(n, d * d);
  Eigen::MatrixXd outer(d, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    outer.noalias() = rows.row(i).transpose() * rows.row(i);
    w.row(i) = Eigen::Map<Eigen::VectorXd>(outer.data(), d * d).transpose();
  }
  return w;
}

struct newton_step {
  Eigen::VectorXd direction;
  Eigen::VectorXd grad_psi;
  double decrement_sq = 0.0;
  double psi_value = 0.0;
};

// One Newton direction for psi_t at lambda.  `outer_rows` is the W matrix
// above (only used by the Schur route; pass an empty matrix otherwise).
newton_step direction(const reduced_problem& p, const Eigen::VectorXd& lambda,
                      double t, bool use_schur,
                      const Eigen::MatrixXd& outer_rows) {
  const Eigen::Index n = lambda.size();
  const Eigen::Index d = p.rows.cols();

  Eigen::VectorXd lo_slack = lambda.array() - p.alpha;
  Eigen::VectorXd hi_slack = 1.0 - lambda.array();
  const double budget_slack = p.budget - p.costs.dot(lambda);

  newton_step out;

  // Box + budget contributions to gradient and Hessian diagonal.
  Eigen::VectorXd dbox =
      lo_slack.array().square().inverse() + hi_slack.array().square().inverse();
  const double sigma = 1.0 / (budget_slack * budget_slack);

  if (!use_schur) {
    auto ev = detail::eval_relaxation(p.rows, lambda, true);
    out.psi_value = -t * ev.value - lo_slack.array().log().sum() -
                    hi_slack.array().log().sum() - std::log(budget_slack);
    out.grad_psi = -t * ev.grad - lo_slack.cwiseInverse() +
                   hi_slack.cwiseInverse() + p.costs / budget_slack;
    Eigen::MatrixXd h = t * ev.cross.cwiseProduct(ev.cross);
    h.diagonal() += dbox;
    h.noalias() += sigma * (p.costs * p.costs.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("solve_barrier: Newton system not SPD");
    out.direction = llt.solve(-out.grad_psi);
  } else {
    // H = E + t W K W^T with E = diag(dbox) + sigma c c^T and
    // K = A^{-1} kron A^{-1}.  Invert by Woodbury: the big-matrix work
    // happens in d^2 dimensions regardless of n.
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(d, d);
    a.selfadjointView<Eigen::Lower>().rankUpdate(
        (p.rows.array().colwise() * lambda.array().sqrt())
            .matrix()
            .transpose(),
        1.0);
    a = a.selfadjointView<Eigen::Lower>();
    Eigen::LLT<Eigen::MatrixXd> allt(a);
    if (allt.info() != Eigen::Success)
      throw std::runtime_error("solve_barrier: information matrix not SPD");
    double lval = 0.0;
    for (Eigen::Index k = 0; k < d; ++k)
      lval += std::log(allt.matrixLLT()(k, k));
    lval *= 2.0;
    Eigen::MatrixXd y = allt.matrixL().solve(p.rows.transpose());
    Eigen::VectorXd grad_l = y.colwise().squaredNorm().transpose();

    out.psi_value = -t * lval - lo_slack.array().log().sum() -
                    hi_slack.array().log().sum() - std::log(budget_slack);
    out.grad_psi = -t * grad_l - lo_slack.cwiseInverse() +
                   hi_slack.cwiseInverse() + p.costs / budget_slack;

    // E^{-1} z by Sherman-Morrison on the rank-1 budget term.
    Eigen::VectorXd dinv = dbox.cwiseInverse();
    Eigen::VectorXd dinv_c = dinv.cwiseProduct(p.costs);
    const double sm_denom = 1.0 + sigma * p.costs.dot(dinv_c);
    auto apply_einv = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
      return dinv.cwiseProduct(z) -
             dinv_c * (sigma * p.costs.dot(dinv.cwiseProduct(z)) / sm_denom);
    };

    Eigen::MatrixXd einv_w =
        dinv.asDiagonal() * outer_rows -
        dinv_c * ((sigma / sm_denom) *
                  (p.costs.transpose() * (dinv.asDiagonal() * outer_rows)));
    Eigen::MatrixXd schur = kron(a, a) / t;
    schur.noalias() += outer_rows.transpose() * einv_w;
    Eigen::LLT<Eigen::MatrixXd> sllt(schur);
    if (sllt.info() != Eigen::Success)
      throw std::runtime_error("solve_barrier: Schur system not SPD");

    Eigen::VectorXd r = -out.grad_psi;
    Eigen::VectorXd u = apply_einv(r);
    Eigen::VectorXd z = sllt.solve(outer_rows.transpose() * u);
    out.direction = u - apply_einv(outer_rows * z);

    // Exact Hessian-vector product, H v = E v + t W (A^{-1} (.) A^{-1}) W^T v.
    auto apply_h = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      Eigen::VectorXd wtv = outer_rows.transpose() * v;
      Eigen::MatrixXd dm = Eigen::Map<const Eigen::MatrixXd>(wtv.data(), d, d);
      Eigen::MatrixXd kd = allt.solve(allt.solve(dm).transpose()).transpose();
      Eigen::VectorXd kvec = Eigen::Map<Eigen::VectorXd>(kd.data(), d * d);
      return dbox.cwiseProduct(v) + (sigma * p.costs.dot(v)) * p.costs +
             t * (outer_rows * kvec);
    };

    // Once t is huge the (A x A)/t block drops below the floating-point
    // floor of W^T E^{-1} W inside the Schur system, and the Woodbury step
    // silently loses all curvature along that block's range.  Refine
    // against the true operator; if the step still is not self-consistent
    // (g.d = -d.Hd holds for an exact solve), assemble the n-by-n system
    // for this iteration from the Cholesky factor already at hand.
    for (int pass = 0; pass < 2; ++pass) {
      Eigen::VectorXd resid = r - apply_h(out.direction);
      Eigen::VectorXd du = apply_einv(resid);
      Eigen::VectorXd dz = sllt.solve(outer_rows.transpose() * du);
      out.direction += du - apply_einv(outer_rows * dz);
    }
    const double hd = out.direction.dot(apply_h(out.direction));
    const double gd = -out.grad_psi.dot(out.direction);
    if (!(hd > 0.0) || std::abs(gd - hd) > 0.01 * std::max(hd, gd)) {
      Eigen::MatrixXd cross = y.transpose() * y;  // G = X A^{-1} X^T
      Eigen::MatrixXd h = t * cross.cwiseProduct(cross);
      h.diagonal() += dbox;
      h.noalias() += sigma * (p.costs * p.costs.transpose());
      Eigen::LLT<Eigen::MatrixXd> hllt(h);
      if (hllt.info() != Eigen::Success)
        throw std::runtime_error("solve_barrier: Newton system not SPD");
      out.direction = hllt.solve(r);
    }
    (void)n;
  }

  out.decrement_sq = std::max(0.0, -out.grad_psi.dot(out.direction));
  return out;
}

bool interior(const reduced_problem& p, const Eigen::VectorXd& lambda) {
  return (lambda.array() > p.alpha).all() && (lambda.array() < 1.0).all() &&
         p.costs.dot(lambda) < p.budget;
}

// Damped Newton to the central point for barrier weight t; returns the
// number of Newton iterations spent.  The trial step is the classical
// damped one, 1/(1 + decrement) until the quadratic phase; backtracking
// then guards domain membership and sufficient decrease.  The decrease test
// carries an absolute floor of a few ulps of psi: once t is large, psi is
// dominated by t*L and genuine per-step progress (~decrement^2) sits far
// below what the value can resolve, while the step itself is still sound.
//
// Large t also quantizes the iterate itself: near the center, 1 - lambda_i
// shrinks like 1/t, and once the Newton step falls under one ulp of
// lambda_i the iterate cannot move at all, freezing the decrement at the
// coordinate-grid floor (which grows with t).  A frozen or non-improving
// iterate is accepted as centered when its decrement is inside the
// quadratic-phase region (<= 0.25): there the standard inexact-centering
// bound keeps the duality gap within a factor 1.07 of m/t, absorbed by the
// factor-2 headroom in the outer stopping rule.  A stall outside that
// region is a genuine failure and throws.
int center(const reduced_problem& p, Eigen::VectorXd& lambda, double t,
           bool use_schur, const Eigen::MatrixXd& outer_rows,
           const solver_config& cfg) {
  constexpr double kQuadraticPhase = 0.25;
  double best_dec = std::numeric_limits<double>::infinity();
  int no_improvement = 0;
  for (int it = 0; it < cfg.max_newton_iters; ++it) {
    newton_step step = direction(p, lambda, t, use_schur, outer_rows);
    if (step.decrement_sq <= 2.0 * cfg.newton_tol) return it;

    const double dec = std::sqrt(step.decrement_sq);
    double s = dec > kQuadraticPhase ? 1.0 / (1.0 + dec) : 1.0;
    while (!interior(p, lambda + s * step.direction)) {
      s *= cfg.backtrack;
      if (s < 1e-20)
        throw std::runtime_error(
            "solve_barrier: line search cannot re-enter the domain");
    }
    const double slope = -step.decrement_sq;  // grad_psi . direction
    const double noise = 16.0 * std::numeric_limits<double>::epsilon() *
                         std::max(std::abs(step.psi_value), 1.0);
    while (psi(p, lambda + s * step.direction, t) >
               step.psi_value + cfg.armijo * s * slope + noise &&
           s > 1e-20) {
      s *= cfg.backtrack;
    }

    const Eigen::VectorXd next = lambda + s * step.direction;
    const bool frozen = (next.array() == lambda.array()).all();
    if (frozen) {
      // The step is under one ulp in every coordinate; no further progress
      // is representable.
      if (dec <= kQuadraticPhase) return it;
      throw std::runtime_error("solve_barrier: Newton did not converge");
    }
    if (dec < best_dec * 0.99) {
      best_dec = dec;
      no_improvement = 0;
    } else if (dec <= kQuadraticPhase && ++no_improvement >= 5) {
      // Quadratic phase should contract every step; five flat iterations
      // mean the decrement sits on the coordinate-grid floor (the iterate
      // dances between neighboring representable points).
      return it;
    }
    lambda = next;
  }
  // One last check: the loop may have exited with the tolerance satisfied
  // exactly at the iteration cap.
  newton_step final_step = direction(p, lambda, t, use_schur, outer_rows);
  const double final_dec = std::sqrt(final_step.decrement_sq);
  if (final_step.decrement_sq <= 2.0 * cfg.newton_tol ||
      final_dec <= kQuadraticPhase)
    return cfg.max_newton_iters;
  throw std::runtime_error("solve_barrier: Newton did not converge");
}

Eigen::VectorXd initial_point(const reduced_problem& p, double margin) {
  const Eigen::Index n = p.rows.rows();
  // Interior in the box: between alpha and 1 whatever alpha is, and equal to
  // max(1.5 alpha, 1/n) in the usual alpha << 1/n regime.
  const double base = std::max(1.5 * p.alpha, 1.0 / static_cast<double>(n));
  const double capped = std::min(base, p.alpha + 0.95 * (1.0 - p.alpha));
  Eigen::VectorXd lambda = Eigen::VectorXd::Constant(n, capped);

  const double target = p.budget * (1.0 - margin);
  const double spent = p.costs.dot(lambda);
  if (spent > target) {
    // Blend toward the all-alpha corner, which preserves box interiority.
    const double at_alpha = p.alpha * p.costs.sum();
    if (at_alpha >= target)
      throw std::runtime_error(
          "solve_barrier: no strictly interior point (alpha too large for "
          "the budget)");
    const double s = (target - at_alpha) / (spent - at_alpha);
    lambda = Eigen::VectorXd::Constant(n, p.alpha) +
             s * (lambda.array() - p.alpha).matrix();
  }
  return lambda;
}

void validate_config(const solver_config& cfg) {
  if (!(cfg.mu > 1.0))
    throw std::invalid_argument("solver_config: mu must exceed 1");
  if (!(cfg.t0 > 0.0))
    throw std::invalid_argument("solver_config: t0 must be positive");
  if (!(cfg.newton_tol > 0.0))
    throw std::invalid_argument("solver_config: newton_tol must be positive");
  if (cfg.max_newton_iters <= 0 || cfg.max_outer_iters <= 0)
    throw std::invalid_argument("solver_config: iteration caps must be positive");
  if (!(cfg.armijo > 0.0 && cfg.armijo < 0.5))
    throw std::invalid_argument("solver_config: armijo must be in (0, 0.5)");
  if (!(cfg.backtrack > 0.0 && cfg.backtrack < 1.0))
    throw std::invalid_argument("solver_config: backtrack must be in (0, 1)");
}

}  // namespace

solver_report solve_barrier(const instance& inst, double alpha,
                            double eps_prime, const std::vector<int>& exclude,
                            const solver_config& config) {
  validate_config(config);
  if (!std::isfinite(alpha) || alpha < 0.0)
    throw std::invalid_argument("solve_barrier: alpha must be >= 0");
  // eps_prime == 0 is allowed through to the clamp below: the wrapper's
  // power-of-two schedule underflows to zero for very large n.
  if (!std::isfinite(eps_prime) || eps_prime < 0.0)
    throw std::invalid_argument("solve_barrier: eps_prime must be >= 0");

  reduced_problem p = reduce(inst, alpha, exclude);
  const int n_red = static_cast<int>(p.rows.rows());

  solver_report rep;
  rep.alpha_used = alpha;
  rep.lambda_hat.lambda = Eigen::VectorXd::Zero(inst.n());
  rep.lambda_hat.alpha = alpha;

  if (n_red == 0) {
    // Empty problem: L over no coordinates is identically log det I = 0.
    rep.eps_prime_used = eps_prime;
    return rep;
  }

  if (alpha >= 1.0 / static_cast<double>(n_red))
    throw std::invalid_argument("solve_barrier: alpha must be below 1/n");

  rep.eps_prime_used = eps_prime;
  if (eps_prime < kEpsPrimeFloor) {
    std::cerr << "solve_barrier: requested accuracy " << eps_prime
              << " clamped to " << kEpsPrimeFloor
              << "; the monotonicity margin is heuristic at this scale\n";
    rep.eps_prime_used = kEpsPrimeFloor;
    rep.eps_prime_clamped = true;
  }

  const bool use_schur =
      config.route == solver_config::route_kind::schur ||
      (config.route == solver_config::route_kind::automatic &&
       n_red > config.dense_route_factor * inst.d());
  Eigen::MatrixXd outer_rows;
  if (use_schur) outer_rows = build_outer_rows(p.rows);

  Eigen::VectorXd lambda = initial_point(p, config.budget_margin);
  const double m = 2.0 * n_red + 1.0;  // inequality constraints
  double t = config.t0;

  while (true) {
    if (rep.outer_iterations >= config.max_outer_iters)
      throw std::runtime_error("solve_barrier: outer iteration cap reached");
    rep.newton_iterations +=
        center(p, lambda, t, use_schur, outer_rows, config);
    rep.outer_iterations += 1;
    // Stop at half the requested gap: the slack absorbs the inexactness of
    // finite-precision centering, so the certificate stays honest.
    if (m / t <= rep.eps_prime_used / 2.0) break;
    t *= config.mu;
  }

  rep.gap_certificate = m / t;
  for (int k = 0; k < n_red; ++k)
    rep.lambda_hat.lambda(p.to_full[static_cast<size_t>(k)]) = lambda(k);
  rep.l_hat = detail::eval_relaxation(p.rows, lambda, false).value;
  return rep;
}

solver_report solve_monotone(const instance& inst, double delta, double eps,
                             const std::vector<int>& exclude,
                             const solver_config& config) {
  if (!(delta > 0.0 && delta <= 1.0))
    throw std::invalid_argument("solve_monotone: delta must be in (0, 1]");
  if (!(eps > 0.0 && eps <= 1.0))
    throw std::invalid_argument("solve_monotone: eps must be in (0, 1]");

  std::set<int> drop;
  for (int i : exclude) {
    if (i < 0 || i >= inst.n())
      throw std::invalid_argument("solve_monotone: exclude index out of range");
    drop.insert(i);
  }
  const int n_red = inst.n() - static_cast<int>(drop.size());

  if (n_red == 0) {
    solver_report rep;
    rep.lambda_hat.lambda = Eigen::VectorXd::Zero(inst.n());
    return rep;
  }

  const double big_b = inst.budget();
  const double nr = static_cast<double>(n_red);
  const double alpha = eps / (delta / big_b + nr * nr);
  // eps' = alpha * delta * b / (2^{n+1} B); ldexp keeps the power-of-two
  // scaling exact until it underflows (the clamp in solve_barrier catches
  // that case).
  const double eps_prime =
      std::ldexp(alpha * delta * inst.norm_floor() / big_b, -(n_red + 1));
  return solve_barrier(inst, alpha, eps_prime, exclude, config);
}

}  // namespace edp
