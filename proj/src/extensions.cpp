#include "edp/extensions.hpp"

#include <cmath>
#include <stdexcept>

#include "edp/values.hpp"

namespace edp {

bool fractional_point::box_feasible(double tol) const {
  return (lambda.array() >= alpha - tol).all() &&
         (lambda.array() <= 1.0 + tol).all();
}

bool fractional_point::budget_feasible(const instance& inst, double tol) const {
  if (lambda.size() != inst.n()) return false;
  return lambda.dot(inst.costs()) <= inst.budget() + tol;
}

namespace detail {

relaxation_eval eval_relaxation(const Eigen::MatrixXd& rows,
                                const Eigen::VectorXd& lambda,
                                bool want_cross) {
  const Eigen::Index n = rows.rows();
  const Eigen::Index d = rows.cols();
  if (lambda.size() != n)
    throw std::invalid_argument("eval_relaxation: lambda size mismatch");
  if ((lambda.array() < 0.0).any())
    throw std::invalid_argument("eval_relaxation: negative weight");

  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(d, d);
  // A = I + rows^T diag(lambda) rows, built without a temporary n x d copy.
  A.selfadjointView<Eigen::Lower>().rankUpdate(
      (rows.array().colwise() * lambda.array().sqrt()).matrix().transpose(),
      1.0);
  A = A.selfadjointView<Eigen::Lower>();

  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("eval_relaxation: information matrix not SPD");

  relaxation_eval out;
  const auto& Lf = llt.matrixLLT();
  for (Eigen::Index k = 0; k < d; ++k) out.value += std::log(Lf(k, k));
  out.value *= 2.0;

  // Y = L^{-1} rows^T has columns y_i with y_i^T y_j = x_i^T A^{-1} x_j.
  Eigen::MatrixXd Y = llt.matrixL().solve(rows.transpose());
  out.grad = Y.colwise().squaredNorm().transpose();
  if (want_cross) out.cross = Y.transpose() * Y;
  return out;
}

relaxation_eval eval_relaxation(const instance& inst,
                                const Eigen::VectorXd& lambda,
                                bool want_cross) {
  return eval_relaxation(inst.features(), lambda, want_cross);
}

}  // namespace detail

namespace {

void check_box(const instance& inst, const Eigen::VectorXd& lambda,
               const char* who) {
  if (lambda.size() != inst.n())
    throw std::invalid_argument(std::string(who) + ": lambda size mismatch");
  if ((lambda.array() < -1e-12).any() || (lambda.array() > 1.0 + 1e-12).any())
    throw std::invalid_argument(std::string(who) + ": lambda outside [0,1]");
}

}  // namespace

double L_value(const instance& inst, const Eigen::VectorXd& lambda) {
  check_box(inst, lambda, "L_value");
  return detail::eval_relaxation(inst, lambda.cwiseMax(0.0), false).value;
}

Eigen::VectorXd L_gradient(const instance& inst,
                           const Eigen::VectorXd& lambda) {
  check_box(inst, lambda, "L_gradient");
  return detail::eval_relaxation(inst, lambda.cwiseMax(0.0), false).grad;
}

Eigen::MatrixXd L_hessian(const instance& inst, const Eigen::VectorXd& lambda) {
  check_box(inst, lambda, "L_hessian");
  auto ev = detail::eval_relaxation(inst, lambda.cwiseMax(0.0), true);
  return -ev.cross.cwiseProduct(ev.cross);
}

double F_exact(const instance& inst, const Eigen::VectorXd& lambda) {
  const int n = inst.n();
  if (lambda.size() != n)
    throw std::invalid_argument("F_exact: lambda size mismatch");
  if ((lambda.array() < -1e-12).any() || (lambda.array() > 1.0 + 1e-12).any())
    throw std::invalid_argument("F_exact: lambda outside [0,1]");
  if (n > 20) throw std::invalid_argument("F_exact: n too large to enumerate");

  // Depth-first over inclusion decisions, sharing the subset_state prefix so
  // each of the 2^n leaves costs O(d^2) amortized rather than O(|S| d^2).
  double total = 0.0;
  struct frame {
    subset_state state;
    double prob;
    int next;
  };
  std::vector<frame> stack;
  stack.push_back({subset_state(inst), 1.0, 0});
  while (!stack.empty()) {
    frame f = std::move(stack.back());
    stack.pop_back();
    if (f.prob == 0.0) continue;
    if (f.next == n) {
      total += f.prob * f.state.value();
      continue;
    }
    const double p = std::min(1.0, std::max(0.0, lambda(f.next)));
    frame inc{f.state, f.prob * p, f.next + 1};
    if (inc.prob > 0.0) inc.state.extend(f.next);
    f.prob *= (1.0 - p);
    f.next += 1;
    stack.push_back(std::move(f));
    if (inc.prob > 0.0) stack.push_back(std::move(inc));
  }
  return total;
}

namespace {

// splitmix64: counter-based, so sample k of seed s is reproducible without
// carrying generator state across calls.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double uniform01(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace

mc_estimate F_mc(const instance& inst, const Eigen::VectorXd& lambda,
                 std::int64_t samples, std::uint64_t seed) {
  const int n = inst.n();
  if (lambda.size() != n)
    throw std::invalid_argument("F_mc: lambda size mismatch");
  if (samples <= 0) throw std::invalid_argument("F_mc: samples must be > 0");

  // Welford's running moments: immune to the cancellation that makes the
  // naive sum-of-squares report a spurious nonzero spread when every sample
  // coincides (e.g. at an integral lambda).
  double mean = 0.0, m2 = 0.0;
  for (std::int64_t k = 0; k < samples; ++k) {
    subset_state st(inst);
    for (int i = 0; i < n; ++i) {
      // One counter per (sample, coordinate) pair keyed by the seed.
      const std::uint64_t ctr =
          static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(n) +
          static_cast<std::uint64_t>(i);
      const double u = uniform01(splitmix64(seed ^ splitmix64(ctr)));
      if (u < lambda(i)) st.extend(i);
    }
    const double v = st.value();
    const double delta = v - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (v - mean);
  }
  mc_estimate out;
  out.samples = samples;
  out.value = mean;
  const double var =
      samples > 1 ? std::max(0.0, m2 / static_cast<double>(samples - 1)) : 0.0;
  out.std_error = std::sqrt(var / static_cast<double>(samples));
  return out;
}

}  // namespace edp
