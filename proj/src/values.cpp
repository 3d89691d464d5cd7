#include "edp/values.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace edp {

subset_state::subset_state(const instance& inst)
    : inst_(&inst), member_mask_(inst.n(), false), d_(inst.d()) {
  llt_.compute(Eigen::MatrixXd::Identity(d_, d_));
}

subset_state::subset_state(const instance& inst, const std::vector<int>& members)
    : subset_state(inst) {
  for (int i : members) extend(i);
}

bool subset_state::contains(int i) const {
  return i >= 0 && i < inst_->n() && member_mask_[static_cast<size_t>(i)];
}

double subset_state::quad_form(const Eigen::VectorXd& x) const {
  // x^T A^{-1} x = |L^{-1} x|^2 with A = L L^T.
  Eigen::VectorXd y = llt_.matrixL().solve(x);
  return y.squaredNorm();
}

double subset_state::marginal_gain(int i) const {
  if (i < 0 || i >= inst_->n())
    throw std::invalid_argument("subset_state::marginal_gain: index");
  if (member_mask_[static_cast<size_t>(i)])
    throw std::invalid_argument("subset_state::marginal_gain: already a member");
  return std::log1p(quad_form(inst_->row(i)));
}

void subset_state::extend(int i) {
  if (i < 0 || i >= inst_->n())
    throw std::invalid_argument("subset_state::extend: index");
  if (member_mask_[static_cast<size_t>(i)])
    throw std::invalid_argument("subset_state::extend: already a member");
  const Eigen::VectorXd x = inst_->row(i);
  value_ += std::log1p(quad_form(x));
  llt_.rankUpdate(x, 1.0);
  member_mask_[static_cast<size_t>(i)] = true;
  members_.push_back(i);
}

double value(const instance& inst, const std::vector<int>& members) {
  std::set<int> seen;
  for (int i : members) {
    if (i < 0 || i >= inst.n())
      throw std::invalid_argument("value: index out of range");
    if (!seen.insert(i).second)
      throw std::invalid_argument("value: duplicate index");
  }
  subset_state s(inst, members);
  return s.value();
}

double marginal_gain(const instance& inst, const subset_state& state, int i) {
  (void)inst;
  return state.marginal_gain(i);
}

namespace {

double half_logdet_ratio(const instance& inst, const std::vector<int>& members,
                         const Eigen::MatrixXd& prior) {
  const int d = inst.d();
  if (prior.rows() != d || prior.cols() != d)
    throw std::invalid_argument("value_generalized: prior shape mismatch");
  Eigen::LLT<Eigen::MatrixXd> base(prior);
  if (base.info() != Eigen::Success)
    throw std::invalid_argument("value_generalized: prior not SPD");
  Eigen::MatrixXd acc = prior;
  std::set<int> seen;
  for (int i : members) {
    if (i < 0 || i >= inst.n())
      throw std::invalid_argument("value_generalized: index out of range");
    if (!seen.insert(i).second)
      throw std::invalid_argument("value_generalized: duplicate index");
    const Eigen::VectorXd x = inst.row(i);
    acc.noalias() += x * x.transpose();
  }
  Eigen::LLT<Eigen::MatrixXd> full(acc);
  if (full.info() != Eigen::Success)
    throw std::runtime_error("value_generalized: accumulated matrix not SPD");
  auto logdet = [](const Eigen::LLT<Eigen::MatrixXd>& llt) {
    double s = 0.0;
    const auto& L = llt.matrixLLT();
    for (Eigen::Index k = 0; k < L.rows(); ++k) s += std::log(L(k, k));
    return 2.0 * s;
  };
  return 0.5 * (logdet(full) - logdet(base));
}

}  // namespace

double value_generalized(const instance& inst,
                         const std::vector<int>& members) {
  if (inst.has_prior()) return half_logdet_ratio(inst, members, inst.prior());
  return half_logdet_ratio(inst, members,
                           Eigen::MatrixXd::Identity(inst.d(), inst.d()));
}

double value_generalized(const instance& inst, const std::vector<int>& members,
                         const Eigen::MatrixXd& prior) {
  return half_logdet_ratio(inst, members, prior);
}

std::pair<int, double> max_singleton(const instance& inst) {
  int best = 0;
  double best_value = -1.0;
  for (int i = 0; i < inst.n(); ++i) {
    const double v = std::log1p(inst.row(i).squaredNorm());
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  return {best, best_value};
}

}  // namespace edp
