#include "edp/instance.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace edp {

instance::instance(Eigen::MatrixXd features, Eigen::VectorXd costs,
                   double budget)
    : features_(std::move(features)), costs_(std::move(costs)),
      budget_(budget) {
  validate();
}

instance::instance(Eigen::MatrixXd features, Eigen::VectorXd costs,
                   double budget, Eigen::MatrixXd prior)
    : features_(std::move(features)), costs_(std::move(costs)),
      budget_(budget), prior_(std::move(prior)), has_prior_(true) {
  validate();
}

void instance::validate() const {
  if (features_.rows() == 0 || features_.cols() == 0)
    throw std::invalid_argument("instance: empty feature matrix");
  if (costs_.size() != features_.rows())
    throw std::invalid_argument("instance: costs/features size mismatch");
  if (!features_.allFinite())
    throw std::invalid_argument("instance: non-finite feature entry");
  if (!costs_.allFinite())
    throw std::invalid_argument("instance: non-finite cost");
  if (!std::isfinite(budget_) || budget_ <= 0.0)
    throw std::invalid_argument("instance: budget must be positive");
  if ((costs_.array() < 0.0).any())
    throw std::invalid_argument("instance: negative cost");
  if (has_prior_) {
    if (prior_.rows() != features_.cols() || prior_.cols() != features_.cols())
      throw std::invalid_argument("instance: prior shape mismatch");
    if (!prior_.allFinite())
      throw std::invalid_argument("instance: non-finite prior entry");
  }
  double floor = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < features_.rows(); ++i) {
    const double s = features_.row(i).squaredNorm();
    if (s <= 0.0)
      throw std::invalid_argument("instance: zero feature row");
    if (s > 1.0 + 1e-9)
      throw std::invalid_argument("instance: feature row norm exceeds 1");
    floor = std::min(floor, s);
  }
  // validate() is called from constructors only; caching here keeps the
  // accessor const without a mutable member.
  const_cast<instance*>(this)->norm_floor_ = floor;
}

Eigen::VectorXd instance::row(int i) const {
  if (i < 0 || i >= n()) throw std::invalid_argument("instance::row: index");
  return features_.row(i).transpose();
}

double instance::cost(int i) const {
  if (i < 0 || i >= n()) throw std::invalid_argument("instance::cost: index");
  return costs_(i);
}

const Eigen::MatrixXd& instance::prior() const {
  if (!has_prior_)
    throw std::logic_error("instance::prior: instance has no explicit prior");
  return prior_;
}

instance instance::with_cost(int i, double c) const {
  if (i < 0 || i >= n())
    throw std::invalid_argument("instance::with_cost: index");
  if (!std::isfinite(c) || c < 0.0)
    throw std::invalid_argument("instance::with_cost: bad cost");
  instance out = *this;
  out.costs_(i) = c;
  return out;
}

}  // namespace edp
