#pragma once

// The set value function V(S) = log det(I_d + sum_{i in S} x_i x_i^T) and
// incremental machinery around it.  V is monotone and submodular; adding row
// i to a set with information matrix A raises the value by
// log(1 + x_i^T A^{-1} x_i), which subset_state computes in O(d^2) via a
// maintained Cholesky factor.

#include <Eigen/Dense>

#include <utility>
#include <vector>

#include "edp/instance.hpp"

namespace edp {

// Incrementally maintained Cholesky factorization of A(S) = I + X_S^T X_S,
// together with the running value V(S).  Extension is O(d^2) per row.
class subset_state {
 public:
  explicit subset_state(const instance& inst);
  subset_state(const instance& inst, const std::vector<int>& members);

  // log(1 + x_i^T A(S)^{-1} x_i): the increase in V from adding row i.
  // Rejects rows already in the set.
  double marginal_gain(int i) const;

  // Add row i to the set; rejects rows already present.
  void extend(int i);

  double value() const { return value_; }
  int dimension() const { return d_; }
  const std::vector<int>& members() const { return members_; }
  bool contains(int i) const;

  // x^T A(S)^{-1} x for an arbitrary vector (used by tests and the oracles).
  double quad_form(const Eigen::VectorXd& x) const;

 private:
  const instance* inst_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  std::vector<int> members_;
  std::vector<bool> member_mask_;
  double value_ = 0.0;
  int d_ = 0;
};

// V(S) from scratch.  Indices are 0-based; duplicates are rejected.
double value(const instance& inst, const std::vector<int>& members);

// Convenience wrapper over subset_state::marginal_gain.
double marginal_gain(const instance& inst, const subset_state& state, int i);

// (1/2) * [log det(R + X_S^T X_S) - log det R] for an explicit SPD prior R;
// uses the instance's prior if present, identity otherwise.  Note the 1/2
// factor, which the un-generalized V above deliberately drops.
double value_generalized(const instance& inst, const std::vector<int>& members);
double value_generalized(const instance& inst, const std::vector<int>& members,
                         const Eigen::MatrixXd& prior);

// argmax_i V({i}) with ties broken toward the lowest index; returns
// (index, value).  Singleton values reduce to log(1 + |x_i|^2).
std::pair<int, double> max_singleton(const instance& inst);

}  // namespace edp
