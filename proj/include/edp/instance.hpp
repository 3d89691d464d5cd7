#pragma once

// A procurement instance for budgeted experimental design: n agents, each
// holding one feature row x_i in R^d with a private cost c_i, plus a shared
// budget B.  Rows are expected to satisfy 0 < b <= |x_i|^2 <= 1 and costs
// 0 <= c_i <= B; the constructor enforces the parts of that contract that
// the algorithms rely on and rejects non-finite data outright.

#include <Eigen/Dense>

#include <map>
#include <string>

namespace edp {

class instance {
 public:
  // Rows of `features` are the agents' vectors; `costs` must have one entry
  // per row.  Throws std::invalid_argument on shape mismatch, non-finite
  // entries, zero rows, negative costs, or budget <= 0.
  instance(Eigen::MatrixXd features, Eigen::VectorXd costs, double budget);

  // Same, with an explicit SPD prior R used by value_generalized (the
  // default prior is the identity).
  instance(Eigen::MatrixXd features, Eigen::VectorXd costs, double budget,
           Eigen::MatrixXd prior);

  int n() const { return static_cast<int>(features_.rows()); }
  int d() const { return static_cast<int>(features_.cols()); }

  const Eigen::MatrixXd& features() const { return features_; }
  Eigen::VectorXd row(int i) const;

  const Eigen::VectorXd& costs() const { return costs_; }
  double cost(int i) const;
  double budget() const { return budget_; }

  // min_i |x_i|^2 over the whole instance; used as the norm floor b in the
  // solver's accuracy schedule.
  double norm_floor() const { return norm_floor_; }

  bool has_prior() const { return has_prior_; }
  const Eigen::MatrixXd& prior() const;

  // Copy of this instance with agent i's cost replaced by c (used by the
  // payment search, which probes the allocation rule at hypothetical bids).
  instance with_cost(int i, double c) const;

  // Free-form annotations carried through file round-trips (generator name,
  // seed, ...).  Not part of the mathematical data.
  std::map<std::string, std::string> metadata;

 private:
  void validate() const;

  Eigen::MatrixXd features_;
  Eigen::VectorXd costs_;
  double budget_;
  Eigen::MatrixXd prior_;
  bool has_prior_ = false;
  double norm_floor_ = 0.0;
};

}  // namespace edp
