#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "edp/extensions.hpp"
#include "edp/harness.hpp"
#include "edp/instance.hpp"
#include "edp/values.hpp"

using edp::instance;

namespace {

instance single_unit() {
  Eigen::MatrixXd x(1, 2);
  x << 1.0, 0.0;
  return instance(x, Eigen::VectorXd::Ones(1), 1.0);
}

Eigen::VectorXd random_box_point(const instance& inst, std::uint64_t seed,
                                 double lo = 0.05, double hi = 0.95) {
  edp::rng r(seed);
  Eigen::VectorXd lambda(inst.n());
  for (int i = 0; i < inst.n(); ++i) lambda(i) = r.uniform(lo, hi);
  return lambda;
}

}  // namespace

TEST_CASE("L at zero is zero and at indicators equals V") {
  instance inst = edp::generate_instance(8, 3, edp::cost_model::uniform, 3);
  CHECK(edp::L_value(inst, Eigen::VectorXd::Zero(8)) == 0.0);

  edp::rng r(99);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<int> members;
    Eigen::VectorXd ind = Eigen::VectorXd::Zero(8);
    for (int i = 0; i < 8; ++i)
      if (r.uniform() < 0.5) {
        members.push_back(i);
        ind(i) = 1.0;
      }
    CHECK(edp::L_value(inst, ind) ==
          doctest::Approx(edp::value(inst, members)).epsilon(1e-12));
  }
}

TEST_CASE("L on a single unit vector") {
  instance inst = single_unit();
  Eigen::VectorXd half(1);
  half << 0.5;
  CHECK(edp::L_value(inst, half) ==
        doctest::Approx(std::log(1.5)).epsilon(1e-14));
}

TEST_CASE("gradient at zero recovers squared norms") {
  instance inst = edp::generate_instance(6, 3, edp::cost_model::uniform, 7);
  Eigen::VectorXd g = edp::L_gradient(inst, Eigen::VectorXd::Zero(6));
  for (int i = 0; i < 6; ++i)
    CHECK(g(i) == doctest::Approx(inst.row(i).squaredNorm()).epsilon(1e-12));
}

TEST_CASE("gradient components respect the derivative bounds") {
  for (std::uint64_t seed : {10u, 11u, 12u}) {
    instance inst =
        edp::generate_instance(8, 3, edp::cost_model::uniform, seed);
    Eigen::VectorXd lambda = random_box_point(inst, seed * 131, 0.0, 1.0);
    Eigen::VectorXd g = edp::L_gradient(inst, lambda);
    const double floor = inst.norm_floor() / std::pow(2.0, inst.n());
    for (int i = 0; i < inst.n(); ++i) {
      CHECK(g(i) >= floor - 1e-12);
      CHECK(g(i) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("gradient matches central finite differences") {
  instance inst = edp::generate_instance(5, 3, edp::cost_model::uniform, 13);
  Eigen::VectorXd lambda = random_box_point(inst, 77);
  Eigen::VectorXd g = edp::L_gradient(inst, lambda);
  const double h = 1e-4;
  for (int i = 0; i < inst.n(); ++i) {
    Eigen::VectorXd up = lambda, dn = lambda;
    up(i) += h;
    dn(i) -= h;
    const double fd =
        (edp::L_value(inst, up) - edp::L_value(inst, dn)) / (2.0 * h);
    CHECK(g(i) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("hessian of a single unit vector at zero is -1") {
  instance inst = single_unit();
  Eigen::MatrixXd h = edp::L_hessian(inst, Eigen::VectorXd::Zero(1));
  CHECK(h(0, 0) == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("hessian is negative semidefinite with non-positive diagonal") {
  instance inst = edp::generate_instance(7, 3, edp::cost_model::uniform, 19);
  Eigen::VectorXd lambda = random_box_point(inst, 19 * 131);
  Eigen::MatrixXd h = edp::L_hessian(inst, lambda);
  CHECK((h - h.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  for (int i = 0; i < inst.n(); ++i) CHECK(h(i, i) <= 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  CHECK(eig.eigenvalues().maxCoeff() <= 1e-10);
}

TEST_CASE("hessian matches finite differences of the gradient") {
  instance inst = edp::generate_instance(5, 3, edp::cost_model::uniform, 29);
  Eigen::VectorXd lambda = random_box_point(inst, 29 * 131);
  Eigen::MatrixXd h = edp::L_hessian(inst, lambda);
  const double step = 1e-4;
  Eigen::MatrixXd fd(inst.n(), inst.n());
  for (int j = 0; j < inst.n(); ++j) {
    Eigen::VectorXd up = lambda, dn = lambda;
    up(j) += step;
    dn(j) -= step;
    fd.col(j) =
        (edp::L_gradient(inst, up) - edp::L_gradient(inst, dn)) / (2.0 * step);
  }
  CHECK((h - fd).norm() / h.norm() <= 1e-4);
}

TEST_CASE("relaxation input validation") {
  instance inst = single_unit();
  Eigen::VectorXd low(1), high(1), wrong(2);
  low << -0.1;
  high << 1.1;
  wrong << 0.5, 0.5;
  CHECK_THROWS_AS(edp::L_value(inst, low), std::invalid_argument);
  CHECK_THROWS_AS(edp::L_value(inst, high), std::invalid_argument);
  CHECK_THROWS_AS(edp::L_value(inst, wrong), std::invalid_argument);
  CHECK_THROWS_AS(edp::L_gradient(inst, high), std::invalid_argument);
  CHECK_THROWS_AS(edp::L_hessian(inst, low), std::invalid_argument);
  CHECK_THROWS_AS(edp::F_exact(inst, high), std::invalid_argument);
}

TEST_CASE("F at indicators equals V and interpolates for one item") {
  instance inst = single_unit();
  Eigen::VectorXd half(1);
  half << 0.5;
  CHECK(edp::F_exact(inst, half) ==
        doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-14));

  instance two = edp::generate_instance(6, 3, edp::cost_model::uniform, 37);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(6);
  CHECK(edp::F_exact(two, ones) ==
        doctest::Approx(edp::value(two, {0, 1, 2, 3, 4, 5})).epsilon(1e-12));
}

TEST_CASE("F of two independent unit vectors at one half each") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Identity(2, 2);
  instance inst(x, Eigen::VectorXd::Ones(2), 1.0);
  Eigen::VectorXd lambda = Eigen::VectorXd::Constant(2, 0.5);
  // (1/4)(0 + log2 + log2 + log4) = log 2
  CHECK(edp::F_exact(inst, lambda) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("F enumeration refuses large n") {
  instance inst =
      edp::generate_instance(21, 3, edp::cost_model::uniform, 41);
  CHECK_THROWS_AS(edp::F_exact(inst, Eigen::VectorXd::Constant(21, 0.5)),
                  std::invalid_argument);
}

TEST_CASE("sandwich between F and L") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    instance inst =
        edp::generate_instance(8, 3, edp::cost_model::uniform, seed);
    Eigen::VectorXd lambda = random_box_point(inst, seed * 977, 0.0, 1.0);
    const double f = edp::F_exact(inst, lambda);
    const double l = edp::L_value(inst, lambda);
    CHECK(0.5 * l <= f + 1e-9);
    CHECK(f <= l + 1e-9);
  }
}

TEST_CASE("L is concave along random segments") {
  instance inst = edp::generate_instance(7, 3, edp::cost_model::uniform, 53);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Eigen::VectorXd a = random_box_point(inst, seed * 3 + 1, 0.0, 1.0);
    Eigen::VectorXd b = random_box_point(inst, seed * 3 + 2, 0.0, 1.0);
    const double mid = edp::L_value(inst, 0.5 * (a + b));
    const double chord = 0.5 * (edp::L_value(inst, a) + edp::L_value(inst, b));
    CHECK(mid >= chord - 1e-9);
  }
}

TEST_CASE("Monte Carlo F is deterministic and consistent") {
  instance inst = edp::generate_instance(8, 3, edp::cost_model::uniform, 61);

  // Integral point: every sample drawn is the same set, so the estimate is
  // exact with zero spread.
  Eigen::VectorXd ind = Eigen::VectorXd::Zero(8);
  ind(1) = ind(4) = 1.0;
  edp::mc_estimate at_ind = edp::F_mc(inst, ind, 500, 9);
  CHECK(at_ind.value == doctest::Approx(edp::value(inst, {1, 4})).epsilon(1e-12));
  CHECK(at_ind.std_error == 0.0);
  CHECK(at_ind.samples == 500);

  Eigen::VectorXd lambda = random_box_point(inst, 61 * 977, 0.0, 1.0);
  edp::mc_estimate a = edp::F_mc(inst, lambda, 4000, 1234);
  edp::mc_estimate b = edp::F_mc(inst, lambda, 4000, 1234);
  CHECK(a.value == b.value);  // bit-identical for identical inputs
  CHECK(a.std_error == b.std_error);

  const double exact = edp::F_exact(inst, lambda);
  CHECK(std::abs(a.value - exact) <= 4.0 * a.std_error + 1e-9);

  edp::mc_estimate c = edp::F_mc(inst, lambda, 4000, 4321);
  CHECK(a.value != c.value);  // different stream
}

TEST_CASE("fractional point feasibility helpers") {
  Eigen::MatrixXd x(4, 2);
  x << 1.0, 0.0,
       0.0, 1.0,
       0.6, 0.0,
       0.0, 0.6;
  Eigen::VectorXd c(4);
  c << 0.4, 0.4, 0.4, 0.4;
  instance inst(x, c, 1.0);

  edp::fractional_point p;
  p.lambda = Eigen::VectorXd::Constant(4, 0.1);
  CHECK(p.box_feasible());
  CHECK(p.budget_feasible(inst));

  p.lambda(2) = 1.2;
  CHECK_FALSE(p.box_feasible());

  p.lambda = Eigen::VectorXd::Ones(4);  // spends 1.6 against a budget of 1
  CHECK(p.box_feasible());
  CHECK_FALSE(p.budget_feasible(inst));
}
