#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "edp/harness.hpp"
#include "edp/instance.hpp"
#include "edp/mechanism.hpp"
#include "edp/oracles.hpp"
#include "edp/values.hpp"

using edp::instance;

namespace {

// d orthogonal unit rows, one per coordinate, equal costs.
instance orthogonal_market(int n, double cost, double budget) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Identity(n, n);
  return instance(x, Eigen::VectorXd::Constant(n, cost), budget);
}

bool contains(const std::vector<int>& v, int i) {
  return std::find(v.begin(), v.end(), i) != v.end();
}

}  // namespace

TEST_CASE("constants: branch test and end-to-end ratio") {
  CHECK(edp::branch_constant() == doctest::Approx(11.977).epsilon(1e-4));
  CHECK(edp::approximation_ratio() ==
        doctest::Approx(1.0 + edp::branch_constant()).epsilon(1e-15));
  CHECK(edp::approximation_ratio() <= 12.98);
}

TEST_CASE("single agent gets the whole budget") {
  Eigen::MatrixXd x(1, 2);
  x << 0.8, 0.0;
  instance inst(x, Eigen::VectorXd::Constant(1, 0.3), 1.0);
  edp::mechanism_outcome out = edp::run_mechanism(inst, 0.05, 0.01);
  CHECK(out.branch == edp::branch_kind::singleton);
  REQUIRE(out.allocated == std::vector<int>{0});
  CHECK(out.payments(0) == 1.0);
  CHECK(out.value_allocated == doctest::Approx(std::log(1.64)));
}

TEST_CASE("four-agent fixture goes to the best singleton") {
  instance inst = edp::non_monotonicity_fixture();
  edp::mechanism_outcome out = edp::run_mechanism(inst, 0.05, 0.01);
  CHECK(out.branch == edp::branch_kind::singleton);
  CHECK(out.best_singleton == 0);
  CHECK(out.best_singleton_value == doctest::Approx(std::log(2.0)));
  REQUIRE(out.allocated == std::vector<int>{0});
  CHECK(out.payments(0) == inst.budget());
  CHECK(out.payments(1) == 0.0);
  CHECK(out.payments(2) == 0.0);
  CHECK(out.payments(3) == 0.0);
  // The rest of the market is worth far less than C times the best agent.
  CHECK(out.c_vstar > out.opt_minus_istar);
  CHECK(out.trace.empty());
}

TEST_CASE("14 orthogonal agents trigger the greedy branch") {
  instance inst = orthogonal_market(14, 1.0 / 14.0, 1.0);
  edp::mechanism_outcome out = edp::run_mechanism(inst, 0.05, 0.01);
  CHECK(out.branch == edp::branch_kind::greedy);

  // Identical gain log 2 everywhere, so admission is by index and stops
  // when c > (B/2) * log2 / ((k+1) log2) = 1/(2(k+1)), i.e. after seven.
  REQUIRE(out.allocated == std::vector<int>{0, 1, 2, 3, 4, 5, 6});
  CHECK(out.value_allocated == doctest::Approx(7.0 * std::log(2.0)));
  REQUIRE(!out.trace.empty());
  CHECK_FALSE(out.trace.back().accepted);

  // Threshold: raising any report above 1/14 = 1/(2*7) breaks admission at
  // the seventh slot, so every payment sits at the reported cost.
  double total = 0.0;
  for (int i : out.allocated) {
    CHECK(out.payments(i) == doctest::Approx(1.0 / 14.0).epsilon(1e-4));
    CHECK(out.payments(i) >= inst.cost(i));
    total += out.payments(i);
  }
  CHECK(total <= inst.budget() + 1e-9);
  CHECK(total == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("proportional-share admission bound is non-strict") {
  Eigen::MatrixXd x(1, 1);
  x << 1.0;

  instance at_bound(x, Eigen::VectorXd::Constant(1, 0.5), 1.0);
  edp::greedy_result g = edp::greedy_allocate(at_bound);
  CHECK(g.members == std::vector<int>{0});

  instance just_over(x, Eigen::VectorXd::Constant(1, 0.5 + 1e-9), 1.0);
  g = edp::greedy_allocate(just_over);
  CHECK(g.members.empty());
  REQUIRE(g.trace.size() == 1);
  CHECK_FALSE(g.trace[0].accepted);
}

TEST_CASE("greedy pass on the fixture: tie to lowest index, then stop") {
  instance inst = edp::non_monotonicity_fixture();
  edp::greedy_result g = edp::greedy_allocate(inst);
  // Agents 1 and 2 tie on gain/cost; 1 wins, and the next candidate (2)
  // fails the proportional-share check, ending the pass.
  REQUIRE(g.members == std::vector<int>{1});
  REQUIRE(g.trace.size() == 2);
  CHECK(g.trace[0].index == 1);
  CHECK(g.trace[0].accepted);
  CHECK(g.trace[1].index == 2);
  CHECK_FALSE(g.trace[1].accepted);
  CHECK(g.trace[1].cost > g.trace[1].admission_bound);
  CHECK(g.value == doctest::Approx(std::log(1.5)));
}

TEST_CASE("accepted greedy steps respect the admission inequality") {
  for (std::uint64_t seed : {3u, 11u, 27u, 41u}) {
    instance inst =
        edp::generate_instance(6, 3, edp::cost_model::uniform, seed);
    edp::greedy_result g = edp::greedy_allocate(inst);
    for (const edp::greedy_step& s : g.trace) {
      CHECK(s.gain > 0.0);
      if (s.accepted) {
        CHECK(s.cost <= s.admission_bound);
      }
    }
    CHECK(g.value == doctest::Approx(edp::value(inst, g.members)));
  }
}

TEST_CASE("threshold payment against a pinned allocation rule") {
  Eigen::MatrixXd x(1, 1);
  x << 1.0;
  instance inst(x, Eigen::VectorXd::Constant(1, 0.1), 1.0);

  // Pin the rule to greedy membership: admitted iff the report is at most
  // (B/2) * gain / V = 1/2.
  edp::allocation_probe probe = [](const instance& probed, int agent) {
    return contains(edp::greedy_allocate(probed).members, agent);
  };
  const double pay_tol = 1e-9;
  double p = edp::threshold_payment(inst, 0, edp::branch_kind::greedy, 0.05,
                                    0.01, pay_tol, probe);
  CHECK(p == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(p <= 0.5 + 1e-12);  // lower bracket endpoint never overshoots

  // Coarse linear scan over reports agrees.
  double scanned = inst.cost(0);
  for (int k = 0; k <= 1000; ++k) {
    double r = 0.1 + (1.0 - 0.1) * k / 1000.0;
    if (probe(inst.with_cost(0, r), 0)) scanned = r;
  }
  CHECK(std::abs(p - scanned) <= 1e-3 + pay_tol);
}

TEST_CASE("degenerate market: cost equal to budget still clears") {
  Eigen::MatrixXd x(3, 2);
  x << 0.5, 0.0,
       0.5, 0.0,
       0.5, 0.0;
  instance inst(x, Eigen::VectorXd::Constant(3, 0.5), 0.5);
  edp::mechanism_outcome out = edp::run_mechanism(inst, 0.05, 0.01);
  CHECK(out.branch == edp::branch_kind::singleton);
  REQUIRE(out.allocated == std::vector<int>{0});
  CHECK(out.payments(0) == 0.5);
  CHECK(out.payments.sum() <= inst.budget() + 1e-12);
}

TEST_CASE("invariants on a sweep of random markets") {
  int runs = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    int n = 2 + static_cast<int>(seed % 5);
    edp::cost_model model = seed % 2 == 0
                                ? edp::cost_model::uniform
                                : edp::cost_model::proportional_to_norm;
    instance inst = edp::generate_instance(n, 3, model, seed);
    edp::mechanism_outcome out = edp::run_mechanism(inst, 0.05, 0.01);
    REQUIRE(!out.allocated.empty());
    double total = 0.0;
    for (int i = 0; i < inst.n(); ++i) {
      if (contains(out.allocated, i)) {
        CHECK(out.payments(i) >= inst.cost(i));  // individual rationality
        total += out.payments(i);
      } else {
        CHECK(out.payments(i) == 0.0);  // normalization
      }
    }
    CHECK(total <= inst.budget() + 1e-9);  // budget feasibility
    CHECK(out.value_allocated ==
          doctest::Approx(edp::value(inst, out.allocated)));
    ++runs;
  }
  CHECK(runs == 20);
}

TEST_CASE("allocation is monotone: winners keep winning at lower reports") {
  const double delta = 0.05;
  for (std::uint64_t seed : {5u, 13u, 29u, 37u, 53u}) {
    instance inst =
        edp::generate_instance(4, 3, edp::cost_model::uniform, seed);
    edp::mechanism_outcome out = edp::allocate(inst, delta, 0.01);
    for (int i : out.allocated) {
      double lowered = std::max(0.0, inst.cost(i) - delta);
      edp::mechanism_outcome again =
          edp::allocate(inst.with_cost(i, lowered), delta, 0.01);
      CHECK(contains(again.allocated, i));
    }
  }

  // Same property through the greedy branch.
  instance market = orthogonal_market(14, 1.0 / 14.0, 1.0);
  edp::mechanism_outcome out = edp::allocate(market, delta, 0.01);
  REQUIRE(out.branch == edp::branch_kind::greedy);
  for (int i : out.allocated) {
    double lowered = std::max(0.0, market.cost(i) - delta);
    edp::mechanism_outcome again =
        edp::allocate(market.with_cost(i, lowered), delta, 0.01);
    CHECK(again.branch == edp::branch_kind::greedy);
    CHECK(contains(again.allocated, i));
  }
}

TEST_CASE("greedy value plus best singleton sandwiches the optimum") {
  const double factor = std::exp(1.0) / (std::exp(1.0) - 1.0);
  for (std::uint64_t seed = 100; seed < 112; ++seed) {
    int n = 3 + static_cast<int>(seed % 7);
    instance inst =
        edp::generate_instance(n, 3, edp::cost_model::uniform, seed);
    edp::greedy_result g = edp::greedy_allocate(inst);
    auto [istar, vstar] = edp::max_singleton(inst);
    (void)istar;
    edp::opt_result opt = edp::brute_force_opt(inst);
    CHECK(opt.value <= factor * (3.0 * g.value + 2.0 * vstar) + 1e-9);
  }
}

TEST_CASE("misuse is rejected") {
  Eigen::MatrixXd x(2, 2);
  x << 1.0, 0.0,
       0.0, 1.0;
  instance over(x, Eigen::VectorXd::Constant(2, 1.5), 1.0);
  CHECK_THROWS_AS(edp::allocate(over, 0.05, 0.01), std::invalid_argument);

  instance ok(x, Eigen::VectorXd::Constant(2, 0.4), 1.0);
  edp::mechanism_outcome out = edp::run_mechanism(ok, 0.05, 0.01);
  for (int i = 0; i < 2; ++i) {
    if (!contains(out.allocated, i)) {
      CHECK_THROWS_AS(
          edp::threshold_payment(ok, out, i, 0.05, 0.01, 1e-6),
          std::invalid_argument);
    }
  }
  CHECK_THROWS_AS(
      edp::threshold_payment(ok, out, 9, 0.05, 0.01, 1e-6),
      std::invalid_argument);
}

TEST_CASE("default payment tolerance engages when nonpositive") {
  Eigen::MatrixXd x(1, 2);
  x << 1.0, 0.0;
  instance inst(x, Eigen::VectorXd::Constant(1, 0.2), 1.0);
  edp::mechanism_outcome a = edp::run_mechanism(inst, 0.05, 0.01, -1.0);
  edp::mechanism_outcome b = edp::run_mechanism(inst, 0.05, 0.01, 1e-6);
  CHECK(a.payments(0) == b.payments(0));
  CHECK(a.payments(0) >= inst.cost(0));
}
