#include <doctest.h>

#include <random>

#include "freqctl/instances.hpp"
#include "freqctl/oracle.hpp"

using namespace freqctl;

TEST_SUITE("oracle") {
  TEST_CASE("zero disturbance gives the zero optimum") {
    const NetworkModel m = toy3();
    const auto sol = solve_steady_state(m, CostModel::random_quartic(3, 1), Vector::Zero(3));
    CHECK(sol.u.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sol.mu == 0.0);
    CHECK(sol.theta.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("optimum equalizes marginal costs and balances power") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Instance inst = random_instance(3 + seed % 7, 200 + seed);
      const auto sol = solve_steady_state(inst.model, inst.cost, inst.p);
      const Vector g = inst.cost.grad(sol.u);
      CHECK((g.array() - sol.mu).abs().maxCoeff() <= 1e-9 * std::max(1.0, std::abs(sol.mu)));
      CHECK(std::abs(sol.u.sum() - inst.p.sum()) <= 1e-12 * std::max(1.0, inst.p.cwiseAbs().sum()));
      CHECK(sol.balance_residual <= 1e-10);
      CHECK(sol.lambda == Vector::Constant(sol.u.size(), -sol.mu));
    }
  }

  TEST_CASE("quadratic costs have a closed form") {
    const NetworkModel m = random_network(5, 2);
    const Vector c = (Vector(5) << 1.0, 2.0, 0.5, 4.0, 1.5).finished();
    const CostModel cost = CostModel::quadratic(c, Vector::Zero(5));
    const Vector p = (Vector(5) << 1.0, -0.5, 2.0, 0.3, 0.0).finished();
    const double mu = p.sum() / c.cwiseInverse().sum();
    const auto sol = solve_steady_state(m, cost, p);
    CHECK(sol.mu == doctest::Approx(mu).epsilon(1e-12));
    CHECK((sol.u - mu * c.cwiseInverse()).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("random restarts agree") {
    const Instance inst = random_instance(6, 12);
    const auto rep = verify_uniqueness(inst.model, inst.cost, inst.p, 20, 3);
    CHECK(rep.failed == 0);
    CHECK(rep.u_dispersion <= 1e-5);
    CHECK(rep.theta_dispersion <= 1e-5);
    CHECK(rep.lambda_dispersion <= 1e-5);
    const auto sol = solve_steady_state(inst.model, inst.cost, inst.p);
    CHECK((rep.optima.front() - sol.u).cwiseAbs().maxCoeff() <= 1e-5);
  }

  TEST_CASE("no feasible perturbation lowers the cost") {
    const Instance inst = random_instance(7, 5);
    const auto sol = solve_steady_state(inst.model, inst.cost, inst.p);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> z(0.0, 0.3);
    for (int k = 0; k < 1000; ++k) {
      Vector d(7);
      for (auto& v : d) v = z(rng);
      d.array() -= d.mean();
      CHECK(inst.cost.total(sol.u + d) >= sol.objective - 1e-12);
    }
  }

  TEST_CASE("the closed loop converges to the oracle with quadratic costs") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      const std::size_t n = 3 + seed;
      Instance inst = random_instance(n, 400 + seed, 2.0);
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> cd(0.5, 2.0);
      Vector c(static_cast<Eigen::Index>(n));
      for (auto& v : c) v = cd(rng);
      inst.cost = CostModel::quadratic(c, Vector::Zero(static_cast<Eigen::Index>(n)));
      const auto sol = solve_steady_state(inst.model, inst.cost, inst.p);
      const Trajectory traj = simulate(inst.system(), SystemState::zeros(inst.model), inst.p, 200.0, 0.01);
      const auto& x = traj.states.back();
      CHECK((traj.inputs.back() - sol.u).cwiseAbs().maxCoeff() <= 1e-4);
      CHECK((x.theta - sol.theta).cwiseAbs().maxCoeff() <= 1e-4);
      CHECK(x.omega.cwiseAbs().maxCoeff() <= 1e-4);
      CHECK((x.lambda - sol.lambda).cwiseAbs().maxCoeff() <= 1e-4);
    }
  }

  TEST_CASE("oracle JSON carries the balance") {
    const Instance inst = random_instance(4, 1);
    const auto j = solution_to_json(solve_steady_state(inst.model, inst.cost, inst.p));
    CHECK(j.at("u").size() == 4);
    CHECK(j.at("sum_u").get<double>() == doctest::Approx(inst.p.sum()));
  }

  TEST_CASE("bad inputs") {
    const NetworkModel m = toy3();
    CHECK_THROWS_AS(solve_steady_state(m, CostModel::random_quartic(2, 1), Vector::Zero(3)), ValidationError);
    CHECK_THROWS_AS(solve_steady_state(m, CostModel::random_quartic(3, 1), Vector::Zero(4)), ValidationError);
  }
}
