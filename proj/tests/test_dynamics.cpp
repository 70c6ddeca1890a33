#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "freqctl/instances.hpp"
#include "freqctl/oracle.hpp"
#include "freqctl/scenario.hpp"

using namespace freqctl;

TEST_SUITE("dynamics") {
  TEST_CASE("origin is fixed when p = 0") {
    const Instance inst = random_instance(5, 3);
    const ClosedLoop sys = inst.system();
    const Vector p = Vector::Zero(5);
    SystemState x = SystemState::zeros(inst.model);
    for (int k = 0; k < 200; ++k) x = euler_step(sys, x, p, 0.01, static_cast<std::size_t>(k));
    CHECK(x.max_abs() == 0.0);
  }

  TEST_CASE("single Euler step example") {
    const NetworkModel m(2, {{0, 1}}, Vector::Ones(2), Vector::Ones(2), Vector::Ones(1));
    const CostModel cost = CostModel::quartic(Vector::Ones(2), Vector::Zero(2));
    const ControlLaw law = ControlLaw::identity(2);
    const ControllerGains gains = ControllerGains::identity(m);
    const ClosedLoop sys{m, law, gains, cost};
    SystemState x = SystemState::zeros(m);
    x.omega << 0.1, -0.1;
    const SystemState y = euler_step(sys, x, Vector::Zero(2), 0.01);
    CHECK(y.theta[0] == doctest::Approx(0.002).epsilon(1e-12));
    CHECK(y.omega[0] == doctest::Approx(0.099).epsilon(1e-12));
    CHECK(y.omega[1] == doctest::Approx(-0.099).epsilon(1e-12));
  }

  TEST_CASE("Euler is first order") {
    const Instance inst = random_instance(4, 9, 1.0);
    const ClosedLoop sys = inst.system();
    const SystemState x0 = SystemState::zeros(inst.model);
    const double T = 2.0;
    const SystemState ref = simulate(sys, x0, inst.p, T, 1e-4, Integrator::rk4).states.back();
    const double e1 = simulate(sys, x0, inst.p, T, 0.01).states.back().distance(ref);
    const double e2 = simulate(sys, x0, inst.p, T, 0.005).states.back().distance(ref);
    const double ratio = e1 / e2;
    CHECK(ratio >= 1.7);
    CHECK(ratio <= 2.3);
  }

  TEST_CASE("oracle equilibrium has vanishing residuals") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Instance inst = random_instance(3 + seed, 50 + seed);
      const ClosedLoop sys = inst.system();
      const auto sol = solve_steady_state(inst.model, inst.cost, inst.p);
      const SystemState eq = equilibrium_from_oracle(sol, inst.law, inst.cost);
      CHECK(equilibrium_residuals(sys, eq, inst.p).max() <= 1e-8);
    }
  }

  TEST_CASE("lambda residual at the origin equals the scaled disturbance") {
    const Instance inst = random_instance(4, 22);
    const auto r = equilibrium_residuals(inst.system(), SystemState::zeros(inst.model), inst.p);
    CHECK(r.lambda_dot == doctest::Approx(inst.gains.gamma_lambda.cwiseProduct(inst.p).norm()).epsilon(1e-14));
  }

  TEST_CASE("started at equilibrium the state drifts by at most 1e-6 over 10 s") {
    const Instance inst = random_instance(6, 71);
    const ClosedLoop sys = inst.system();
    const auto sol = solve_steady_state(inst.model, inst.cost, inst.p);
    const SystemState eq = equilibrium_from_oracle(sol, inst.law, inst.cost);
    const Trajectory traj = simulate(sys, eq, inst.p, 10.0, 0.01);
    CHECK(traj.states.back().distance(eq) <= 1e-6);
  }

  TEST_CASE("blowup reports the step index") {
    const Instance inst = random_instance(3, 5);
    const ClosedLoop sys = inst.system();
    SystemState x = SystemState::zeros(inst.model);
    x.omega[0] = 2e6;
    try {
      (void)euler_step(sys, x, inst.p, 0.01, 17);
      FAIL("no blowup");
    } catch (const IntegrationBlowup& err) {
      CHECK(err.step() == 17);
      CHECK(std::string(err.what()).find("step 17") != std::string::npos);
    }
    // an unstable step size diverges during simulate
    CHECK_THROWS_AS(simulate(sys, SystemState::zeros(inst.model), inst.p, 300.0, 3.0), IntegrationBlowup);
  }

  TEST_CASE("net generation minus load equals inertial plus damping power") {
    const Scenario sc = load_scenario(FREQCTL_SCENARIO_DIR "/ieee39_step.json");
    const ControlLaw law = make_law(sc);
    const ClosedLoop sys{sc.model, law, sc.gains, sc.cost};
    const Trajectory traj = simulate(sys, SystemState::zeros(sc.model), sc.p, 60.0, sc.dt);
    for (std::size_t tau : {std::size_t{0}, std::size_t{100}, std::size_t{3000}, traj.steps()}) {
      const auto& x = traj.states[tau];
      const Vector omega_dot = closed_loop_rhs(sys, x, sc.p).omega;
      const double lhs = traj.inputs[tau].sum() - sc.p.sum();
      const double rhs = sc.model.inertia().dot(omega_dot) + sc.model.damping().dot(x.omega);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10).scale(1.0));
    }
    CHECK(std::abs(traj.inputs.back().sum() - sc.p.sum()) <= 0.05);
  }

  TEST_CASE("step count and horizon") {
    CHECK(step_count(1.0, 0.01) == 100);
    CHECK(step_count(60.0, 0.01) == 6000);
    const Instance inst = random_instance(2, 1);
    const Trajectory traj = simulate(inst.system(), SystemState::zeros(inst.model), inst.p, 1.0, 0.1);
    CHECK(traj.steps() == 10);
    CHECK(traj.horizon() == doctest::Approx(1.0));
    CHECK(traj.inputs.size() == traj.states.size());
  }

  TEST_CASE("trajectory CSV header") {
    const Instance inst = random_instance(2, 1);
    const Trajectory traj = simulate(inst.system(), SystemState::zeros(inst.model), inst.p, 0.1, 0.05);
    const auto path = std::filesystem::temp_directory_path() / "freqctl_traj_header.csv";
    write_trajectory_csv(traj, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    std::filesystem::remove(path);
    CHECK(header == "t,omega_1,omega_2,u_1,u_2,s_1,s_2,lambda_1,lambda_2");
    CHECK(rows == 3);
  }
}
