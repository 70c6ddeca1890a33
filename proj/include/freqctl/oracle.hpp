#pragma once

#include <cstdint>
#include <stdexcept>

#include <json.hpp>

#include "freqctl/controller.hpp"

namespace freqctl {

class BracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SteadyStateSolution {
  Vector u;      // per bus
  Vector theta;  // per edge, C^T theta_bus
  Vector omega;  // identically zero
  Vector lambda; // -mu * 1
  double mu = 0.0;
  double objective = 0.0;
  double balance_residual = 0.0;  // ||u - p - C B theta~||_inf
};

/// Equal-marginal-cost solve: bisection on mu with u_i(mu) = (F_i')^{-1}(mu)
/// found per bus by bisection, then L theta = u - p with theta_1 = 0.
SteadyStateSolution solve_steady_state(const NetworkModel& model, const CostModel& cost,
                                       const Vector& p, double tol = 1e-13);

struct UniquenessReport {
  std::size_t restarts = 0;
  std::size_t failed = 0;
  double u_dispersion = 0.0;       // max pairwise ||u_a - u_b||_inf
  double theta_dispersion = 0.0;
  double lambda_spread = 0.0;      // max deviation of the multiplier vector from its mean, over restarts
  double lambda_dispersion = 0.0;  // max pairwise multiplier difference
  std::vector<Vector> optima;
};

/// Preconditioned projected gradient on min F(u) s.t. 1^T u = 1^T p from random
/// starts. Shares no code with solve_steady_state.
UniquenessReport verify_uniqueness(const NetworkModel& model, const CostModel& cost, const Vector& p,
                                   std::size_t n_restarts, std::uint64_t seed = 1, double tol = 1e-10);

/// Closed-loop state matching the optimum: s* = f^{-1}(u*), phi~* = theta~*,
/// omega* = 0, lambda* = -grad F(f(s*)).
SystemState equilibrium_from_oracle(const SteadyStateSolution& sol, const ControlLaw& law,
                                    const CostModel& cost);

nlohmann::json solution_to_json(const SteadyStateSolution& sol);

}  // namespace freqctl
