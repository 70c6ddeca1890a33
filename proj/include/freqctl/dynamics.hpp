#pragma once

#include <filesystem>
#include <stdexcept>
#include <vector>

#include "freqctl/controller.hpp"

namespace freqctl {

class IntegrationBlowup : public std::runtime_error {
 public:
  IntegrationBlowup(std::size_t step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// Everything the right-hand side needs besides the state and p. Holds
/// references; the referenced objects must outlive it.
struct ClosedLoop {
  const NetworkModel& model;
  const ControlLaw& law;
  const ControllerGains& gains;
  const CostModel& cost;
  PMode p_mode = PMode::known;
};

inline constexpr double kBlowupThreshold = 1e6;

/// Continuous-time derivative of the full state.
SystemState closed_loop_rhs(const ClosedLoop& sys, const SystemState& x, const Vector& p);

/// One forward-Euler step; throws IntegrationBlowup tagged with `step_index`.
SystemState euler_step(const ClosedLoop& sys, const SystemState& x, const Vector& p, double h,
                       std::size_t step_index = 0);
SystemState rk4_step(const ClosedLoop& sys, const SystemState& x, const Vector& p, double h,
                     std::size_t step_index = 0);

enum class Integrator { euler, rk4 };

struct Trajectory {
  double h = 0.0;
  Vector p;
  std::vector<SystemState> states;  // tau = 0..K
  std::vector<Vector> inputs;       // u = f(s) at each recorded state

  std::size_t steps() const { return states.empty() ? 0 : states.size() - 1; }
  double horizon() const { return h * static_cast<double>(steps()); }
};

/// Number of Euler steps covering [0, T].
std::size_t step_count(double T, double h);

Trajectory simulate(const ClosedLoop& sys, const SystemState& x0, const Vector& p, double T, double h,
                    Integrator method = Integrator::euler);

struct EquilibriumResiduals {
  double theta_dot = 0.0, omega_dot = 0.0, s_dot = 0.0, lambda_dot = 0.0, phi_dot = 0.0;
  double physical_balance = 0.0;  // ||f(s) - p - D omega - C B theta~||
  double virtual_balance = 0.0;   // ||f(s) - p - C B phi~||
  double stationarity = 0.0;      // ||grad F(f(s)) + omega + lambda||
  double max() const;
};

EquilibriumResiduals equilibrium_residuals(const ClosedLoop& sys, const SystemState& x, const Vector& p);

/// Columns t, omega_1..n, u_1..n, s_1..n, lambda_1..n.
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

}  // namespace freqctl
