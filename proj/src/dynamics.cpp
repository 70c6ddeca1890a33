#include "freqctl/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace freqctl {

namespace {

void check_state(const SystemState& x, std::size_t step_index) {
  if (!x.all_finite() || x.max_abs() > kBlowupThreshold) {
    std::ostringstream msg;
    msg << "integration blowup at step " << step_index << " (|x| > " << kBlowupThreshold
        << " or non-finite)";
    throw IntegrationBlowup(step_index, msg.str());
  }
}

double norm2(const Vector& v) { return v.size() ? v.norm() : 0.0; }

}  // namespace

SystemState closed_loop_rhs(const ClosedLoop& sys, const SystemState& x, const Vector& p) {
  const auto& model = sys.model;
  const Vector u = sys.law.apply(x.s);
  const Vector& b = model.susceptance();

  SystemState dx;
  dx.theta = model.apply_incidence_transpose(x.omega);
  const Vector flow = model.apply_incidence(b.cwiseProduct(x.theta));
  dx.omega = (u - p - model.damping().cwiseProduct(x.omega) - flow).cwiseQuotient(model.inertia());

  Vector p_used = p;
  if (sys.p_mode != PMode::known) p_used = estimate_disturbance(model, x, dx.omega, u, sys.p_mode);

  dx.s = -(sys.cost.grad(u) + x.omega + x.lambda);
  dx.lambda = sys.gains.gamma_lambda.cwiseProduct(u - p_used - model.apply_incidence(b.cwiseProduct(x.phi)));
  dx.phi = sys.gains.gamma_phi.cwiseProduct(b.cwiseProduct(model.apply_incidence_transpose(x.lambda)));
  return dx;
}

SystemState euler_step(const ClosedLoop& sys, const SystemState& x, const Vector& p, double h,
                       std::size_t step_index) {
  SystemState next = x + closed_loop_rhs(sys, x, p) * h;
  check_state(next, step_index);
  return next;
}

SystemState rk4_step(const ClosedLoop& sys, const SystemState& x, const Vector& p, double h,
                     std::size_t step_index) {
  const SystemState k1 = closed_loop_rhs(sys, x, p);
  const SystemState k2 = closed_loop_rhs(sys, x + k1 * (0.5 * h), p);
  const SystemState k3 = closed_loop_rhs(sys, x + k2 * (0.5 * h), p);
  const SystemState k4 = closed_loop_rhs(sys, x + k3 * h, p);
  SystemState next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
  check_state(next, step_index);
  return next;
}

std::size_t step_count(double T, double h) {
  return static_cast<std::size_t>(std::floor(T / h + 1e-9));
}

Trajectory simulate(const ClosedLoop& sys, const SystemState& x0, const Vector& p, double T, double h,
                    Integrator method) {
  if (!(h > 0.0)) throw ValidationError("step h must be positive");
  if (T < h) throw ValidationError("horizon T must be at least h");
  validate_disturbance(sys.model, Disturbance{p});
  const std::size_t K = step_count(T, h);

  Trajectory traj;
  traj.h = h;
  traj.p = p;
  traj.states.reserve(K + 1);
  traj.inputs.reserve(K + 1);
  traj.states.push_back(x0);
  traj.inputs.push_back(sys.law.apply(x0.s));
  for (std::size_t tau = 0; tau < K; ++tau) {
    const auto& x = traj.states.back();
    traj.states.push_back(method == Integrator::euler ? euler_step(sys, x, p, h, tau + 1)
                                                      : rk4_step(sys, x, p, h, tau + 1));
    traj.inputs.push_back(sys.law.apply(traj.states.back().s));
  }
  return traj;
}

double EquilibriumResiduals::max() const {
  return std::max({theta_dot, omega_dot, s_dot, lambda_dot, phi_dot, physical_balance,
                   virtual_balance, stationarity});
}

EquilibriumResiduals equilibrium_residuals(const ClosedLoop& sys, const SystemState& x, const Vector& p) {
  const SystemState dx = closed_loop_rhs(sys, x, p);
  const auto& model = sys.model;
  const Vector u = sys.law.apply(x.s);
  const Vector& b = model.susceptance();

  EquilibriumResiduals r;
  r.theta_dot = norm2(dx.theta);
  r.omega_dot = norm2(dx.omega);
  r.s_dot = norm2(dx.s);
  r.lambda_dot = norm2(dx.lambda);
  r.phi_dot = norm2(dx.phi);
  r.physical_balance = norm2(u - p - model.damping().cwiseProduct(x.omega) -
                             model.apply_incidence(b.cwiseProduct(x.theta)));
  r.virtual_balance = norm2(u - p - model.apply_incidence(b.cwiseProduct(x.phi)));
  r.stationarity = norm2(sys.cost.grad(u) + x.omega + x.lambda);
  return r;
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto n = traj.states.empty() ? 0 : traj.states.front().omega.size();
  out << "t";
  for (const char* name : {"omega", "u", "s", "lambda"})
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << name << '_' << i + 1;
  out << '\n';
  out << std::setprecision(10);
  for (std::size_t tau = 0; tau < traj.states.size(); ++tau) {
    const auto& x = traj.states[tau];
    out << traj.h * static_cast<double>(tau);
    for (const Vector* v : {&x.omega, &traj.inputs[tau], &x.s, &x.lambda})
      for (Eigen::Index i = 0; i < n; ++i) out << ',' << (*v)[i];
    out << '\n';
  }
}

}  // namespace freqctl
