#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>

#include "freqctl/dynamics.hpp"

namespace freqctl {

struct MetricConfig {
  double alpha = 3.0;
  double rho_r = 0.1;
  double rho_n = 1.0;
  double rho_c = 1.0;
  double delta_band = 5e-3;

  void validate() const;
};

class MetricOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// R_i = sum_{tau<K} e^{alpha tau h} omega_i(tau)^2 h  (left Riemann sum).
Vector rate_metric(const Trajectory& traj, double alpha);
/// max_tau |omega_i(tau)| over tau = 0..K.
Vector nadir(const Trajectory& traj);
/// (1/T) sum_{tau<K} F_i(u_i(tau)) h.
Vector avg_cost(const Trajectory& traj, const CostModel& cost);
double loss(const Trajectory& traj, const CostModel& cost, const MetricConfig& cfg);

/// Smallest t* with |omega_i(t)| < band for all i and all t >= t*; T when the
/// last sample is still outside the band.
double settling_time(const Trajectory& traj, double band);

struct EnvelopeFit {
  double amplitude = 0.0;
  double rate = 0.0;
  std::size_t points = 0;
};

/// Least-squares line through log of the running upper envelope of
/// ||omega(t)||_inf after the nadir. Samples below 1e-6 are dropped.
EnvelopeFit envelope_fit(const Trajectory& traj);

double marginal_cost_spread(const SystemState& x, const ControlLaw& law, const CostModel& cost);

/// Lyapunov function around a validated equilibrium:
///   V = 1/2 (z-z*)^T G (z-z*) + U(s) - U(s*) - f(s*)^T (s-s*),
/// z = (theta~, omega, lambda, phi~), G = diag(B, M, Gamma_l^-1, Gamma_phi^-1).
class LyapunovFunction {
 public:
  LyapunovFunction(const ClosedLoop& sys, SystemState equilibrium, const Vector& p,
                   double tol = 1e-6);
  double operator()(const SystemState& x) const;

 private:
  const ClosedLoop& sys_;
  SystemState eq_;
  Vector u_eq_, u_int_eq_;
};

double lyapunov_value(const ClosedLoop& sys, const SystemState& x, const SystemState& eq,
                      const Vector& p);

struct TransientReport {
  Vector rate, peak, cost;
  double rate_total = 0.0, nadir = 0.0, cost_total = 0.0, loss = 0.0, settling = 0.0;
  std::optional<EnvelopeFit> envelope;
  double spread = 0.0;
};

TransientReport transient_report(const Trajectory& traj, const ControlLaw& law, const CostModel& cost,
                                 const MetricConfig& cfg);

/// bus,R,nadir,avg_cost rows followed by a `total` row.
void write_metrics_csv(const TransientReport& rep, const std::filesystem::path& path);

}  // namespace freqctl
