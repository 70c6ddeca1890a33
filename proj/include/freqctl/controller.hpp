#pragma once

#include <optional>

#include <json.hpp>

#include "freqctl/cost.hpp"
#include "freqctl/monotone.hpp"
#include "freqctl/network.hpp"

namespace freqctl {

/// Closed-loop state (theta~, omega, s, lambda, phi~). theta and phi live on
/// edges, the rest on buses.
struct SystemState {
  Vector theta, omega, s, lambda, phi;

  static SystemState zeros(const NetworkModel& model);
  std::size_t dimension() const;
  bool all_finite() const;
  /// Largest absolute component.
  double max_abs() const;
  /// Max-norm of the difference.
  double distance(const SystemState& other) const;

  SystemState& operator+=(const SystemState& rhs);
  SystemState operator+(const SystemState& rhs) const;
  SystemState operator*(double k) const;
};

/// u_i = f_i(s_i), either k_i s_i or a MonotoneNet.
class ControlLaw {
 public:
  enum class Kind { linear, monotone };

  static ControlLaw linear(Vector gains);
  static ControlLaw identity(std::size_t n_buses);
  static ControlLaw monotone(MonotoneNet net);

  Kind kind() const { return kind_; }
  std::size_t n_buses() const;

  double f(std::size_t bus, double s) const;
  double fprime(std::size_t bus, double s) const;
  /// Integral of f_i over [0, s].
  double integral(std::size_t bus, double s) const;
  /// f_i^{-1}(u) by bisection; throws if u is outside the reachable range.
  double inverse(std::size_t bus, double u, double tol = 1e-14) const;

  Vector apply(const Vector& s) const;

  const MonotoneNet& net() const { return *net_; }
  MonotoneNet& net() { return *net_; }
  const Vector& gains() const { return k_; }

 private:
  Kind kind_ = Kind::linear;
  Vector k_;
  std::optional<MonotoneNet> net_;
};

struct ControllerGains {
  Vector gamma_lambda;  // per bus
  Vector gamma_phi;     // per edge

  static ControllerGains identity(const NetworkModel& model);
  void validate(const NetworkModel& model) const;
};

/// Where the lambda update gets p from. `estimated_theta` uses the swing
/// identity -M omega_dot + u - D omega - C B theta~ and reproduces p exactly;
/// `estimated_phi` swaps theta~ for phi~ in that expression.
enum class PMode { known, estimated_theta, estimated_phi };

struct ControllerRates {
  Vector s_dot, lambda_dot, phi_dot;
};

ControllerRates controller_rhs(const ControlLaw& law, const ControllerGains& gains,
                               const NetworkModel& model, const CostModel& cost,
                               const SystemState& state, const Vector& p);

Vector estimate_disturbance(const NetworkModel& model, const SystemState& state,
                            const Vector& omega_dot, const Vector& u, PMode mode = PMode::estimated_theta);

}  // namespace freqctl
