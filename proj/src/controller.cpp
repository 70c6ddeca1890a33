#include "freqctl/controller.hpp"

#include <cmath>
#include <sstream>

namespace freqctl {

namespace {

double max_abs_of(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

SystemState SystemState::zeros(const NetworkModel& model) {
  const auto n = static_cast<Eigen::Index>(model.n_buses());
  const auto e = static_cast<Eigen::Index>(model.n_edges());
  return {Vector::Zero(e), Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), Vector::Zero(e)};
}

std::size_t SystemState::dimension() const {
  return static_cast<std::size_t>(theta.size() + omega.size() + s.size() + lambda.size() + phi.size());
}

bool SystemState::all_finite() const {
  return theta.allFinite() && omega.allFinite() && s.allFinite() && lambda.allFinite() &&
         phi.allFinite();
}

double SystemState::max_abs() const {
  return std::max({max_abs_of(theta), max_abs_of(omega), max_abs_of(s), max_abs_of(lambda),
                   max_abs_of(phi)});
}

double SystemState::distance(const SystemState& o) const {
  return std::max({max_abs_of(theta - o.theta), max_abs_of(omega - o.omega), max_abs_of(s - o.s),
                   max_abs_of(lambda - o.lambda), max_abs_of(phi - o.phi)});
}

SystemState& SystemState::operator+=(const SystemState& r) {
  theta += r.theta;
  omega += r.omega;
  s += r.s;
  lambda += r.lambda;
  phi += r.phi;
  return *this;
}

SystemState SystemState::operator+(const SystemState& r) const {
  SystemState out = *this;
  out += r;
  return out;
}

SystemState SystemState::operator*(double k) const {
  return {theta * k, omega * k, s * k, lambda * k, phi * k};
}

ControlLaw ControlLaw::linear(Vector gains) {
  for (Eigen::Index i = 0; i < gains.size(); ++i) {
    if (!std::isfinite(gains[i]) || gains[i] <= 0.0) {
      std::ostringstream msg;
      msg << "controller gain[" << i << "] <= 0";
      throw ValidationError(msg.str());
    }
  }
  ControlLaw law;
  law.kind_ = Kind::linear;
  law.k_ = std::move(gains);
  return law;
}

ControlLaw ControlLaw::identity(std::size_t n_buses) {
  return linear(Vector::Ones(static_cast<Eigen::Index>(n_buses)));
}

ControlLaw ControlLaw::monotone(MonotoneNet net) {
  ControlLaw law;
  law.kind_ = Kind::monotone;
  law.net_.emplace(std::move(net));
  return law;
}

std::size_t ControlLaw::n_buses() const {
  return kind_ == Kind::linear ? static_cast<std::size_t>(k_.size()) : net_->n_buses();
}

double ControlLaw::f(std::size_t bus, double s) const {
  return kind_ == Kind::linear ? k_[static_cast<Eigen::Index>(bus)] * s : net_->forward(bus, s);
}

double ControlLaw::fprime(std::size_t bus, double s) const {
  return kind_ == Kind::linear ? k_[static_cast<Eigen::Index>(bus)] : net_->input_grad(bus, s);
}

double ControlLaw::integral(std::size_t bus, double s) const {
  return kind_ == Kind::linear ? 0.5 * k_[static_cast<Eigen::Index>(bus)] * s * s
                               : net_->integral(bus, s);
}

double ControlLaw::inverse(std::size_t bus, double u, double tol) const {
  if (kind_ == Kind::linear) return u / k_[static_cast<Eigen::Index>(bus)];
  if (u == 0.0) return 0.0;
  // slopes are >= eps_slope, so |s| <= |u| / eps bounds the root
  double lo = 0.0, hi = 0.0;
  double width = 1.0;
  const double limit = std::abs(u) / net_->config().eps_slope * 2.0 + 1.0;
  while (true) {
    lo = u > 0.0 ? 0.0 : -width;
    hi = u > 0.0 ? width : 0.0;
    if ((u > 0.0 && f(bus, hi) >= u) || (u < 0.0 && f(bus, lo) <= u)) break;
    width *= 2.0;
    if (width > limit) throw std::runtime_error("control law inversion bracket failed");
  }
  for (int it = 0; it < 200 && hi - lo > tol * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(bus, mid) < u)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

Vector ControlLaw::apply(const Vector& s) const {
  Vector u(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) u[i] = f(static_cast<std::size_t>(i), s[i]);
  return u;
}

ControllerGains ControllerGains::identity(const NetworkModel& model) {
  return {Vector::Ones(static_cast<Eigen::Index>(model.n_buses())),
          Vector::Ones(static_cast<Eigen::Index>(model.n_edges()))};
}

void ControllerGains::validate(const NetworkModel& model) const {
  if (static_cast<std::size_t>(gamma_lambda.size()) != model.n_buses())
    throw ValidationError("gamma_lambda must have one entry per bus");
  if (static_cast<std::size_t>(gamma_phi.size()) != model.n_edges())
    throw ValidationError("gamma_phi must have one entry per edge");
  for (Eigen::Index i = 0; i < gamma_lambda.size(); ++i)
    if (!(gamma_lambda[i] > 0.0)) throw ValidationError("gamma_lambda must be positive");
  for (Eigen::Index i = 0; i < gamma_phi.size(); ++i)
    if (!(gamma_phi[i] > 0.0)) throw ValidationError("gamma_phi must be positive");
}

ControllerRates controller_rhs(const ControlLaw& law, const ControllerGains& gains,
                               const NetworkModel& model, const CostModel& cost,
                               const SystemState& x, const Vector& p) {
  const Vector u = law.apply(x.s);
  const Vector& b = model.susceptance();
  ControllerRates r;
  r.s_dot = -(cost.grad(u) + x.omega + x.lambda);
  r.lambda_dot = gains.gamma_lambda.cwiseProduct(u - p - model.apply_incidence(b.cwiseProduct(x.phi)));
  r.phi_dot = gains.gamma_phi.cwiseProduct(b.cwiseProduct(model.apply_incidence_transpose(x.lambda)));
  return r;
}

Vector estimate_disturbance(const NetworkModel& model, const SystemState& x, const Vector& omega_dot,
                            const Vector& u, PMode mode) {
  const Vector& angle = mode == PMode::estimated_phi ? x.phi : x.theta;
  return -model.inertia().cwiseProduct(omega_dot) + u - model.damping().cwiseProduct(x.omega) -
         model.apply_incidence(model.susceptance().cwiseProduct(angle));
}

}  // namespace freqctl
