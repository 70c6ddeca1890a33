#include "freqctl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace freqctl {

void MetricConfig::validate() const {
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  if (!(rho_r > 0.0) || !(rho_n > 0.0) || !(rho_c > 0.0))
    throw ValidationError("loss weights must be positive");
  if (!(delta_band > 0.0)) throw ValidationError("settling band must be positive");
}

Vector rate_metric(const Trajectory& traj, double alpha) {
  const auto n = traj.states.front().omega.size();
  Vector r = Vector::Zero(n);
  const std::size_t K = traj.steps();
  for (std::size_t tau = 0; tau < K; ++tau) {
    const double w = std::exp(alpha * static_cast<double>(tau) * traj.h) * traj.h;
    r += w * traj.states[tau].omega.cwiseAbs2();
  }
  if (!r.allFinite())
    throw MetricOverflow("rate metric overflowed; reduce alpha or the horizon");
  return r;
}

Vector nadir(const Trajectory& traj) {
  Vector peak = Vector::Zero(traj.states.front().omega.size());
  for (const auto& x : traj.states) peak = peak.cwiseMax(x.omega.cwiseAbs());
  return peak;
}

Vector avg_cost(const Trajectory& traj, const CostModel& cost) {
  const auto n = traj.states.front().omega.size();
  Vector c = Vector::Zero(n);
  const std::size_t K = traj.steps();
  // (1/T) sum F h with T = K h, as a running mean so a constant input gives F exactly
  for (std::size_t tau = 0; tau < K; ++tau) {
    const double w = 1.0 / static_cast<double>(tau + 1);
    for (Eigen::Index i = 0; i < n; ++i)
      c[i] += (cost.cost(static_cast<std::size_t>(i), traj.inputs[tau][i]) - c[i]) * w;
  }
  return c;
}

double loss(const Trajectory& traj, const CostModel& cost, const MetricConfig& cfg) {
  return cfg.rho_r * rate_metric(traj, cfg.alpha).sum() + cfg.rho_n * nadir(traj).sum() +
         cfg.rho_c * avg_cost(traj, cost).sum();
}

double settling_time(const Trajectory& traj, double band) {
  std::size_t last_outside = traj.states.size();
  for (std::size_t tau = traj.states.size(); tau-- > 0;) {
    if (traj.states[tau].omega.cwiseAbs().maxCoeff() >= band) {
      last_outside = tau;
      break;
    }
  }
  if (last_outside == traj.states.size()) return 0.0;
  if (last_outside + 1 == traj.states.size()) return traj.horizon();
  return traj.h * static_cast<double>(last_outside + 1);
}

EnvelopeFit envelope_fit(const Trajectory& traj) {
  const std::size_t N = traj.states.size();
  std::vector<double> mag(N);
  for (std::size_t tau = 0; tau < N; ++tau) mag[tau] = traj.states[tau].omega.cwiseAbs().maxCoeff();
  const auto peak = static_cast<std::size_t>(std::max_element(mag.begin(), mag.end()) - mag.begin());

  // running max from the right turns oscillations into a monotone upper envelope
  std::vector<double> env(N, 0.0);
  double run = 0.0;
  for (std::size_t tau = N; tau-- > peak;) {
    run = std::max(run, mag[tau]);
    env[tau] = run;
  }

  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  std::size_t m = 0;
  for (std::size_t tau = peak; tau < N; ++tau) {
    if (env[tau] < 1e-6) continue;
    const double t = traj.h * static_cast<double>(tau);
    const double y = std::log(env[tau]);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++m;
  }
  if (m < 10) throw DegenerateFit("envelope fit needs at least 10 samples above 1e-6");
  const double md = static_cast<double>(m);
  const double denom = md * stt - st * st;
  if (!(denom > 0.0)) throw DegenerateFit("envelope fit has no time spread");
  const double slope = (md * sty - st * sy) / denom;
  const double intercept = (sy - slope * st) / md;
  return {std::exp(intercept), -slope, m};
}

double marginal_cost_spread(const SystemState& x, const ControlLaw& law, const CostModel& cost) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index i = 0; i < x.s.size(); ++i) {
    const auto bus = static_cast<std::size_t>(i);
    const double g = cost.grad(bus, law.f(bus, x.s[i]));
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  return hi - lo;
}

LyapunovFunction::LyapunovFunction(const ClosedLoop& sys, SystemState equilibrium, const Vector& p,
                                   double tol)
    : sys_(sys), eq_(std::move(equilibrium)) {
  const auto res = equilibrium_residuals(sys, eq_, p);
  if (!(res.max() <= tol)) {
    std::ostringstream msg;
    msg << "invalid equilibrium: residual " << res.max() << " > " << tol;
    throw ValidationError(msg.str());
  }
  const auto n = eq_.s.size();
  u_eq_.resize(n);
  u_int_eq_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto bus = static_cast<std::size_t>(i);
    u_eq_[i] = sys.law.f(bus, eq_.s[i]);
    u_int_eq_[i] = sys.law.integral(bus, eq_.s[i]);
  }
}

double LyapunovFunction::operator()(const SystemState& x) const {
  const auto& model = sys_.model;
  const Vector dt = x.theta - eq_.theta;
  const Vector dw = x.omega - eq_.omega;
  const Vector dl = x.lambda - eq_.lambda;
  const Vector dp = x.phi - eq_.phi;
  double v = 0.5 * (dt.cwiseAbs2().dot(model.susceptance()) + dw.cwiseAbs2().dot(model.inertia()) +
                    dl.cwiseAbs2().cwiseQuotient(sys_.gains.gamma_lambda).sum() +
                    dp.cwiseAbs2().cwiseQuotient(sys_.gains.gamma_phi).sum());
  for (Eigen::Index i = 0; i < x.s.size(); ++i) {
    const auto bus = static_cast<std::size_t>(i);
    v += sys_.law.integral(bus, x.s[i]) - u_int_eq_[i] - u_eq_[i] * (x.s[i] - eq_.s[i]);
  }
  return v;
}

double lyapunov_value(const ClosedLoop& sys, const SystemState& x, const SystemState& eq,
                      const Vector& p) {
  return LyapunovFunction(sys, eq, p)(x);
}

TransientReport transient_report(const Trajectory& traj, const ControlLaw& law, const CostModel& cost,
                                 const MetricConfig& cfg) {
  TransientReport rep;
  rep.rate = rate_metric(traj, cfg.alpha);
  rep.peak = nadir(traj);
  rep.cost = avg_cost(traj, cost);
  rep.rate_total = rep.rate.sum();
  rep.nadir = rep.peak.maxCoeff();
  rep.cost_total = rep.cost.sum();
  rep.loss = cfg.rho_r * rep.rate_total + cfg.rho_n * rep.peak.sum() + cfg.rho_c * rep.cost_total;
  rep.settling = settling_time(traj, cfg.delta_band);
  try {
    rep.envelope = envelope_fit(traj);
  } catch (const DegenerateFit&) {
  }
  rep.spread = marginal_cost_spread(traj.states.back(), law, cost);
  return rep;
}

void write_metrics_csv(const TransientReport& rep, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(10);
  out << "bus,R,nadir,avg_cost\n";
  for (Eigen::Index i = 0; i < rep.rate.size(); ++i)
    out << i + 1 << ',' << rep.rate[i] << ',' << rep.peak[i] << ',' << rep.cost[i] << '\n';
  out << "total," << rep.rate_total << ',' << rep.nadir << ',' << rep.cost_total << '\n';
}

}  // namespace freqctl
