#include "freqctl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace freqctl {

namespace {

// Solves F_i'(u) = mu for a strictly increasing F_i'.
double inverse_marginal(const CostModel& cost, std::size_t bus, double mu) {
  if (mu == 0.0) return 0.0;
  double lo = -1.0, hi = 1.0;
  for (int i = 0; cost.grad(bus, hi) < mu; ++i) {
    if (i > 2000) throw BracketError("marginal cost bracket failed");
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; cost.grad(bus, lo) > mu; ++i) {
    if (i > 2000) throw BracketError("marginal cost bracket failed");
    hi = lo;
    lo *= 2.0;
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (cost.grad(bus, mid) < mu)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double supply(const CostModel& cost, double mu) {
  double total = 0.0;
  for (std::size_t i = 0; i < cost.size(); ++i) total += inverse_marginal(cost, i, mu);
  return total;
}

// Grounded Laplacian solve; bus 0 is the reference.
Vector bus_angles(const NetworkModel& model, const Vector& injection) {
  const auto n = static_cast<Eigen::Index>(model.n_buses());
  Vector theta = Vector::Zero(n);
  if (n == 1) return theta;
  const Matrix L = model.laplacian();
  Eigen::LDLT<Matrix> solver(L.bottomRightCorner(n - 1, n - 1));
  theta.tail(n - 1) = solver.solve(injection.tail(n - 1));
  return theta;
}

double max_pairwise(const std::vector<Vector>& xs) {
  double d = 0.0;
  for (std::size_t a = 0; a < xs.size(); ++a)
    for (std::size_t b = a + 1; b < xs.size(); ++b) d = std::max(d, (xs[a] - xs[b]).cwiseAbs().maxCoeff());
  return d;
}

}  // namespace

SteadyStateSolution solve_steady_state(const NetworkModel& model, const CostModel& cost, const Vector& p,
                                       double tol) {
  validate_disturbance(model, Disturbance{p});
  if (cost.size() != model.n_buses()) throw ValidationError("cost model size does not match bus count");
  const double demand = p.sum();

  double lo = -1.0, hi = 1.0;
  for (int i = 0; supply(cost, hi) < demand; ++i) {
    if (i > 2000) throw BracketError("common marginal cost bracket failed");
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; supply(cost, lo) > demand; ++i) {
    if (i > 2000) throw BracketError("common marginal cost bracket failed");
    hi = lo;
    lo *= 2.0;
  }
  for (int it = 0; it < 400 && hi - lo > tol * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (supply(cost, mid) < demand)
      lo = mid;
    else
      hi = mid;
  }
  const double mu = demand == 0.0 ? 0.0 : 0.5 * (lo + hi);

  SteadyStateSolution sol;
  const auto n = static_cast<Eigen::Index>(model.n_buses());
  sol.mu = mu;
  sol.u.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) sol.u[i] = inverse_marginal(cost, static_cast<std::size_t>(i), mu);
  // spread the leftover imbalance evenly so 1^T u = 1^T p to rounding
  sol.u.array() += (demand - sol.u.sum()) / static_cast<double>(n);

  const Vector theta_bus = bus_angles(model, sol.u - p);
  sol.theta = model.apply_incidence_transpose(theta_bus);
  sol.omega = Vector::Zero(n);
  sol.lambda = Vector::Constant(n, -mu);
  sol.objective = cost.total(sol.u);
  const Vector resid = sol.u - p - model.apply_incidence(model.susceptance().cwiseProduct(sol.theta));
  sol.balance_residual = resid.cwiseAbs().maxCoeff();
  return sol;
}

UniquenessReport verify_uniqueness(const NetworkModel& model, const CostModel& cost, const Vector& p,
                                   std::size_t n_restarts, std::uint64_t seed, double tol) {
  validate_disturbance(model, Disturbance{p});
  const auto n = static_cast<Eigen::Index>(model.n_buses());
  const double demand = p.sum();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> start(-5.0, 5.0);

  UniquenessReport rep;
  rep.restarts = n_restarts;
  std::vector<Vector> thetas, lambdas;
  for (std::size_t r = 0; r < n_restarts; ++r) {
    Vector u(n);
    for (Eigen::Index i = 0; i < n; ++i) u[i] = start(rng);
    u.array() += (demand - u.sum()) / static_cast<double>(n);

    Vector g(n), w(n), d(n);
    double nu = 0.0;
    bool converged = false;
    for (int it = 0; it < 20000; ++it) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto bus = static_cast<std::size_t>(i);
        g[i] = cost.grad(bus, u[i]);
        w[i] = 1.0 / std::max(cost.hess(bus, u[i]), 1e-12);
      }
      // multiplier of the balance constraint in the scaled metric
      nu = g.dot(w) / w.sum();
      // KKT residual in the unscaled metric; 1/hess blows up near u = 0
      if ((g.array() - g.mean()).abs().maxCoeff() <= tol) {
        converged = true;
        break;
      }
      d = -(g.array() - nu).matrix().cwiseProduct(w);
      const double f0 = cost.total(u);
      const double slope = g.dot(d);
      double step = 1.0;
      while (cost.total(u + step * d) > f0 + 1e-4 * step * slope && step > 1e-20) step *= 0.5;
      if (step <= 1e-20) break;
      u += step * d;
    }
    if (!converged) {
      ++rep.failed;
      continue;
    }
    rep.optima.push_back(u);
    thetas.push_back(model.apply_incidence_transpose(bus_angles(model, u - p)));
    const Vector lam = -g;  // stationarity with omega* = 0
    lambdas.push_back(lam);
    rep.lambda_spread = std::max(rep.lambda_spread, (lam.array() - lam.mean()).abs().maxCoeff());
  }
  rep.u_dispersion = max_pairwise(rep.optima);
  rep.theta_dispersion = max_pairwise(thetas);
  rep.lambda_dispersion = max_pairwise(lambdas);
  return rep;
}

SystemState equilibrium_from_oracle(const SteadyStateSolution& sol, const ControlLaw& law,
                                    const CostModel& cost) {
  const auto n = sol.u.size();
  SystemState x;
  x.s.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) x.s[i] = law.inverse(static_cast<std::size_t>(i), sol.u[i]);
  x.omega = Vector::Zero(n);
  x.lambda = -cost.grad(law.apply(x.s));
  x.theta = sol.theta;
  x.phi = sol.theta;
  return x;
}

nlohmann::json solution_to_json(const SteadyStateSolution& sol) {
  auto arr = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json j;
  j["u"] = arr(sol.u);
  j["theta"] = arr(sol.theta);
  j["omega"] = arr(sol.omega);
  j["lambda"] = arr(sol.lambda);
  j["mu"] = sol.mu;
  j["objective"] = sol.objective;
  j["sum_u"] = sol.u.sum();
  j["balance_residual"] = sol.balance_residual;
  return j;
}

}  // namespace freqctl
