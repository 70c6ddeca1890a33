#include "freqctl/instances.hpp"

#include <numeric>
#include <random>

namespace freqctl {

NetworkModel random_network(std::size_t n_buses, std::uint64_t seed, double extra_edge_prob) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::size_t> order(n_buses);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Edge> edges;
  std::vector<std::vector<bool>> linked(n_buses, std::vector<bool>(n_buses, false));
  for (std::size_t k = 1; k < n_buses; ++k) {
    const std::size_t parent = order[static_cast<std::size_t>(unit(rng) * static_cast<double>(k))];
    edges.push_back({parent, order[k]});
    linked[parent][order[k]] = linked[order[k]][parent] = true;
  }
  for (std::size_t i = 0; i < n_buses; ++i)
    for (std::size_t j = i + 1; j < n_buses; ++j)
      if (!linked[i][j] && unit(rng) < extra_edge_prob) edges.push_back({i, j});

  const auto n = static_cast<Eigen::Index>(n_buses);
  const auto e = static_cast<Eigen::Index>(edges.size());
  Vector m(n), d(n), b(e);
  for (Eigen::Index i = 0; i < n; ++i) m[i] = 1.0 + 4.0 * unit(rng);
  for (Eigen::Index i = 0; i < n; ++i) d[i] = 0.5 + 1.5 * unit(rng);
  for (Eigen::Index i = 0; i < e; ++i) b[i] = 0.5 + 1.5 * unit(rng);
  return NetworkModel(n_buses, std::move(edges), std::move(m), std::move(d), std::move(b));
}

Vector random_disturbance(std::size_t n_buses, double range, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-range, range);
  Vector p(static_cast<Eigen::Index>(n_buses));
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = dist(rng);
  return p;
}

Instance random_instance(std::size_t n_buses, std::uint64_t seed, double range) {
  NetworkModel model = random_network(n_buses, seed);
  ControllerGains gains = ControllerGains::identity(model);
  gains.gamma_phi = 0.3 * model.susceptance().cwiseAbs2().cwiseInverse();
  return Instance{std::move(model), CostModel::random_quartic(n_buses, seed + 1), std::move(gains),
                  ControlLaw::identity(n_buses), random_disturbance(n_buses, range, seed + 2)};
}

Instance gradient_check_instance(std::size_t n_buses, std::size_t hidden, std::uint64_t seed) {
  if (n_buses < 2) throw ValidationError("gradient check needs at least 2 buses");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n_buses; ++i) edges.push_back({i, i + 1});
  const auto n = static_cast<Eigen::Index>(n_buses);
  NetworkModel model(n_buses, edges, Vector::Ones(n), Vector::Ones(n),
                     Vector::Ones(static_cast<Eigen::Index>(edges.size())));
  ControllerGains gains = ControllerGains::identity(model);

  MonotoneConfig mc;
  mc.hidden = hidden;
  mc.s_max = 1.0;
  MonotoneNet net = MonotoneNet::identity_init(n_buses, mc, seed);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  for (auto& v : net.params()) v += jitter(rng);
  net.canonicalize();
  return Instance{std::move(model), CostModel::random_quartic(n_buses, seed, 0.3), std::move(gains),
                  ControlLaw::monotone(std::move(net)), random_disturbance(n_buses, 2.0, seed + 1)};
}

}  // namespace freqctl
