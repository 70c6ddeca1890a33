#pragma once

#include <cstdint>

#include "freqctl/dynamics.hpp"

namespace freqctl {

/// Seeded random connected network: a random spanning tree plus each
/// remaining pair with probability `extra_edge_prob`. M ~ U(1,5),
/// D ~ U(0.5,2), B ~ U(0.5,2).
NetworkModel random_network(std::size_t n_buses, std::uint64_t seed, double extra_edge_prob = 0.3);

Vector random_disturbance(std::size_t n_buses, double range, std::uint64_t seed);

/// Everything a ClosedLoop refers to, owned in one place.
struct Instance {
  NetworkModel model;
  CostModel cost;
  ControllerGains gains;
  ControlLaw law;
  Vector p;

  ClosedLoop system() const { return ClosedLoop{model, law, gains, cost}; }
};

/// Random network, random quartic costs, Gamma_lambda = 1,
/// Gamma_phi = 0.3 / B^2 (keeps the virtual-flow oscillation inside the Euler
/// stability region at h = 0.01), linear law with unit slope,
/// p ~ U(-range, range)^n.
Instance random_instance(std::size_t n_buses, std::uint64_t seed, double range = 5.0);

/// Small path-graph instance with a monotone net pushed away from the
/// identity so every parameter carries gradient.
Instance gradient_check_instance(std::size_t n_buses, std::size_t hidden, std::uint64_t seed);

}  // namespace freqctl
