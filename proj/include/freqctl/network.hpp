#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace freqctl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Malformed input file (bad JSON, missing keys, wrong shapes).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input parsed but violates a model invariant; the message names it.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Directed transmission line. Indices are 0-based; `from` carries the +1
/// entry of the incidence column.
struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
};

/// n-bus network with linearized swing dynamics
///   theta_dot = C^T omega,  M omega_dot = u - p - D omega - C B theta.
///
/// Immutable once constructed; every constructor path validates positivity of
/// M, D, B and connectivity of the underlying undirected graph.
class NetworkModel {
 public:
  NetworkModel(std::size_t n_buses, std::vector<Edge> edges, Vector inertia,
               Vector damping, Vector susceptance);

  std::size_t n_buses() const { return n_; }
  std::size_t n_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Vector& inertia() const { return m_; }
  const Vector& damping() const { return d_; }
  const Vector& susceptance() const { return b_; }

  /// Dense incidence matrix C (n_buses x n_edges).
  Matrix incidence() const;
  /// Weighted Laplacian C diag(w) C^T; w defaults to B.
  Matrix laplacian() const;
  Matrix laplacian(const Vector& edge_weights) const;

  /// C x for an edge vector x.
  Vector apply_incidence(const Vector& edge_values) const;
  /// C^T y for a bus vector y.
  Vector apply_incidence_transpose(const Vector& bus_values) const;

 private:
  std::size_t n_;
  std::vector<Edge> edges_;
  Vector m_, d_, b_;
};

/// Step change in power at each bus (p.u.).
struct Disturbance {
  Vector p;
};

/// Throws ValidationError if p has the wrong size or non-finite entries.
void validate_disturbance(const NetworkModel& model, const Disturbance& dist);

/// True when the undirected graph spanned by `edges` connects all buses.
bool is_connected(std::size_t n_buses, const std::vector<Edge>& edges);

/// Loads `{"buses": n, "edges": [[i,j],...], "M": [...], "D": [...],
/// "B": [...]}` with 1-based bus numbers.
NetworkModel load_network(const std::filesystem::path& path);
NetworkModel network_from_json_text(const std::string& text);

/// Serializes with 1-based bus numbers; inverse of network_from_json_text.
std::string network_to_json_text(const NetworkModel& model);

/// Built-in 39-bus New England system (see data/ieee39.json for the data source).
NetworkModel ieee39();

/// Three-bus ring used for desk-scale training runs.
NetworkModel toy3();

}  // namespace freqctl
