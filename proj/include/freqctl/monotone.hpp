#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

namespace freqctl {

struct MonotoneConfig {
  std::size_t hidden = 20;  // breakpoints per bus
  double eps_slope = 1e-3;
  double l_max = 100.0;
  double s_max = 5.0;
  bool shared = false;      // one parameter group for every bus
};

/// Strictly increasing piecewise-linear f_i with f_i(0) = 0.
///
/// Each group holds d breakpoints beta_1..beta_d and d+1 raw slope parameters
/// zeta_0..zeta_d. Segment k spans [beta_k, beta_{k+1}) with beta_0 = -inf and
/// beta_{d+1} = +inf, and has slope
///   m_k = eps + (L_max - eps) * sigmoid(zeta_k)
/// so eps <= m_k <= L_max regardless of zeta. f(s) is the signed integral of
/// the slope from 0 to s.
///
/// Flat layout per group: [beta_1..beta_d, zeta_0..zeta_d].
class MonotoneNet {
 public:
  MonotoneNet(std::size_t n_buses, MonotoneConfig cfg);

  /// Identity warm start: breakpoints evenly inside [-s_max, s_max], slopes
  /// near 1 with a small seeded jitter.
  static MonotoneNet identity_init(std::size_t n_buses, MonotoneConfig cfg, std::uint64_t seed);

  std::size_t n_buses() const { return n_buses_; }
  std::size_t n_groups() const { return cfg_.shared ? 1 : n_buses_; }
  std::size_t hidden() const { return cfg_.hidden; }
  std::size_t group_size() const { return 2 * cfg_.hidden + 1; }
  std::size_t n_params() const { return theta_.size(); }
  const MonotoneConfig& config() const { return cfg_; }

  std::size_t group_of(std::size_t bus) const { return cfg_.shared ? 0 : bus; }

  std::vector<double>& params() { return theta_; }
  const std::vector<double>& params() const { return theta_; }

  std::span<const double> breakpoints(std::size_t group) const;
  std::span<double> breakpoints(std::size_t group);
  std::span<const double> raw_slopes(std::size_t group) const;
  std::span<double> raw_slopes(std::size_t group);

  double slope(std::size_t group, std::size_t k) const;
  /// dm_k / dzeta_k
  double slope_derivative(std::size_t group, std::size_t k) const;

  /// Sorts each group's breakpoints; call after every parameter update.
  void canonicalize();

  double forward(std::size_t bus, double s) const;
  /// Right-continuous slope at s.
  double input_grad(std::size_t bus, double s) const;
  /// Adds scale * du/dtheta into grad (full flat layout, length n_params()).
  void accumulate_param_grad(std::size_t bus, double s, double scale, std::span<double> grad) const;
  /// Exact integral of f over [0, s].
  double integral(std::size_t bus, double s) const;

  double max_slope() const;

 private:
  std::size_t n_buses_;
  MonotoneConfig cfg_;
  std::vector<double> theta_;
};

nlohmann::json monotone_to_json(const MonotoneNet& net);
MonotoneNet monotone_from_json(const nlohmann::json& j);
void save_checkpoint(const MonotoneNet& net, const std::filesystem::path& path);
MonotoneNet load_checkpoint(const std::filesystem::path& path);

}  // namespace freqctl
