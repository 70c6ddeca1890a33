#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "freqctl/network.hpp"

namespace freqctl {

/// Per-bus strictly convex generation cost with grad F_i(0) = 0.
///
/// Two families are supported:
///   quartic:   F(u) = c/4 u^4 + b   (grad c u^3, hess 3 c u^2)
///   quadratic: F(u) = c/2 u^2 + b   (grad c u,   hess c)
/// c > 0 in both cases; b is a constant offset that only shifts cost levels.
class CostModel {
 public:
  enum class Family { quartic, quadratic };

  struct Term {
    Family family = Family::quartic;
    double c = 1.0;
    double b = 0.0;
  };

  explicit CostModel(std::vector<Term> terms);

  static CostModel quartic(const Vector& c, const Vector& b);
  static CostModel quadratic(const Vector& c, const Vector& b);

  /// Quartic costs with c_i, b_i ~ U(0,1) drawn from `seed`; c_i is clamped
  /// below at `c_floor`.
  static CostModel random_quartic(std::size_t n_buses, std::uint64_t seed, double c_floor = 0.05);

  std::size_t size() const { return terms_.size(); }
  const Term& term(std::size_t bus) const { return terms_[bus]; }

  double cost(std::size_t bus, double u) const;
  double grad(std::size_t bus, double u) const;
  double hess(std::size_t bus, double u) const;

  Vector grad(const Vector& u) const;
  double total(const Vector& u) const;

 private:
  std::vector<Term> terms_;
};

/// Parses {"type": "quartic"|"quadratic", "c": [...], "b": [...]} or
/// {"type": "quartic", "seed": k, "c_floor": 0.05}.
CostModel cost_from_json(const nlohmann::json& j, std::size_t n_buses);
nlohmann::json cost_to_json(const CostModel& cost);

}  // namespace freqctl
