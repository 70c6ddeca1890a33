#include "freqctl/cost.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace freqctl {

CostModel::CostModel(std::vector<Term> terms) : terms_(std::move(terms)) {
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (!std::isfinite(terms_[i].c) || terms_[i].c <= 0.0) {
      std::ostringstream msg;
      msg << "cost c[" << i << "] <= 0";
      throw ValidationError(msg.str());
    }
    if (!std::isfinite(terms_[i].b)) {
      std::ostringstream msg;
      msg << "cost b[" << i << "] is not finite";
      throw ValidationError(msg.str());
    }
  }
}

CostModel CostModel::quartic(const Vector& c, const Vector& b) {
  if (c.size() != b.size()) throw ValidationError("cost c and b differ in length");
  std::vector<Term> terms;
  for (Eigen::Index i = 0; i < c.size(); ++i) terms.push_back({Family::quartic, c[i], b[i]});
  return CostModel(std::move(terms));
}

CostModel CostModel::quadratic(const Vector& c, const Vector& b) {
  if (c.size() != b.size()) throw ValidationError("cost c and b differ in length");
  std::vector<Term> terms;
  for (Eigen::Index i = 0; i < c.size(); ++i) terms.push_back({Family::quadratic, c[i], b[i]});
  return CostModel(std::move(terms));
}

CostModel CostModel::random_quartic(std::size_t n_buses, std::uint64_t seed, double c_floor) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Term> terms(n_buses);
  for (auto& t : terms) {
    t.family = Family::quartic;
    t.c = std::max(unit(rng), c_floor);
    t.b = unit(rng);
  }
  return CostModel(std::move(terms));
}

double CostModel::cost(std::size_t bus, double u) const {
  const auto& t = terms_[bus];
  switch (t.family) {
    case Family::quartic: {
      const double u2 = u * u;
      return 0.25 * t.c * u2 * u2 + t.b;
    }
    case Family::quadratic:
      return 0.5 * t.c * u * u + t.b;
  }
  return 0.0;
}

double CostModel::grad(std::size_t bus, double u) const {
  const auto& t = terms_[bus];
  switch (t.family) {
    case Family::quartic:
      return t.c * u * u * u;
    case Family::quadratic:
      return t.c * u;
  }
  return 0.0;
}

double CostModel::hess(std::size_t bus, double u) const {
  const auto& t = terms_[bus];
  switch (t.family) {
    case Family::quartic:
      return 3.0 * t.c * u * u;
    case Family::quadratic:
      return t.c;
  }
  return 0.0;
}

Vector CostModel::grad(const Vector& u) const {
  Vector g(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) g[i] = grad(static_cast<std::size_t>(i), u[i]);
  return g;
}

double CostModel::total(const Vector& u) const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) sum += cost(static_cast<std::size_t>(i), u[i]);
  return sum;
}

CostModel cost_from_json(const nlohmann::json& j, std::size_t n_buses) {
  if (!j.is_object()) throw ParseError("cost must be an object");
  const std::string type = j.value("type", std::string("quartic"));
  if (type != "quartic" && type != "quadratic")
    throw ParseError("unknown cost type \"" + type + "\"");
  const auto family = type == "quartic" ? CostModel::Family::quartic : CostModel::Family::quadratic;

  if (j.contains("seed")) {
    if (family != CostModel::Family::quartic) throw ParseError("random costs are quartic only");
    const double floor = j.value("c_floor", 0.05);
    return CostModel::random_quartic(n_buses, j.at("seed").get<std::uint64_t>(), floor);
  }
  if (!j.contains("c") || !j.at("c").is_array()) throw ParseError("cost needs \"c\" or \"seed\"");
  const auto& cs = j.at("c");
  if (cs.size() != n_buses) throw ParseError("cost \"c\" length does not match bus count");
  std::vector<double> bs(n_buses, 0.0);
  if (j.contains("b")) {
    if (j.at("b").size() != n_buses) throw ParseError("cost \"b\" length does not match bus count");
    bs = j.at("b").get<std::vector<double>>();
  }
  std::vector<CostModel::Term> terms;
  for (std::size_t i = 0; i < n_buses; ++i) terms.push_back({family, cs[i].get<double>(), bs[i]});
  return CostModel(std::move(terms));
}

nlohmann::json cost_to_json(const CostModel& cost) {
  nlohmann::json j;
  std::vector<double> c, b;
  for (std::size_t i = 0; i < cost.size(); ++i) {
    c.push_back(cost.term(i).c);
    b.push_back(cost.term(i).b);
  }
  j["type"] = cost.size() > 0 && cost.term(0).family == CostModel::Family::quadratic ? "quadratic"
                                                                                     : "quartic";
  j["c"] = c;
  j["b"] = b;
  return j;
}

}  // namespace freqctl
