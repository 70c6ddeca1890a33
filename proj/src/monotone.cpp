#include "freqctl/monotone.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "freqctl/network.hpp"

namespace freqctl {

namespace {

constexpr int kCheckpointVersion = 1;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

// Length of [lo, hi) inside [a, b].
double overlap(double lo, double hi, double a, double b) {
  return std::max(0.0, std::min(hi, b) - std::max(lo, a));
}

}  // namespace

MonotoneNet::MonotoneNet(std::size_t n_buses, MonotoneConfig cfg) : n_buses_(n_buses), cfg_(cfg) {
  if (n_buses == 0) throw ValidationError("monotone net needs at least one bus");
  if (!(cfg_.eps_slope > 0.0)) throw ValidationError("eps_slope must be positive");
  if (!(cfg_.l_max > cfg_.eps_slope)) throw ValidationError("l_max must exceed eps_slope");
  if (!(cfg_.s_max > 0.0)) throw ValidationError("s_max must be positive");
  theta_.assign(n_groups() * group_size(), 0.0);
}

MonotoneNet MonotoneNet::identity_init(std::size_t n_buses, MonotoneConfig cfg, std::uint64_t seed) {
  MonotoneNet net(n_buses, cfg);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.01, 0.01);
  const std::size_t d = cfg.hidden;
  for (std::size_t g = 0; g < net.n_groups(); ++g) {
    auto beta = net.breakpoints(g);
    for (std::size_t k = 0; k < d; ++k)
      beta[k] = -cfg.s_max + 2.0 * cfg.s_max * static_cast<double>(k + 1) / static_cast<double>(d + 1);
    // jitter is applied to the slope itself so the warm start stays within 1% of identity
    auto zeta = net.raw_slopes(g);
    for (std::size_t k = 0; k <= d; ++k) {
      const double m = 1.0 + jitter(rng);
      zeta[k] = logit((m - cfg.eps_slope) / (cfg.l_max - cfg.eps_slope));
    }
  }
  return net;
}

std::span<const double> MonotoneNet::breakpoints(std::size_t group) const {
  return {theta_.data() + group * group_size(), cfg_.hidden};
}
std::span<double> MonotoneNet::breakpoints(std::size_t group) {
  return {theta_.data() + group * group_size(), cfg_.hidden};
}
std::span<const double> MonotoneNet::raw_slopes(std::size_t group) const {
  return {theta_.data() + group * group_size() + cfg_.hidden, cfg_.hidden + 1};
}
std::span<double> MonotoneNet::raw_slopes(std::size_t group) {
  return {theta_.data() + group * group_size() + cfg_.hidden, cfg_.hidden + 1};
}

double MonotoneNet::slope(std::size_t group, std::size_t k) const {
  return cfg_.eps_slope + (cfg_.l_max - cfg_.eps_slope) * sigmoid(raw_slopes(group)[k]);
}

double MonotoneNet::slope_derivative(std::size_t group, std::size_t k) const {
  const double sg = sigmoid(raw_slopes(group)[k]);
  return (cfg_.l_max - cfg_.eps_slope) * sg * (1.0 - sg);
}

void MonotoneNet::canonicalize() {
  for (std::size_t g = 0; g < n_groups(); ++g) {
    auto beta = breakpoints(g);
    std::sort(beta.begin(), beta.end());
  }
}

double MonotoneNet::forward(std::size_t bus, double s) const {
  if (s == 0.0) return 0.0;
  const std::size_t g = group_of(bus);
  const auto beta = breakpoints(g);
  const std::size_t d = cfg_.hidden;
  const double a = std::min(0.0, s), b = std::max(0.0, s);
  constexpr double inf = std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (std::size_t k = 0; k <= d; ++k) {
    const double lo = k == 0 ? -inf : beta[k - 1];
    const double hi = k == d ? inf : beta[k];
    const double len = overlap(lo, hi, a, b);
    if (len > 0.0) acc += slope(g, k) * len;
  }
  return s > 0.0 ? acc : -acc;
}

double MonotoneNet::input_grad(std::size_t bus, double s) const {
  const std::size_t g = group_of(bus);
  const auto beta = breakpoints(g);
  const auto k = static_cast<std::size_t>(std::upper_bound(beta.begin(), beta.end(), s) - beta.begin());
  return slope(g, k);
}

void MonotoneNet::accumulate_param_grad(std::size_t bus, double s, double scale,
                                        std::span<double> grad) const {
  if (s == 0.0 || scale == 0.0) return;
  const std::size_t g = group_of(bus);
  const auto beta = breakpoints(g);
  const std::size_t d = cfg_.hidden;
  const double sign = s > 0.0 ? 1.0 : -1.0;
  const double a = std::min(0.0, s), b = std::max(0.0, s);
  constexpr double inf = std::numeric_limits<double>::infinity();
  double* gb = grad.data() + g * group_size();
  double* gz = gb + d;

  for (std::size_t k = 0; k <= d; ++k) {
    const double lo = k == 0 ? -inf : beta[k - 1];
    const double hi = k == d ? inf : beta[k];
    const double len = overlap(lo, hi, a, b);
    if (len > 0.0) gz[k] += scale * sign * len * slope_derivative(g, k);
  }
  // Moving beta_k right grows segment k-1 and shrinks segment k.
  for (std::size_t k = 1; k <= d; ++k) {
    const double bk = beta[k - 1];
    if (bk > a && bk < b) gb[k - 1] += scale * sign * (slope(g, k - 1) - slope(g, k));
  }
}

double MonotoneNet::integral(std::size_t bus, double s) const {
  if (s == 0.0) return 0.0;
  const std::size_t g = group_of(bus);
  const auto beta = breakpoints(g);
  const std::size_t d = cfg_.hidden;
  double acc = 0.0;
  if (s > 0.0) {
    auto k = static_cast<std::size_t>(std::upper_bound(beta.begin(), beta.end(), 0.0) - beta.begin());
    double x = 0.0, fx = 0.0;
    while (x < s) {
      const double end = k < d ? std::min(beta[k], s) : s;
      const double len = end - x;
      const double m = slope(g, k);
      acc += fx * len + 0.5 * m * len * len;
      fx += m * len;
      x = end;
      ++k;
    }
    return acc;
  }
  // walk left from 0; segment k has left edge beta[k-1]
  auto k = static_cast<std::size_t>(std::lower_bound(beta.begin(), beta.end(), 0.0) - beta.begin());
  double x = 0.0, fx = 0.0;
  while (x > s) {
    const double start = k > 0 ? std::max(beta[k - 1], s) : s;
    const double len = x - start;
    const double m = slope(g, k);
    acc += fx * len - 0.5 * m * len * len;
    fx -= m * len;
    x = start;
    if (k == 0) break;
    --k;
  }
  return -acc;
}

double MonotoneNet::max_slope() const {
  double best = 0.0;
  for (std::size_t g = 0; g < n_groups(); ++g)
    for (std::size_t k = 0; k <= cfg_.hidden; ++k) best = std::max(best, slope(g, k));
  return best;
}

nlohmann::json monotone_to_json(const MonotoneNet& net) {
  nlohmann::json j;
  const auto& cfg = net.config();
  j["format_version"] = kCheckpointVersion;
  j["buses"] = net.n_buses();
  j["d"] = cfg.hidden;
  j["eps_slope"] = cfg.eps_slope;
  j["l_max"] = cfg.l_max;
  j["s_max"] = cfg.s_max;
  j["shared"] = cfg.shared;
  j["beta"] = nlohmann::json::array();
  j["zeta"] = nlohmann::json::array();
  for (std::size_t g = 0; g < net.n_groups(); ++g) {
    auto beta = net.breakpoints(g);
    auto zeta = net.raw_slopes(g);
    j["beta"].push_back(std::vector<double>(beta.begin(), beta.end()));
    j["zeta"].push_back(std::vector<double>(zeta.begin(), zeta.end()));
  }
  return j;
}

MonotoneNet monotone_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format_version", 0) != kCheckpointVersion)
      throw ParseError("unsupported checkpoint format_version");
    MonotoneConfig cfg;
    cfg.hidden = j.at("d").get<std::size_t>();
    cfg.eps_slope = j.at("eps_slope").get<double>();
    cfg.l_max = j.at("l_max").get<double>();
    cfg.s_max = j.value("s_max", cfg.s_max);
    cfg.shared = j.value("shared", false);
    MonotoneNet net(j.at("buses").get<std::size_t>(), cfg);
    const auto& beta = j.at("beta");
    const auto& zeta = j.at("zeta");
    if (beta.size() != net.n_groups() || zeta.size() != net.n_groups())
      throw ParseError("checkpoint group count does not match bus count");
    for (std::size_t g = 0; g < net.n_groups(); ++g) {
      const auto b = beta[g].get<std::vector<double>>();
      const auto z = zeta[g].get<std::vector<double>>();
      if (b.size() != cfg.hidden || z.size() != cfg.hidden + 1)
        throw ParseError("checkpoint array length does not match d");
      std::copy(b.begin(), b.end(), net.breakpoints(g).begin());
      std::copy(z.begin(), z.end(), net.raw_slopes(g).begin());
    }
    net.canonicalize();
    return net;
  } catch (const nlohmann::json::exception& err) {
    throw ParseError(std::string("checkpoint: ") + err.what());
  }
}

void save_checkpoint(const MonotoneNet& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << monotone_to_json(net).dump(2) << "\n";
}

MonotoneNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("checkpoint not found: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& err) {
    throw ParseError(std::string("checkpoint: ") + err.what());
  }
  return monotone_from_json(j);
}

}  // namespace freqctl
