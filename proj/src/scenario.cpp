#include "freqctl/scenario.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace freqctl {

namespace {

using nlohmann::json;

NetworkModel network_ref(const json& j, const std::filesystem::path& base) {
  if (!j.is_string()) throw ParseError("\"network\" must be a string");
  const auto name = j.get<std::string>();
  if (name == "ieee39") return ieee39();
  if (name == "toy3") return toy3();
  std::filesystem::path path(name);
  if (path.is_relative()) path = base / path;
  return load_network(path);
}

// Scalar broadcasts; arrays must match `n`.
Vector per_item(const json& j, std::size_t n, const char* what) {
  if (j.is_number()) return Vector::Constant(static_cast<Eigen::Index>(n), j.get<double>());
  if (!j.is_array() || j.size() != n) {
    std::ostringstream msg;
    msg << "\"" << what << "\" must be a number or an array of " << n;
    throw ParseError(msg.str());
  }
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(n));
}

Vector disturbance(const json& j, std::size_t n) {
  Vector p = Vector::Zero(static_cast<Eigen::Index>(n));
  if (j.contains("p")) return per_item(j.at("p"), n, "p");
  if (j.contains("buses")) {
    for (const auto& [key, val] : j.at("buses").items()) {
      std::size_t bus = 0;
      try {
        bus = std::stoul(key);
      } catch (const std::exception&) {
        throw ParseError("disturbance bus \"" + key + "\" is not a number");
      }
      if (bus < 1 || bus > n) throw ValidationError("disturbance bus " + key + " out of range");
      p[static_cast<Eigen::Index>(bus - 1)] = val.get<double>();
    }
    return p;
  }
  if (j.contains("random")) {
    const auto& r = j.at("random");
    const double range = r.value("range", 5.0);
    std::mt19937_64 rng(r.value("seed", std::uint64_t{0}));
    std::uniform_real_distribution<double> dist(-range, range);
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = dist(rng);
    return p;
  }
  throw ParseError("disturbance needs \"p\", \"buses\" or \"random\"");
}

PMode parse_p_mode(const std::string& s) {
  if (s == "known") return PMode::known;
  if (s == "estimated" || s == "estimated_theta") return PMode::estimated_theta;
  if (s == "estimated_phi") return PMode::estimated_phi;
  throw ParseError("unknown p_mode \"" + s + "\"");
}

}  // namespace

Scenario scenario_from_json(const json& j, const std::filesystem::path& base) {
  try {
    if (!j.is_object()) throw ParseError("scenario must be a JSON object");
    if (!j.contains("network")) throw ParseError("scenario is missing \"network\"");
    NetworkModel model = network_ref(j.at("network"), base);
    const std::size_t n = model.n_buses();
    CostModel cost = j.contains("cost") ? cost_from_json(j.at("cost"), n)
                                        : CostModel::random_quartic(n, 0);
    Vector p = j.contains("disturbance") ? disturbance(j.at("disturbance"), n)
                                         : Vector::Zero(static_cast<Eigen::Index>(n));
    validate_disturbance(model, Disturbance{p});

    ControllerGains gains = ControllerGains::identity(model);
    ControllerSpec ctl;
    if (j.contains("controller")) {
      const auto& c = j.at("controller");
      const auto type = c.value("type", std::string("linear"));
      if (type == "linear")
        ctl.type = ControllerSpec::Type::linear;
      else if (type == "monotone_net")
        ctl.type = ControllerSpec::Type::monotone_net;
      else
        throw ParseError("unknown controller type \"" + type + "\"");
      ctl.gain = c.value("gain", 1.0);
      if (c.contains("gamma_lambda")) gains.gamma_lambda = per_item(c.at("gamma_lambda"), n, "gamma_lambda");
      if (c.contains("gamma_phi")) {
        const auto& g = c.at("gamma_phi");
        if (g.is_string()) {
          if (g.get<std::string>() != "inverse_susceptance_squared")
            throw ParseError("unknown gamma_phi rule \"" + g.get<std::string>() + "\"");
          gains.gamma_phi = model.susceptance().cwiseAbs2().cwiseInverse();
        } else {
          gains.gamma_phi = per_item(g, model.n_edges(), "gamma_phi");
        }
      }
      ctl.p_mode = parse_p_mode(c.value("p_mode", std::string("known")));
      if (c.contains("checkpoint")) {
        std::filesystem::path cp(c.at("checkpoint").get<std::string>());
        ctl.checkpoint = cp.is_relative() ? base / cp : cp;
      }
      ctl.net.hidden = c.value("hidden", ctl.net.hidden);
      ctl.net.eps_slope = c.value("eps_slope", ctl.net.eps_slope);
      ctl.net.l_max = c.value("l_max", ctl.net.l_max);
      ctl.net.s_max = c.value("s_max", ctl.net.s_max);
      ctl.net.shared = c.value("shared", ctl.net.shared);
      ctl.init_seed = c.value("init_seed", ctl.init_seed);
    }
    gains.validate(model);

    Scenario sc{j.value("name", std::string("scenario")), std::move(model), std::move(cost), std::move(p),
                std::move(gains), ctl, 60.0, 0.01, MetricConfig{}, TrainConfig{}};
    sc.horizon = j.value("horizon", sc.horizon);
    sc.dt = j.value("dt", sc.dt);
    if (!(sc.dt > 0.0) || sc.horizon < sc.dt) throw ValidationError("need dt > 0 and horizon >= dt");
    if (j.contains("metrics")) {
      const auto& m = j.at("metrics");
      sc.metric.alpha = m.value("alpha", sc.metric.alpha);
      sc.metric.rho_r = m.value("rho_r", sc.metric.rho_r);
      sc.metric.rho_n = m.value("rho_n", sc.metric.rho_n);
      sc.metric.rho_c = m.value("rho_c", sc.metric.rho_c);
      sc.metric.delta_band = m.value("delta_band", sc.metric.delta_band);
    }
    sc.metric.validate();

    auto& t = sc.train;
    t.metric = sc.metric;
    t.h = sc.dt;
    t.horizon = step_count(sc.horizon, sc.dt);
    if (j.contains("train")) {
      const auto& tj = j.at("train");
      t.batch = tj.value("batch", t.batch);
      t.epochs = tj.value("epochs", t.epochs);
      t.horizon = tj.value("horizon_steps", t.horizon);
      t.lr = tj.value("lr", t.lr);
      t.decay = tj.value("decay", t.decay);
      t.decay_every = tj.value("decay_every", t.decay_every);
      t.p_range = tj.value("p_range", t.p_range);
      t.seed = tj.value("seed", t.seed);
      t.clip = tj.value("clip", t.clip);
      t.checkpoint_every = tj.value("checkpoint_every", t.checkpoint_every);
    }
    return sc;
  } catch (const json::exception& err) {
    throw ParseError(std::string("scenario: ") + err.what());
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("scenario file not found: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& err) {
    throw ParseError(std::string("scenario: ") + err.what());
  }
  return scenario_from_json(j, path.parent_path());
}

ControlLaw make_law(const Scenario& sc) {
  const std::size_t n = sc.model.n_buses();
  if (sc.controller.type == ControllerSpec::Type::linear)
    return ControlLaw::linear(Vector::Constant(static_cast<Eigen::Index>(n), sc.controller.gain));
  if (sc.controller.checkpoint) {
    MonotoneNet net = load_checkpoint(*sc.controller.checkpoint);
    if (net.n_buses() != n) throw ValidationError("checkpoint bus count does not match network");
    return ControlLaw::monotone(std::move(net));
  }
  return ControlLaw::monotone(MonotoneNet::identity_init(n, sc.controller.net, sc.controller.init_seed));
}

}  // namespace freqctl
