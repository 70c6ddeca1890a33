#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "freqctl/controller.hpp"
#include "freqctl/metrics.hpp"
#include "freqctl/training.hpp"

namespace freqctl {

struct ControllerSpec {
  enum class Type { linear, monotone_net };
  Type type = Type::linear;
  double gain = 1.0;
  std::optional<std::filesystem::path> checkpoint;  // monotone_net only
  MonotoneConfig net;
  std::uint64_t init_seed = 0;
  PMode p_mode = PMode::known;
};

struct Scenario {
  std::string name;
  NetworkModel model;
  CostModel cost;
  Vector p;
  ControllerGains gains;
  ControllerSpec controller;
  double horizon = 60.0;
  double dt = 0.01;
  MetricConfig metric;
  TrainConfig train;  // used by `train`; horizon/dt mirror the fields above
};

/// Reads a scenario file. Relative paths inside it resolve against its
/// directory; "ieee39" and "toy3" name the built-in networks.
Scenario load_scenario(const std::filesystem::path& path);
Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Builds the law the scenario asks for. Monotone nets come from the
/// checkpoint when one is given, otherwise from the identity warm start.
ControlLaw make_law(const Scenario& sc);

}  // namespace freqctl
