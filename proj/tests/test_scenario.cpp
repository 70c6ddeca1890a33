#include <doctest.h>

#include "freqctl/scenario.hpp"

using namespace freqctl;
using nlohmann::json;

namespace {

Scenario parse(const char* text) { return scenario_from_json(json::parse(text), FREQCTL_SCENARIO_DIR); }

}  // namespace

TEST_SUITE("scenario") {
  TEST_CASE("bundled scenarios load") {
    const Scenario toy = load_scenario(FREQCTL_SCENARIO_DIR "/toy3.json");
    CHECK(toy.model.n_buses() == 3);
    CHECK(toy.controller.type == ControllerSpec::Type::monotone_net);
    CHECK(toy.train.batch == 16);
    const Scenario ieee = load_scenario(FREQCTL_SCENARIO_DIR "/ieee39_step.json");
    CHECK(ieee.model.n_buses() == 39);
    CHECK(ieee.gains.gamma_phi == ieee.model.susceptance().cwiseAbs2().cwiseInverse());
    CHECK(make_law(ieee).kind() == ControlLaw::Kind::linear);
    const Scenario learned = load_scenario(FREQCTL_SCENARIO_DIR "/ieee39_learned.json");
    CHECK(make_law(learned).net().n_buses() == 39);
  }

  TEST_CASE("disturbance forms") {
    const Scenario a = parse(R"({"network": "toy3", "disturbance": {"buses": {"2": 1.5}}})");
    CHECK(a.p == (Vector(3) << 0.0, 1.5, 0.0).finished());
    const Scenario b = parse(R"({"network": "toy3", "disturbance": {"p": 0.5}})");
    CHECK(b.p == Vector::Constant(3, 0.5));
    const Scenario c = parse(R"({"network": "toy3", "disturbance": {"random": {"seed": 3, "range": 1}}})");
    CHECK(c.p.cwiseAbs().maxCoeff() <= 1.0);
  }

  TEST_CASE("defaults") {
    const Scenario s = parse(R"({"network": "toy3"})");
    CHECK(s.horizon == 60.0);
    CHECK(s.dt == 0.01);
    CHECK(s.p == Vector::Zero(3));
    CHECK(s.train.horizon == 6000);
    CHECK(s.controller.type == ControllerSpec::Type::linear);
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(parse(R"({"cost": {}})"), ParseError);
    CHECK_THROWS_AS(parse(R"({"network": "missing_net.json"})"), ParseError);
    CHECK_THROWS_AS(parse(R"({"network": "toy3", "controller": {"type": "pid"}})"), ParseError);
    CHECK_THROWS_AS(parse(R"({"network": "toy3", "disturbance": {"buses": {"9": 1}}})"), ValidationError);
    CHECK_THROWS_AS(parse(R"({"network": "toy3", "disturbance": {"p": [1, 2]}})"), ParseError);
    CHECK_THROWS_AS(parse(R"({"network": "toy3", "dt": 0})"), ValidationError);
    CHECK_THROWS_AS(parse(R"({"network": "toy3", "metrics": {"alpha": -1}})"), ValidationError);
    CHECK_THROWS_AS(parse(R"({"network": "toy3", "controller": {"gamma_lambda": [1, 0, 1]}})"), ValidationError);
    CHECK_THROWS_AS(parse(R"({"network": "toy3", "horizon": "long"})"), ParseError);
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), ParseError);
  }

  TEST_CASE("checkpoint with the wrong bus count is rejected") {
    const Scenario s = parse(
        R"({"network": "toy3", "controller": {"type": "monotone_net", "checkpoint": "checkpoints/ieee39_desk.json"}})");
    CHECK_THROWS_AS(make_law(s), ValidationError);
  }
}
