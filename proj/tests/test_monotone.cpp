#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "freqctl/monotone.hpp"
#include "freqctl/network.hpp"

using namespace freqctl;

namespace {

MonotoneNet with_slopes(std::vector<double> beta, std::vector<double> slopes) {
  MonotoneConfig cfg;
  cfg.hidden = beta.size();
  MonotoneNet net(1, cfg);
  std::copy(beta.begin(), beta.end(), net.breakpoints(0).begin());
  for (std::size_t k = 0; k < slopes.size(); ++k) {
    const double q = (slopes[k] - cfg.eps_slope) / (cfg.l_max - cfg.eps_slope);
    net.raw_slopes(0)[k] = std::log(q / (1.0 - q));
  }
  return net;
}

double simpson(const MonotoneNet& net, double s, int n = 20000) {
  const double h = s / n;
  double acc = net.forward(0, 0.0) + net.forward(0, s);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * net.forward(0, i * h);
  return acc * h / 3.0;
}

}  // namespace

TEST_SUITE("monotone") {
  TEST_CASE("f(0) = 0 for random parameters") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z(0.0, 2.0);
    MonotoneConfig cfg;
    cfg.hidden = 6;
    MonotoneNet net(3, cfg);
    for (auto& v : net.params()) v = z(rng);
    net.canonicalize();
    for (std::size_t b = 0; b < 3; ++b) CHECK(net.forward(b, 0.0) == 0.0);
  }

  TEST_CASE("worked examples") {
    CHECK(with_slopes({}, {1.5}).forward(0, 2.0) == doctest::Approx(3.0).epsilon(1e-12));
    const MonotoneNet one = with_slopes({1.0}, {1.0, 3.0});
    CHECK(one.forward(0, 2.0) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(one.forward(0, -1.0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(with_slopes({-1.0, 0.5, 2.0}, {2.0, 2.0, 2.0, 2.0}).forward(0, 0.3) ==
          doctest::Approx(0.6).epsilon(1e-12));
  }

  TEST_CASE("slopes stay inside [eps, L] for extreme raw values") {
    const MonotoneNet net = with_slopes({0.0}, {1.0, 1.0});
    MonotoneNet copy = net;
    copy.raw_slopes(0)[0] = -800.0;
    copy.raw_slopes(0)[1] = 800.0;
    CHECK(copy.slope(0, 0) >= copy.config().eps_slope);
    CHECK(copy.slope(0, 1) <= copy.config().l_max);
    CHECK(std::isfinite(copy.forward(0, 3.0)));
  }

  TEST_CASE("parameter gradient matches central differences") {
    MonotoneConfig cfg;
    cfg.hidden = 5;
    MonotoneNet net = MonotoneNet::identity_init(2, cfg, 3);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> j(-0.8, 0.8);
    for (auto& v : net.params()) v += j(rng);
    net.canonicalize();
    for (double s : {-4.1, -0.7, 0.9, 3.3}) {
      std::vector<double> g(net.n_params(), 0.0);
      net.accumulate_param_grad(1, s, 1.0, g);
      for (std::size_t k = 0; k < net.n_params(); ++k) {
        MonotoneNet a = net, b = net;
        a.params()[k] += 1e-6;
        b.params()[k] -= 1e-6;
        const double fd = (a.forward(1, s) - b.forward(1, s)) / 2e-6;
        CHECK(g[k] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
      }
    }
  }

  TEST_CASE("gradient only touches the bus's own group") {
    MonotoneConfig cfg;
    cfg.hidden = 4;
    const MonotoneNet net = MonotoneNet::identity_init(3, cfg, 1);
    std::vector<double> g(net.n_params(), 0.0);
    net.accumulate_param_grad(1, 2.0, 1.0, g);
    for (std::size_t k = 0; k < net.n_params(); ++k) {
      const bool own = k >= net.group_size() && k < 2 * net.group_size();
      if (!own) CHECK(g[k] == 0.0);
    }
  }

  TEST_CASE("input gradient is the slope of the active segment") {
    const MonotoneNet net = with_slopes({-1.0, 1.0}, {0.5, 2.0, 4.0});
    CHECK(net.input_grad(0, -3.0) == doctest::Approx(0.5));
    CHECK(net.input_grad(0, 0.0) == doctest::Approx(2.0));
    CHECK(net.input_grad(0, 1.0) == doctest::Approx(4.0));
  }

  TEST_CASE("integral agrees with quadrature") {
    const MonotoneNet net = with_slopes({-2.0, -0.5, 0.7, 1.9}, {0.3, 1.7, 0.9, 2.5, 0.2});
    for (double s : {-3.0, -1.1, -0.2, 0.4, 1.0, 2.6})
      CHECK(net.integral(0, s) == doctest::Approx(simpson(net, s)).epsilon(1e-8));
  }

  TEST_CASE("identity warm start is within 1% of f(s) = s") {
    MonotoneConfig cfg;
    const MonotoneNet net = MonotoneNet::identity_init(4, cfg, 12);
    for (std::size_t b = 0; b < 4; ++b)
      for (double s = -6.0; s <= 6.0; s += 0.37) CHECK(std::abs(net.forward(b, s) - s) <= 0.01 * std::abs(s) + 1e-15);
  }

  TEST_CASE("shared parameters serve every bus") {
    MonotoneConfig cfg;
    cfg.shared = true;
    const MonotoneNet net = MonotoneNet::identity_init(5, cfg, 0);
    CHECK(net.n_groups() == 1);
    CHECK(net.forward(0, 1.3) == net.forward(4, 1.3));
  }

  TEST_CASE("checkpoint round trip is exact") {
    MonotoneConfig cfg;
    cfg.hidden = 3;
    MonotoneNet net = MonotoneNet::identity_init(2, cfg, 5);
    net.params()[1] = 0.123456789012345;
    net.canonicalize();
    const auto path = std::filesystem::temp_directory_path() / "freqctl_monotone_roundtrip.json";
    save_checkpoint(net, path);
    const MonotoneNet back = load_checkpoint(path);
    std::filesystem::remove(path);
    CHECK(back.params() == net.params());
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.json"), ParseError);
    auto j = monotone_to_json(net);
    j["format_version"] = 99;
    CHECK_THROWS_AS(monotone_from_json(j), ParseError);
  }

  TEST_CASE("invalid configurations") {
    MonotoneConfig cfg;
    cfg.eps_slope = 0.0;
    CHECK_THROWS_AS(MonotoneNet(1, cfg), ValidationError);
    cfg = {};
    cfg.l_max = cfg.eps_slope;
    CHECK_THROWS_AS(MonotoneNet(1, cfg), ValidationError);
    CHECK_THROWS_AS(MonotoneNet(0, MonotoneConfig{}), ValidationError);
  }
}
