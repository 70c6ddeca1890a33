#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "freqctl/instances.hpp"
#include "freqctl/oracle.hpp"
#include "freqctl/scenario.hpp"

namespace fs = std::filesystem;
using namespace freqctl;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kConfig = 2;

// Bus-steps per training run at which a warning is printed; the 39-bus,
// batch 64, 50 epoch, 6000 step configuration is about 7.5e8.
constexpr double kLargeRunWork = 1e8;

fs::path in_dir(const fs::path& dir, const std::string& name) {
  if (!dir.empty()) fs::create_directories(dir);
  return dir / name;
}

Integrator parse_integrator(const std::string& s) {
  if (s == "euler") return Integrator::euler;
  if (s == "rk4") return Integrator::rk4;
  throw ValidationError("unknown integrator \"" + s + "\"");
}

struct SimulateArgs {
  std::string scenario;
  std::string out_dir = ".";
  std::string checkpoint;
  std::string integrator = "euler";
  std::optional<double> horizon;
};

int cmd_simulate(const SimulateArgs& a) {
  Scenario sc = load_scenario(a.scenario);
  if (!a.checkpoint.empty()) {
    sc.controller.type = ControllerSpec::Type::monotone_net;
    sc.controller.checkpoint = a.checkpoint;
  }
  if (a.horizon) sc.horizon = *a.horizon;
  const ControlLaw law = make_law(sc);
  const ClosedLoop sys{sc.model, law, sc.gains, sc.cost, sc.controller.p_mode};
  const Trajectory traj =
      simulate(sys, SystemState::zeros(sc.model), sc.p, sc.horizon, sc.dt, parse_integrator(a.integrator));
  const TransientReport rep = transient_report(traj, law, sc.cost, sc.metric);

  const fs::path dir(a.out_dir);
  write_trajectory_csv(traj, in_dir(dir, "trajectory.csv"));
  write_metrics_csv(rep, in_dir(dir, "metrics.csv"));

  const SystemState& last = traj.states.back();
  std::cout << std::setprecision(6) << "final |omega|_inf " << last.omega.cwiseAbs().maxCoeff() << "\n"
            << "final sum u       " << traj.inputs.back().sum() << "\n"
            << "settling time     " << rep.settling << "\n"
            << "nadir             " << rep.nadir << "\n"
            << "marginal spread   " << rep.spread << "\n";
  return kOk;
}

struct TrainArgs {
  std::string scenario;
  std::string network = "toy3";
  std::uint64_t cost_seed = 0;
  std::optional<std::size_t> batch, epochs, horizon, hidden, decay_every, checkpoint_every;
  std::optional<double> dt, alpha, rho_r, rho_n, rho_c, lr, decay, p_range;
  std::optional<std::uint64_t> seed;
  std::string init;
  std::string checkpoint_out = "checkpoint.json";
  std::string loss_csv = "loss.csv";
  bool serial = false;
  bool dry_run = false;
};

Scenario scenario_for_training(const TrainArgs& a) {
  if (!a.scenario.empty()) return load_scenario(a.scenario);
  nlohmann::json j;
  j["network"] = a.network;
  j["cost"] = {{"type", "quartic"}, {"seed", a.cost_seed}};
  j["controller"] = {{"type", "monotone_net"}};
  return scenario_from_json(j, fs::current_path());
}

int cmd_train(const TrainArgs& a) {
  Scenario sc = scenario_for_training(a);
  TrainConfig& t = sc.train;
  if (a.batch) t.batch = *a.batch;
  if (a.epochs) t.epochs = *a.epochs;
  if (a.horizon) t.horizon = *a.horizon;
  if (a.dt) t.h = *a.dt;
  if (a.alpha) t.metric.alpha = *a.alpha;
  if (a.rho_r) t.metric.rho_r = *a.rho_r;
  if (a.rho_n) t.metric.rho_n = *a.rho_n;
  if (a.rho_c) t.metric.rho_c = *a.rho_c;
  if (a.lr) t.lr = *a.lr;
  if (a.decay) t.decay = *a.decay;
  if (a.decay_every) t.decay_every = *a.decay_every;
  if (a.p_range) t.p_range = *a.p_range;
  if (a.seed) t.seed = *a.seed;
  if (a.checkpoint_every) t.checkpoint_every = *a.checkpoint_every;
  if (a.hidden) sc.controller.net.hidden = *a.hidden;
  t.parallel = !a.serial;
  t.validate();

  const double work = static_cast<double>(sc.model.n_buses()) * static_cast<double>(t.batch) *
                      static_cast<double>(t.epochs) * static_cast<double>(t.horizon);
  if (work >= kLargeRunWork)
    std::cerr << "warning: large training run, " << work << " bus-steps (roughly " << std::lround(work * 3e-7 / 60.0)
              << " min on one core)\n";
  if (a.dry_run) {
    std::cout << "configuration ok: " << sc.model.n_buses() << " buses, batch " << t.batch << ", " << t.epochs
              << " epochs, " << t.horizon << " steps\n";
    return kOk;
  }

  MonotoneNet init = a.init.empty()
                         ? MonotoneNet::identity_init(sc.model.n_buses(), sc.controller.net, sc.controller.init_seed)
                         : load_checkpoint(a.init);
  if (init.n_buses() != sc.model.n_buses()) throw ValidationError("initial checkpoint bus count does not match network");

  const fs::path loss_path(a.loss_csv);
  std::ofstream csv(in_dir(loss_path.parent_path(), loss_path.filename().string()));
  if (!csv) throw ValidationError("cannot write " + a.loss_csv);
  csv << "epoch,J,lr,grad_norm,resampled\n" << std::setprecision(17);
  auto log = [&](const EpochStats& st) {
    csv << st.epoch << "," << st.loss << "," << st.lr << "," << st.grad_norm << "," << st.resampled << "\n";
    std::cout << "epoch " << st.epoch << "  J " << std::setprecision(6) << st.loss << "  lr " << st.lr << "\n";
  };
  const TrainResult res = train(sc.model, sc.gains, sc.cost, std::move(init), t, log);
  save_checkpoint(res.net, a.checkpoint_out);
  std::cout << "wrote " << a.checkpoint_out << " and " << a.loss_csv << "\n";
  return kOk;
}

struct CompareArgs {
  std::string scenario;
  std::string checkpoint;
  std::string out = "compare.csv";
  std::optional<double> horizon;
  std::size_t held_out = 0;
};

int cmd_compare(const CompareArgs& a) {
  Scenario sc = load_scenario(a.scenario);
  if (a.horizon) sc.horizon = *a.horizon;
  fs::path cp = a.checkpoint;
  if (cp.empty()) {
    if (!sc.controller.checkpoint) throw ValidationError("compare needs --checkpoint or a scenario checkpoint");
    cp = *sc.controller.checkpoint;
  }
  MonotoneNet net = load_checkpoint(cp);
  if (net.n_buses() != sc.model.n_buses())
    throw ValidationError("checkpoint has " + std::to_string(net.n_buses()) + " buses, network has " +
                          std::to_string(sc.model.n_buses()));
  const ControlLaw learned = ControlLaw::monotone(std::move(net));
  const ControlLaw linear =
      ControlLaw::linear(Vector::Constant(static_cast<Eigen::Index>(sc.model.n_buses()), sc.controller.gain));

  std::vector<Vector> cases{sc.p};
  if (a.held_out > 0) cases = held_out_disturbances(sc.model.n_buses(), sc.train, a.held_out);

  std::ofstream csv(a.out);
  if (!csv) throw ValidationError("cannot write " + a.out);
  csv << "case,controller,settling_s,nadir,avg_cost,envelope_rate,spread\n" << std::setprecision(10);
  for (std::size_t c = 0; c < cases.size(); ++c) {
    for (const auto* law : {&learned, &linear}) {
      const ClosedLoop sys{sc.model, *law, sc.gains, sc.cost, sc.controller.p_mode};
      const Trajectory traj = simulate(sys, SystemState::zeros(sc.model), cases[c], sc.horizon, sc.dt);
      const TransientReport rep = transient_report(traj, *law, sc.cost, sc.metric);
      const char* name = law == &learned ? "learned" : "linear";
      csv << c << "," << name << "," << rep.settling << "," << rep.nadir << "," << rep.cost_total << ",";
      if (rep.envelope)
        csv << rep.envelope->rate;
      else
        csv << "nan";
      csv << "," << rep.spread << "\n";
    }
  }
  std::cout << "wrote " << a.out << "\n";
  return kOk;
}

struct OracleArgs {
  std::string scenario;
  std::size_t restarts = 0;
};

int cmd_oracle(const OracleArgs& a) {
  const Scenario sc = load_scenario(a.scenario);
  const SteadyStateSolution sol = solve_steady_state(sc.model, sc.cost, sc.p);
  nlohmann::json j = solution_to_json(sol);
  if (a.restarts > 0) {
    const UniquenessReport rep = verify_uniqueness(sc.model, sc.cost, sc.p, a.restarts);
    j["uniqueness"] = {{"restarts", rep.restarts},
                       {"failed", rep.failed},
                       {"u_dispersion", rep.u_dispersion},
                       {"theta_dispersion", rep.theta_dispersion},
                       {"lambda_spread", rep.lambda_spread}};
  }
  std::cout << j.dump(2) << "\n";
  return kOk;
}

struct GradArgs {
  std::size_t buses = 2;
  std::size_t hidden = 2;
  std::size_t steps = 50;
  double dt = 0.05;
  std::uint64_t seed = 3;
  std::size_t checkpoint_every = 0;
  double tol = 1e-4;
};

int cmd_check_gradients(const GradArgs& a) {
  const Instance inst = gradient_check_instance(a.buses, a.hidden, a.seed);
  const ClosedLoop sys = inst.system();
  TrainConfig cfg;
  cfg.horizon = a.steps;
  cfg.h = a.dt;
  cfg.checkpoint_every = a.checkpoint_every;
  const GradientCheck gc = check_gradients(sys, inst.p, cfg);
  std::cout << std::setprecision(6) << "params " << gc.analytic.size() << "\n"
            << "max_rel_error " << gc.max_rel_error << " (param " << gc.worst_index << ")\n";
  return gc.max_rel_error <= a.tol ? kOk : kRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned secondary frequency control: simulate, train, compare"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run one scenario; write trajectory.csv and metrics.csv");
  s->add_option("scenario", sim.scenario, "Scenario JSON")->required();
  s->add_option("-o,--out-dir", sim.out_dir, "Output directory");
  s->add_option("--checkpoint", sim.checkpoint, "Use this monotone net instead of the scenario controller");
  s->add_option("--integrator", sim.integrator, "euler or rk4");
  s->add_option("--horizon", sim.horizon, "Override the horizon (s)");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a monotone controller; write checkpoint and loss CSV");
  t->add_option("scenario", tr.scenario, "Scenario JSON (optional)");
  t->add_option("--network", tr.network, "ieee39, toy3 or a network file, when no scenario is given");
  t->add_option("--cost-seed", tr.cost_seed, "Seed of the random quartic costs, when no scenario is given");
  t->add_option("--batch", tr.batch);
  t->add_option("--epochs", tr.epochs);
  t->add_option("--horizon", tr.horizon, "Euler steps per rollout");
  t->add_option("--dt", tr.dt);
  t->add_option("--hidden", tr.hidden, "Breakpoints per bus");
  t->add_option("--alpha", tr.alpha);
  t->add_option("--rho-r", tr.rho_r);
  t->add_option("--rho-n", tr.rho_n);
  t->add_option("--rho-c", tr.rho_c);
  t->add_option("--lr", tr.lr);
  t->add_option("--decay", tr.decay);
  t->add_option("--decay-every", tr.decay_every);
  t->add_option("--p-range", tr.p_range);
  t->add_option("--seed", tr.seed);
  t->add_option("--tape-stride", tr.checkpoint_every, "Store every k-th state on the tape (0 = all)");
  t->add_option("--init", tr.init, "Start from this checkpoint");
  t->add_option("--checkpoint-out", tr.checkpoint_out);
  t->add_option("--loss-csv", tr.loss_csv);
  t->add_flag("--serial", tr.serial, "Disable the OpenMP batch");
  t->add_flag("--dry-run", tr.dry_run, "Validate the configuration and exit");

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "Learned vs linear on the same disturbances");
  c->add_option("scenario", cmp.scenario, "Scenario JSON")->required();
  c->add_option("--checkpoint", cmp.checkpoint, "Trained monotone net");
  c->add_option("-o,--out", cmp.out, "Output CSV");
  c->add_option("--horizon", cmp.horizon, "Override the horizon (s)");
  c->add_option("--held-out", cmp.held_out, "Use this many held-out training-distribution draws instead of p");

  OracleArgs orc;
  auto* o = app.add_subcommand("oracle", "Print the optimal steady state as JSON");
  o->add_option("scenario", orc.scenario, "Scenario JSON")->required();
  o->add_option("--restarts", orc.restarts, "Also run the multi-start uniqueness check");

  GradArgs ga;
  auto* g = app.add_subcommand("check-gradients", "Backprop vs central differences");
  g->add_option("--buses", ga.buses);
  g->add_option("--hidden", ga.hidden);
  g->add_option("--steps", ga.steps);
  g->add_option("--dt", ga.dt);
  g->add_option("--seed", ga.seed);
  g->add_option("--tape-stride", ga.checkpoint_every);
  g->add_option("--tol", ga.tol);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*s) return cmd_simulate(sim);
    if (*t) return cmd_train(tr);
    if (*c) return cmd_compare(cmp);
    if (*o) return cmd_oracle(orc);
    if (*g) return cmd_check_gradients(ga);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
