#include "freqctl/training.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace freqctl {

void TrainConfig::validate() const {
  if (batch == 0 || epochs == 0 || horizon == 0) throw ValidationError("batch, epochs, horizon must be positive");
  if (epochs >= kHeldOutEpoch) throw ValidationError("too many epochs");
  if (!(h > 0.0)) throw ValidationError("dt must be positive");
  if (!(lr > 0.0)) throw ValidationError("learning rate must be positive");
  if (!(decay > 0.0 && decay < 1.0)) throw ValidationError("decay must lie in (0,1)");
  if (decay_every == 0) throw ValidationError("decay interval must be positive");
  if (!(p_range > 0.0)) throw ValidationError("disturbance range must be positive");
  metric.validate();
}

double TrainConfig::learning_rate(std::size_t epoch) const {
  return lr * std::pow(decay, static_cast<double>(epoch / decay_every));
}

Tape rollout_with_tape(const ClosedLoop& sys, const Vector& p, const TrainConfig& cfg, Trajectory* traj) {
  const std::size_t K = cfg.horizon;
  const double h = cfg.h;
  const auto n = static_cast<Eigen::Index>(sys.model.n_buses());

  Tape tape;
  tape.h = h;
  tape.p = p;
  tape.steps = K;
  tape.stride = std::max<std::size_t>(1, cfg.checkpoint_every);
  tape.checkpoints.reserve(K / tape.stride + 1);
  tape.argmax.assign(static_cast<std::size_t>(n), 0);

  if (traj) {
    traj->h = h;
    traj->p = p;
    traj->states.clear();
    traj->inputs.clear();
    traj->states.reserve(K + 1);
    traj->inputs.reserve(K + 1);
  }

  Vector rate = Vector::Zero(n), peak = Vector::Zero(n), cost = Vector::Zero(n);
  SystemState x = SystemState::zeros(sys.model);
  for (std::size_t tau = 0;; ++tau) {
    if (tau % tape.stride == 0) tape.checkpoints.push_back(x);
    const Vector u = sys.law.apply(x.s);
    if (traj) {
      traj->states.push_back(x);
      traj->inputs.push_back(u);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = std::abs(x.omega[i]);
      if (a > peak[i]) {
        peak[i] = a;
        tape.argmax[static_cast<std::size_t>(i)] = tau;
      }
    }
    if (tau == K) {
      tape.final_state = x;
      break;
    }
    rate += std::exp(cfg.metric.alpha * static_cast<double>(tau) * h) * h * x.omega.cwiseAbs2();
    // running mean of F over tau < K, identical to metrics::avg_cost
    const double w = 1.0 / static_cast<double>(tau + 1);
    for (Eigen::Index i = 0; i < n; ++i) cost[i] += (sys.cost.cost(static_cast<std::size_t>(i), u[i]) - cost[i]) * w;
    x = euler_step(sys, x, p, h, tau + 1);
  }
  if (!rate.allFinite()) throw MetricOverflow("rate metric overflowed; reduce alpha or the horizon");
  tape.loss.rate = rate.sum();
  tape.loss.nadir = peak.sum();
  tape.loss.cost = cost.sum();
  tape.J = tape.loss.total(cfg.metric);
  return tape;
}

std::vector<double> backprop(const ClosedLoop& sys, const Tape& tape, const TrainConfig& cfg) {
  if (sys.law.kind() != ControlLaw::Kind::monotone)
    throw std::invalid_argument("backprop needs a monotone control law");
  const auto& model = sys.model;
  const auto& net = sys.law.net();
  const auto& m = cfg.metric;
  const double h = tape.h;
  const std::size_t K = tape.steps;
  const double T = h * static_cast<double>(K);
  const auto n = static_cast<Eigen::Index>(model.n_buses());
  const Vector& M = model.inertia();
  const Vector& D = model.damping();
  const Vector& B = model.susceptance();
  const Vector& gl = sys.gains.gamma_lambda;
  const Vector& gp = sys.gains.gamma_phi;

  std::vector<double> grad(net.n_params(), 0.0);
  SystemState a = SystemState::zeros(model);

  auto add_nadir = [&](std::size_t tau, const SystemState& x) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (tape.argmax[static_cast<std::size_t>(i)] != tau) continue;
      const double w = x.omega[i];
      if (w != 0.0) a.omega[i] += m.rho_n * (w > 0.0 ? 1.0 : -1.0);
    }
  };

  add_nadir(K, tape.final_state);

  // rebuild one stride of states at a time, newest segment first
  std::vector<SystemState> seg;
  seg.reserve(tape.stride);
  Vector a_u(n), fp(n);
  for (std::size_t c = tape.checkpoints.size(); c-- > 0;) {
    const std::size_t start = c * tape.stride;
    if (start >= K) continue;
    const std::size_t stop = std::min(start + tape.stride, K);
    seg.clear();
    seg.push_back(tape.checkpoints[c]);
    for (std::size_t tau = start + 1; tau < stop; ++tau) seg.push_back(euler_step(sys, seg.back(), tape.p, h, tau));

    for (std::size_t tau = stop; tau-- > start;) {
      const SystemState& x = seg[tau - start];
      const Vector u = sys.law.apply(x.s);

      const Vector g_w = h * a.omega.cwiseQuotient(M);
      const Vector g_l = h * gl.cwiseProduct(a.lambda);
      const double w_rate = std::exp(m.alpha * static_cast<double>(tau) * h) * h;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto bus = static_cast<std::size_t>(i);
        a_u[i] = g_w[i] - h * sys.cost.hess(bus, u[i]) * a.s[i] + g_l[i] +
                 m.rho_c * (h / T) * sys.cost.grad(bus, u[i]);
        fp[i] = sys.law.fprime(bus, x.s[i]);
      }

      SystemState prev;
      prev.theta = a.theta - B.cwiseProduct(model.apply_incidence_transpose(g_w));
      prev.omega = a.omega + h * model.apply_incidence(a.theta) - D.cwiseProduct(g_w) - h * a.s +
                   m.rho_r * 2.0 * w_rate * x.omega;
      prev.s = a.s + fp.cwiseProduct(a_u);
      prev.lambda = a.lambda - h * a.s + model.apply_incidence(h * B.cwiseProduct(gp).cwiseProduct(a.phi));
      prev.phi = a.phi - B.cwiseProduct(model.apply_incidence_transpose(g_l));
      a = std::move(prev);

      for (Eigen::Index i = 0; i < n; ++i)
        net.accumulate_param_grad(static_cast<std::size_t>(i), x.s[i], a_u[i], grad);
      add_nadir(tau, x);
    }
  }
  return grad;
}

Adam::Adam(std::size_t n, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

Vector sample_disturbance(std::size_t n_buses, const TrainConfig& cfg, std::size_t epoch,
                          std::size_t index, std::size_t retry) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(retry)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> dist(-cfg.p_range, cfg.p_range);
  Vector p(static_cast<Eigen::Index>(n_buses));
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = dist(rng);
  return p;
}

std::vector<Vector> held_out_disturbances(std::size_t n_buses, const TrainConfig& cfg, std::size_t count) {
  std::vector<Vector> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(sample_disturbance(n_buses, cfg, kHeldOutEpoch, k, 0));
  return out;
}

namespace {

struct SampleResult {
  bool ok = false;
  double J = 0.0;
  std::size_t retries = 0;
  std::vector<double> grad;
};

SampleResult run_sample(const ClosedLoop& sys, const TrainConfig& cfg, std::size_t epoch, std::size_t index) {
  SampleResult r;
  for (std::size_t retry = 0; retry <= cfg.max_retries; ++retry) {
    const Vector p = sample_disturbance(sys.model.n_buses(), cfg, epoch, index, retry);
    try {
      const Tape tape = rollout_with_tape(sys, p, cfg);
      r.grad = backprop(sys, tape, cfg);
      r.J = tape.J;
      r.ok = true;
      r.retries = retry;
      return r;
    } catch (const IntegrationBlowup&) {
    } catch (const MetricOverflow&) {
    }
  }
  r.retries = cfg.max_retries;
  return r;
}

// Fixed-order reduction so serial and parallel runs agree bit for bit.
BatchResult reduce(const std::vector<SampleResult>& samples, std::size_t n_params) {
  BatchResult out;
  out.grad.assign(n_params, 0.0);
  for (const auto& s : samples) {
    out.resampled += s.retries;
    if (!s.ok) {
      ++out.dropped;
      continue;
    }
    ++out.kept;
    out.loss += s.J;
    for (std::size_t k = 0; k < n_params; ++k) out.grad[k] += s.grad[k];
  }
  if (out.kept == 0) return out;
  const double inv = 1.0 / static_cast<double>(out.kept);
  out.loss *= inv;
  for (auto& g : out.grad) g *= inv;
  return out;
}

}  // namespace

BatchResult batch_gradient_serial(const ClosedLoop& sys, const TrainConfig& cfg, std::size_t epoch) {
  std::vector<SampleResult> samples(cfg.batch);
  for (std::size_t b = 0; b < cfg.batch; ++b) samples[b] = run_sample(sys, cfg, epoch, b);
  return reduce(samples, sys.law.net().n_params());
}

BatchResult batch_gradient_parallel(const ClosedLoop& sys, const TrainConfig& cfg, std::size_t epoch) {
  std::vector<SampleResult> samples(cfg.batch);
  const auto count = static_cast<long long>(cfg.batch);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long b = 0; b < count; ++b)
    samples[static_cast<std::size_t>(b)] = run_sample(sys, cfg, epoch, static_cast<std::size_t>(b));
  return reduce(samples, sys.law.net().n_params());
}

TrainResult train(const NetworkModel& model, const ControllerGains& gains, const CostModel& cost,
                  MonotoneNet init, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  gains.validate(model);
  if (init.n_buses() != model.n_buses()) throw ValidationError("monotone net bus count does not match network");
  init.canonicalize();
  ControlLaw law = ControlLaw::monotone(std::move(init));
  const ClosedLoop sys{model, law, gains, cost, PMode::known};
  Adam opt(law.net().n_params(), cfg.beta1, cfg.beta2, cfg.adam_eps);

  std::vector<EpochStats> history;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    BatchResult batch = cfg.parallel ? batch_gradient_parallel(sys, cfg, epoch)
                                     : batch_gradient_serial(sys, cfg, epoch);
    if (batch.kept == 0) {
      std::ostringstream msg;
      msg << "every rollout in epoch " << epoch << " diverged after " << cfg.max_retries << " retries";
      throw TrainingError(msg.str());
    }
    double norm = 0.0;
    for (double g : batch.grad) norm += g * g;
    norm = std::sqrt(norm);
    if (cfg.clip > 0.0 && norm > cfg.clip)
      for (auto& g : batch.grad) g *= cfg.clip / norm;

    EpochStats st{epoch, batch.loss, cfg.learning_rate(epoch), norm, batch.resampled};
    opt.step(law.net().params(), batch.grad, st.lr);
    law.net().canonicalize();
    history.push_back(st);
    if (on_epoch) on_epoch(st);
  }
  return {law.net(), std::move(history)};
}

double evaluate_loss(const ClosedLoop& sys, const std::vector<Vector>& disturbances, const TrainConfig& cfg) {
  double total = 0.0;
  for (const auto& p : disturbances) total += rollout_with_tape(sys, p, cfg).J;
  return total / static_cast<double>(disturbances.size());
}

GradientCheck check_gradients(const ClosedLoop& sys, const Vector& p, const TrainConfig& cfg, double eps,
                              double floor) {
  GradientCheck out;
  out.analytic = backprop(sys, rollout_with_tape(sys, p, cfg), cfg);

  ControlLaw probe = sys.law;
  const ClosedLoop psys{sys.model, probe, sys.gains, sys.cost, sys.p_mode};
  auto& theta = probe.net().params();
  out.numeric.resize(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double saved = theta[k];
    theta[k] = saved + eps;
    const double up = rollout_with_tape(psys, p, cfg).J;
    theta[k] = saved - eps;
    const double down = rollout_with_tape(psys, p, cfg).J;
    theta[k] = saved;
    out.numeric[k] = (up - down) / (2.0 * eps);
    const double a = out.analytic[k], num = out.numeric[k];
    const double rel = std::abs(a - num) / std::max({std::abs(a), std::abs(num), floor});
    if (rel > out.max_rel_error) {
      out.max_rel_error = rel;
      out.worst_index = k;
    }
  }
  return out;
}

}  // namespace freqctl
