#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "freqctl/dynamics.hpp"
#include "freqctl/metrics.hpp"

namespace freqctl {

struct TrainConfig {
  std::size_t batch = 64;
  std::size_t epochs = 50;
  std::size_t horizon = 6000;  // Euler steps per rollout
  double h = 0.01;
  MetricConfig metric;
  double lr = 0.4;
  double decay = 0.5;
  std::size_t decay_every = 3;  // epochs
  double p_range = 5.0;         // p ~ U(-p_range, p_range)^n
  std::uint64_t seed = 0;
  double clip = 10.0;           // global-norm clip; <= 0 disables
  std::size_t checkpoint_every = 0;  // 0 keeps every state on the tape
  std::size_t max_retries = 3;
  bool parallel = true;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

  void validate() const;
  double learning_rate(std::size_t epoch) const;
};

struct LossParts {
  double rate = 0.0, nadir = 0.0, cost = 0.0;
  double total(const MetricConfig& m) const { return m.rho_r * rate + m.rho_n * nadir + m.rho_c * cost; }
};

/// States of one Euler rollout, stored every `stride` steps; the backward pass
/// recomputes the gaps.
struct Tape {
  double h = 0.0;
  Vector p;
  std::size_t steps = 0;
  std::size_t stride = 1;
  std::vector<SystemState> checkpoints;  // states at tau = 0, stride, 2*stride, ...
  SystemState final_state;
  std::vector<std::size_t> argmax;       // first step attaining each bus nadir
  LossParts loss;
  double J = 0.0;
};

/// Rolls out with forward Euler and records the tape. When `traj` is given,
/// it receives the full trajectory as well.
Tape rollout_with_tape(const ClosedLoop& sys, const Vector& p, const TrainConfig& cfg,
                       Trajectory* traj = nullptr);

/// Exact reverse-mode gradient of the discrete loss with respect to the flat
/// MonotoneNet parameters of `sys.law`.
std::vector<double> backprop(const ClosedLoop& sys, const Tape& tape, const TrainConfig& cfg);

class Adam {
 public:
  Adam(std::size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(std::vector<double>& params, const std::vector<double>& grad, double lr);
  std::size_t iterations() const { return t_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }

 private:
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<double> m_, v_;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BatchResult {
  double loss = 0.0;                 // mean J over the kept samples
  std::vector<double> grad;          // mean gradient
  std::size_t kept = 0;
  std::size_t resampled = 0;
  std::size_t dropped = 0;
};

/// Disturbance for sample `index` of `epoch`, retry `retry`; independent of
/// evaluation order.
Vector sample_disturbance(std::size_t n_buses, const TrainConfig& cfg, std::size_t epoch,
                          std::size_t index, std::size_t retry);

/// Epoch index reserved for evaluation draws; training never reaches it.
inline constexpr std::size_t kHeldOutEpoch = 999999;

/// `count` draws from the training distribution that no epoch uses.
std::vector<Vector> held_out_disturbances(std::size_t n_buses, const TrainConfig& cfg, std::size_t count);

BatchResult batch_gradient_serial(const ClosedLoop& sys, const TrainConfig& cfg, std::size_t epoch);
BatchResult batch_gradient_parallel(const ClosedLoop& sys, const TrainConfig& cfg, std::size_t epoch);

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;
  std::size_t resampled = 0;
};

struct TrainResult {
  MonotoneNet net;
  std::vector<EpochStats> history;
};

using EpochCallback = std::function<void(const EpochStats&)>;

TrainResult train(const NetworkModel& model, const ControllerGains& gains, const CostModel& cost,
                  MonotoneNet init, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Mean loss of `law` over fixed disturbances (no gradient).
double evaluate_loss(const ClosedLoop& sys, const std::vector<Vector>& disturbances,
                     const TrainConfig& cfg);

struct GradientCheck {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::vector<double> analytic, numeric;
};

/// Central differences of the rollout loss against backprop, one parameter at
/// a time. rel = |a - n| / max(|a|, |n|, floor).
GradientCheck check_gradients(const ClosedLoop& sys, const Vector& p, const TrainConfig& cfg,
                              double eps = 1e-6, double floor = 1e-7);

}  // namespace freqctl
