#pragma once

#include "scaservo/environment.hpp"
#include "scaservo/mlp.hpp"
#include "scaservo/rng.hpp"
#include "scaservo/run_config.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace scaservo {

// Maps raw observations into the roughly [-1, 1] ranges the networks train
// on: normalized = (raw - offset) / scale, built from the geometry in the
// run config and stored in checkpoints.
struct Normalizer {
  std::array<double, kStateDim> offset{};
  std::array<double, kStateDim> scale{};

  static Normalizer for_config(const RunConfig& cfg);
  Vec apply(const std::array<double, kStateDim>& raw) const;
  Mat apply_batch(const std::vector<std::array<double, kStateDim>>& raw) const;
};

// One environment transition as stored for off-policy learning.  `terminal`
// marks real task termination (success); hitting the step limit is a
// truncation, so the value bootstrap stays on and `terminal` stays false.
struct Transition {
  std::array<double, kStateDim> state{};
  std::array<double, kActionDim> action{};
  double reward = 0.0;
  std::array<double, kStateDim> next_state{};
  bool terminal = false;
};

// Fixed-capacity ring buffer with uniform without-replacement sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity);
  void push(const Transition& t);
  int size() const { return size_; }
  int capacity() const { return capacity_; }
  const Transition& at(int i) const { return data_[static_cast<size_t>(i)]; }
  // `count` distinct indices, uniform over the buffer (count <= size).
  std::vector<int> sample_indices(int count, Rng& rng) const;

 private:
  int capacity_;
  int size_ = 0;
  int next_ = 0;
  std::vector<Transition> data_;
};

// The learner's networks.  The actor outputs [mu(2), log_std(2)] of a
// squashed Gaussian; critics score (state, action) pairs; targets are slow
// copies of the critics.
struct SacNets {
  Mlp actor;
  Mlp critic1, critic2;
  Mlp target1, target2;
  double log_alpha = 0.0;

  static SacNets make(const std::vector<int>& hidden, Rng& rng,
                      int state_dim = kStateDim, int action_dim = kActionDim);
  int state_dim() const { return actor.input_dim(); }
  int action_dim() const { return actor.output_dim() / 2; }
};

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

// Reparameterized draw from the actor's squashed Gaussian for a batch of
// (normalized) states, with everything backward needs kept around.
struct ActorSample {
  Mat mu;           // A x B
  Mat log_std_raw;  // before clamping (for the clamp mask)
  Mat log_std;      // clamped
  Mat stddev;
  Mat pre;     // mu + stddev .* eps
  Mat action;  // tanh(pre)
  Vec logp;    // B; log-density of `action` under the squashed Gaussian
  Mlp::Cache cache;
};

// eps is an (action_dim x B) matrix of standard normal draws.
ActorSample actor_sample(const Mlp& actor, const Mat& states, const Mat& eps);

// Deterministic policy head: tanh(mu).
Mat actor_mean_action(const Mlp& actor, const Mat& states);

// TD targets y = r + gamma * mask * (min_i target_i(s', a') - alpha*logp(a'|s'))
// with a' freshly drawn from the actor via eps2.  mask is 1 where the value
// bootstrap applies (non-terminal next states).
Vec compute_targets(const SacNets& nets, double gamma, const Mat& next_states,
                    const Vec& rewards, const Vec& mask, const Mat& eps2);

struct CriticLoss {
  double loss = 0.0;  // 0.5 * mean((q - y)^2)
  MlpGrads grads;
};
CriticLoss critic_loss(const Mlp& critic, const Mat& states, const Mat& actions,
                       const Vec& targets);

struct ActorLoss {
  double loss = 0.0;  // mean(alpha*logp - min(q1, q2)) under reparameterization
  MlpGrads grads;
  Vec logp;  // per-sample log-probabilities (reused by the temperature update)
};
ActorLoss actor_loss(const Mlp& actor, const Mlp& critic1, const Mlp& critic2,
                     const Mat& states, const Mat& eps, double alpha);

void polyak_update(Mlp& target, const Mlp& online, double rho);

// Optimizer bundle matching SacNets.
struct SacOptimizers {
  Adam actor, critic1, critic2;
  ScalarAdam alpha;
  static SacOptimizers make(const SacNets& nets, double lr);
};

struct SacUpdateStats {
  double critic1_loss = 0.0;
  double critic2_loss = 0.0;
  double actor_loss = 0.0;
  double alpha_loss = 0.0;
  double alpha = 0.0;
  double mean_logp = 0.0;
};

// One gradient update on a sampled batch: critics toward the TD targets,
// actor on the reparameterized objective against the updated critics,
// temperature toward the entropy target, then polyak on the target nets.
// Throws std::runtime_error when any loss goes non-finite.
SacUpdateStats sac_update(SacNets& nets, SacOptimizers& opt,
                          const ReplayBuffer& buffer,
                          const std::vector<int>& batch_indices,
                          const Normalizer& norm, const SacConfig& cfg,
                          Rng& rng);

// Single-state conveniences for rollouts (raw, unnormalized observations).
Eigen::Vector2d act_mean(const Mlp& actor, const Normalizer& norm,
                         const std::array<double, kStateDim>& raw_state);
Eigen::Vector2d act_sample(const Mlp& actor, const Normalizer& norm,
                           const std::array<double, kStateDim>& raw_state,
                           Rng& rng);

// Learning-curve sample: evaluation success after `step` environment steps.
struct CurvePoint {
  std::int64_t step = 0;
  double mean_train_return = 0.0;
  double eval_success = 0.0;
};

struct TrainResult {
  std::vector<CurvePoint> curve;
  double final_eval_success = 0.0;
  double best_eval_success = 0.0;
  std::int64_t episodes = 0;
  std::int64_t gradient_updates = 0;
  double wall_seconds = 0.0;
  std::string checkpoint_path;
  std::string best_checkpoint_path;
};

// Runs the full training loop single-threaded from cfg.seed, writing
// checkpoint.json, best_checkpoint.json, learning_curve.csv and
// train_report.json into out_dir.  `log` (optional) receives progress lines.
TrainResult train_sac(const RunConfig& cfg, const std::string& out_dir,
                      std::ostream* log = nullptr);

}  // namespace scaservo
