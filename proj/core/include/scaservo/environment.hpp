#pragma once

#include "scaservo/rng.hpp"
#include "scaservo/rod_model.hpp"
#include "scaservo/run_config.hpp"
#include "scaservo/vision.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

namespace scaservo {

inline constexpr int kStateDim = 16;
inline constexpr int kActionDim = 2;

// Observation handed to the policy, in raw physical units.  flatten() order:
//   [0..2]   tip position (m, base frame)
//   [3..6]   tip orientation quaternion (w, x, y, z), w >= 0
//   [7]      kappa   [8] tau
//   [9..10]  arm-tip centroid in the base camera (u, v, px)
//   [11..12] target centroid in the base camera (u, v, px)
//   [13..14] target centroid in the tip camera (u, v, px)
//   [15]     target visible in the tip camera (0 or 1)
// Invisible detections report their centroid clamped to the frame (frame
// center when the point is behind the lens) so observations stay bounded.
struct StateVector {
  Vec3 tip_position = Vec3::Zero();
  Eigen::Vector4d tip_quat{1.0, 0.0, 0.0, 0.0};  // (w, x, y, z), w >= 0
  double kappa = 0.0;
  double tau = 0.0;
  PixelPoint tip_base_px;
  PixelPoint target_base_px;
  PixelPoint target_distal_px;
  double target_visible = 0.0;

  std::array<double, kStateDim> flatten() const;
};

// Policy action: strain increments in [-1, 1], scaled by the environment.
struct Action {
  double d_kappa = 0.0;
  double d_tau = 0.0;
};

struct RewardBreakdown {
  double distance = 0.0;   // Gaussian in the tip-to-target distance
  double alignment = 0.0;  // Gaussian in the tangent-to-target angle
  double image = 0.0;      // Gaussian in the tip-camera centering error
  double capture = 0.0;    // bonus when the target is centered within the goal radius
  double penalty = 0.0;    // constant per-step cost
  double total() const { return distance + alignment + image + capture + penalty; }
};

// Reward for a tip pose relative to a target, given the tip-camera view of
// the target.  Exposed for direct testing; the environment calls it every
// step.  success_px is the centering radius that pays the capture bonus.
RewardBreakdown compute_reward(const Pose& tip, const Vec3& target,
                               const Detection& target_in_distal,
                               const CameraSpec& distal_cam, double success_px);

struct StepResult {
  StateVector state;
  RewardBreakdown reward;
  bool done = false;
  bool success = false;
  double image_dist_px = std::numeric_limits<double>::infinity();
  bool target_visible = false;
};

// One arm-positioning episode: the agent nudges (kappa, tau) a few times to
// center a goal sphere in the tip camera.  Episodes end on success or after
// max_steps.  All randomness (goal placement, optional pixel noise) comes
// from the seed given to reset, so trajectories replay exactly.
class Env {
 public:
  explicit Env(const RunConfig& cfg);

  // Starts a fresh episode with a goal sampled uniformly in the target box.
  StateVector reset(std::uint64_t seed);
  // Starts a fresh episode with the given goal position.
  StateVector reset_to_target(std::uint64_t seed, const Vec3& target);

  // Applies a clamped strain increment.  Throws std::logic_error when the
  // episode already ended.
  StepResult step(const Action& a);

  // Deployment path: an external controller positioned the arm; the episode
  // advances with the configuration it actually reached (no action clamping,
  // but hard strain bounds are enforced).
  StepResult step_to_config(const ArmConfig& achieved);

  // The configuration step(a) would command: current strains plus the scaled
  // action, clamped to the commanded workspace.
  ArmConfig action_to_goal(const Action& a) const;

  StateVector observe();

  const ArmConfig& config() const { return config_; }
  const Vec3& target() const { return target_; }
  int steps_taken() const { return steps_; }
  bool episode_done() const { return done_; }
  int max_steps() const { return cfg_.env.max_steps; }
  double success_px() const { return cfg_.env.success_px; }
  const CameraSpec& base_camera() const { return base_cam_; }
  CameraSpec distal_camera_now() const;
  const RunConfig& run_config() const { return cfg_; }

  // Uniform draw from the goal box (x, then y, then z).
  static Vec3 sample_target(const EnvConfig& env, Rng& rng);

 private:
  StepResult finish_step();

  RunConfig cfg_;
  CameraSpec base_cam_;
  CameraSpec distal_intrinsics_;
  Rng rng_{0};
  ArmConfig config_;
  Vec3 target_ = Vec3::Zero();
  int steps_ = 0;
  bool done_ = true;  // reset() must be called before step()
  bool success_ = false;
  // Cache of the latest observation's tip-camera view, reused by the reward.
  Detection last_detection_;
  double last_image_dist_ = std::numeric_limits<double>::infinity();
  bool last_visible_ = false;
};

// Per-step record of a finished transition (state after the step).
struct StepRecord {
  std::array<double, kStateDim> state_after{};
  std::array<double, kActionDim> action{};
  RewardBreakdown reward;
  double image_dist_px = std::numeric_limits<double>::infinity();
  bool target_visible = false;
};

// Full trace of one episode, the unit of evaluation bookkeeping.
struct EpisodeRecord {
  std::uint64_t seed = 0;
  Vec3 target = Vec3::Zero();
  int point_index = -1;  // index into the test point set; -1 for random goals
  int trial = 0;
  std::vector<StepRecord> steps;
  bool success = false;
  int steps_taken = 0;
  double best_image_dist_px = std::numeric_limits<double>::infinity();
  double episode_return = 0.0;
  // Deployment-pipeline extras (zero in pure simulation).
  int servo_iterations_total = 0;
  int servo_saturated_events = 0;
};

}  // namespace scaservo
