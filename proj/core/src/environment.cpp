#include "scaservo/environment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scaservo {

namespace {

// Characteristic image length of the centering reward (px).  Fixed alongside
// the reward shape: the Gaussian reaches 5*exp(-2*pi) at this centering
// error.
constexpr double kRewardLengthPx = 400.0;
constexpr double kCaptureBonus = 128.0;
constexpr double kStepPenalty = -10.0;
constexpr double kLn2 = 0.6931471805599453;

// Centroid fed into the observation for a possibly-invisible detection:
// clamp into the frame so the policy never sees unbounded pixels; a point
// behind the lens reports the frame center.
PixelPoint bounded_centroid(const Detection& det, const CameraSpec& cam,
                            bool behind) {
  if (behind) return PixelPoint{cam.width / 2.0, cam.height / 2.0};
  PixelPoint p = det.centroid;
  p.u = std::clamp(p.u, 0.0, double(cam.width));
  p.v = std::clamp(p.v, 0.0, double(cam.height));
  return p;
}

bool behind_camera(const CameraSpec& cam, const Vec3& p_world, double radius) {
  return cam.world_to_camera(p_world).z() <= radius;
}

}  // namespace

std::array<double, kStateDim> StateVector::flatten() const {
  return {tip_position.x(), tip_position.y(), tip_position.z(),
          tip_quat[0],      tip_quat[1],      tip_quat[2],
          tip_quat[3],      kappa,            tau,
          tip_base_px.u,    tip_base_px.v,    target_base_px.u,
          target_base_px.v, target_distal_px.u, target_distal_px.v,
          target_visible};
}

RewardBreakdown compute_reward(const Pose& tip, const Vec3& target,
                               const Detection& target_in_distal,
                               const CameraSpec& distal_cam, double success_px) {
  RewardBreakdown r;

  const double d = (target - tip.position).norm();
  r.distance = std::exp(-kLn2 * std::pow(40.0 * d / M_PI, 2));

  // Angle between the tip tangent and the line of sight to the target;
  // defined as zero when the target sits exactly at the tip.
  double alpha = 0.0;
  if (d > 0.0) {
    const Vec3 tangent = tip.orientation.col(2);
    const Vec3 to_goal = (target - tip.position) / d;
    alpha = std::atan2(tangent.cross(to_goal).norm(), tangent.dot(to_goal));
  }
  r.alignment = std::exp(-kLn2 * std::pow(8.0 * alpha / M_PI, 2));

  if (target_in_distal.visible) {
    const double di = center_distance_px(distal_cam, target_in_distal);
    r.image = 5.0 * std::exp(-2.0 * M_PI * std::pow(di / kRewardLengthPx, 2));
    r.capture = di <= success_px ? kCaptureBonus : 0.0;
  }

  r.penalty = kStepPenalty;
  return r;
}

Env::Env(const RunConfig& cfg)
    : cfg_(cfg),
      base_cam_(cfg.base_camera_spec()),
      distal_intrinsics_(cfg.distal_camera_intrinsics()) {
  cfg_.validate();
}

Vec3 Env::sample_target(const EnvConfig& env, Rng& rng) {
  return Vec3(rng.uniform(env.target_box_min.x(), env.target_box_max.x()),
              rng.uniform(env.target_box_min.y(), env.target_box_max.y()),
              rng.uniform(env.target_box_min.z(), env.target_box_max.z()));
}

StateVector Env::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  config_ = cfg_.env.init_config;
  target_ = sample_target(cfg_.env, rng_);
  steps_ = 0;
  done_ = false;
  success_ = false;
  return observe();
}

StateVector Env::reset_to_target(std::uint64_t seed, const Vec3& target) {
  rng_ = Rng(seed);
  config_ = cfg_.env.init_config;
  target_ = target;
  steps_ = 0;
  done_ = false;
  success_ = false;
  return observe();
}

CameraSpec Env::distal_camera_now() const {
  return distal_camera(tip_pose(config_, cfg_.rod), distal_intrinsics_);
}

ArmConfig Env::action_to_goal(const Action& a) const {
  const double dk = std::clamp(a.d_kappa, -1.0, 1.0) * cfg_.env.action_scale_kappa;
  const double dt = std::clamp(a.d_tau, -1.0, 1.0) * cfg_.env.action_scale_tau;
  return ArmConfig(cfg_.env.kappa_range.clamp(config_.kappa + dk),
                   cfg_.env.tau_range.clamp(config_.tau + dt));
}

StateVector Env::observe() {
  const Pose tip = tip_pose(config_, cfg_.rod);
  const CameraSpec dist_cam = distal_camera(tip, distal_intrinsics_);

  Scene scene;
  scene.marker_centers.clear();
  for (const Pose& p : centerline_samples(config_, cfg_.rod))
    scene.marker_centers.push_back(p.position);
  scene.marker_radius = cfg_.rod.marker_radius;
  scene.target_center = target_;
  scene.target_radius = cfg_.env.target_radius;

  SceneObservation obs = observe_scene(scene, base_cam_, dist_cam);

  if (cfg_.env.pixel_noise_sigma > 0.0) {
    const double s = cfg_.env.pixel_noise_sigma;
    for (Detection* d : {&obs.tip_in_base, &obs.target_in_base, &obs.target_in_distal}) {
      d->centroid.u += rng_.normal(0.0, s);
      d->centroid.v += rng_.normal(0.0, s);
    }
    // Re-derive visibility from the noisy centroid so the flag matches what
    // a detector working on the noisy image would report.
    obs.target_in_distal.visible =
        obs.target_in_distal.visible &&
        obs.target_in_distal.centroid.u >= 0.0 &&
        obs.target_in_distal.centroid.u <= dist_cam.width &&
        obs.target_in_distal.centroid.v >= 0.0 &&
        obs.target_in_distal.centroid.v <= dist_cam.height;
  }

  StateVector s;
  s.tip_position = tip.position;
  Eigen::Quaterniond q(tip.orientation);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  s.tip_quat << q.w(), q.x(), q.y(), q.z();
  s.kappa = config_.kappa;
  s.tau = config_.tau;
  s.tip_base_px = bounded_centroid(
      obs.tip_in_base, base_cam_,
      behind_camera(base_cam_, scene.marker_centers.back(), scene.marker_radius));
  s.target_base_px = bounded_centroid(
      obs.target_in_base, base_cam_,
      behind_camera(base_cam_, target_, cfg_.env.target_radius));
  s.target_distal_px = bounded_centroid(
      obs.target_in_distal, dist_cam,
      behind_camera(dist_cam, target_, cfg_.env.target_radius));
  s.target_visible = obs.target_in_distal.visible ? 1.0 : 0.0;

  last_visible_ = obs.target_in_distal.visible;
  last_image_dist_ = obs.target_in_distal.visible
                         ? center_distance_px(dist_cam, obs.target_in_distal)
                         : std::numeric_limits<double>::infinity();
  last_detection_ = obs.target_in_distal;
  return s;
}

StepResult Env::finish_step() {
  const StateVector s = observe();
  const Pose tip = tip_pose(config_, cfg_.rod);
  const CameraSpec dist_cam = distal_camera(tip, distal_intrinsics_);

  StepResult out;
  out.state = s;
  out.reward =
      compute_reward(tip, target_, last_detection_, dist_cam, cfg_.env.success_px);
  out.target_visible = last_visible_;
  out.image_dist_px = last_image_dist_;
  out.success = last_visible_ && last_image_dist_ <= cfg_.env.success_px;

  ++steps_;
  success_ = out.success;
  done_ = success_ || steps_ >= cfg_.env.max_steps;
  out.done = done_;
  return out;
}

StepResult Env::step(const Action& a) {
  if (done_)
    throw std::logic_error("step() called on a finished episode; call reset()");
  config_ = action_to_goal(a);
  return finish_step();
}

StepResult Env::step_to_config(const ArmConfig& achieved) {
  if (done_)
    throw std::logic_error("step() called on a finished episode; call reset()");
  if (!cfg_.strain_bounds.contains(achieved))
    throw std::domain_error("achieved configuration violates strain bounds");
  config_ = achieved;
  return finish_step();
}

}  // namespace scaservo
