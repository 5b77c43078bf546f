#include "scaservo/servo.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

namespace scaservo {

ServoLoop::ServoLoop(const PlantModel& plant, const RodParams& rod,
                     const ServoConfig& servo, std::uint64_t noise_seed)
    : plant_(plant), rod_(rod), servo_(servo), rng_(noise_seed) {}

Pose ServoLoop::measure_tip(const ArmConfig& true_config) {
  Pose tip = tip_pose(true_config, rod_);
  const auto& pc = plant_.config();
  if (pc.sensor_pos_noise_m > 0.0) {
    tip.position += Vec3(rng_.normal(0.0, pc.sensor_pos_noise_m),
                         rng_.normal(0.0, pc.sensor_pos_noise_m),
                         rng_.normal(0.0, pc.sensor_pos_noise_m));
  }
  if (pc.sensor_rot_noise_deg > 0.0) {
    const double sigma = pc.sensor_rot_noise_deg * M_PI / 180.0;
    Vec3 w(rng_.normal(0.0, sigma), rng_.normal(0.0, sigma),
           rng_.normal(0.0, sigma));
    const double angle = w.norm();
    if (angle > 0.0) {
      tip.orientation =
          (Eigen::AngleAxisd(angle, w / angle).toRotationMatrix() *
           tip.orientation)
              .eval();
    }
  }
  return tip;
}

ServoResult ServoLoop::servo_to(const ArmConfig& goal) {
  ServoResult res;
  const PlantConfig& pc = plant_.config();

  // Open-loop start from the nominal inverse model.
  const GeneralMapResult init = general_map(goal, pc);
  Actuation act = init.actuation;
  bool requested_beyond_limits = init.clamped;

  ArmConfig true_config = plant_.apply(act);

  for (int it = 1; it <= servo_.max_iters; ++it) {
    const Pose tip = measure_tip(true_config);
    const ConfigEstimate est = estimate_config(
        tip, rod_, has_prior_ ? std::optional<ArmConfig>(prior_) : std::nullopt);
    prior_ = est.config;
    has_prior_ = true;

    ServoIteration step;
    step.iteration = it;
    step.actuation = act;
    step.estimated = est.config;
    step.err_kappa = goal.kappa - est.config.kappa;
    step.err_tau = goal.tau - est.config.tau;
    res.history.push_back(step);

    res.iterations = it;
    res.final_estimate = est.config;
    res.err_kappa = step.err_kappa;
    res.err_tau = step.err_tau;

    if (std::abs(step.err_kappa) < servo_.tol_kappa &&
        std::abs(step.err_tau) < servo_.tol_tau) {
      res.converged = true;
      break;
    }

    const ChannelDeltas d = correction_step(goal, est.config, act, pc,
                                            servo_.gain, servo_.grad_delta_kpa);
    const double bend_req = act.bend_kpa + d.d_bend_kpa;
    const double rot_req = signed_rotation_kpa(act) + d.d_rot_kpa;
    act = actuation_from_channels(bend_req, rot_req, pc);
    // Requested pressures outside the feasible range mean the correction is
    // pushing against a hard limit.
    if (bend_req < 0.0 || bend_req > pc.p_max_kpa ||
        std::abs(rot_req) > pc.p_max_kpa)
      requested_beyond_limits = true;

    true_config = plant_.apply(act);
  }

  res.saturated = requested_beyond_limits && !res.converged;
  res.final_true = true_config;
  return res;
}

}  // namespace scaservo
