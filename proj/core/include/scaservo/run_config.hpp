#pragma once

#include "scaservo/rod_model.hpp"
#include "scaservo/vision.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace scaservo {

// Raised for malformed config files, unknown keys, and out-of-range values.
// The CLI maps this to its "bad configuration" exit code.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
  bool contains(double x) const { return x >= lo && x <= hi; }
  double width() const { return hi - lo; }
};

struct BaseCameraConfig {
  Vec3 position{0.0, -0.6, 0.65};
  double pitch_down_deg = 45.0;
  double yaw_deg = 0.0;
  double focal_px = 500.0;
  int width = 640;
  int height = 480;
};

struct DistalCameraConfig {
  double focal_px = 500.0;
  int width = 640;
  int height = 480;
};

struct EnvConfig {
  double action_scale_kappa = 3.0;  // strain change per unit action
  double action_scale_tau = 3.0;
  int max_steps = 8;
  double success_px = 100.0;  // tip-camera centering radius that ends an episode
  Interval kappa_range{0.0, 12.0};
  Interval tau_range{-12.0, 12.0};
  // Targets live on the outward shell the tip camera can actually point at:
  // the bend direction is -y, and horizontal distances below ~0.24 m are
  // blocked near the base by the envelope of tip rays (the camera cannot
  // look back under the arm).  Every point of this box centers to within a
  // few pixels for some in-range (kappa, tau).
  Vec3 target_box_min{-0.15, -0.33, 0.10};
  Vec3 target_box_max{0.15, -0.25, 0.30};
  double target_radius = 0.015;
  ArmConfig init_config{0.0, 0.0};
  double pixel_noise_sigma = 0.0;  // detector noise, px
};

struct SacConfig {
  std::vector<int> hidden{256, 256};
  double lr = 3e-4;
  double gamma = 0.99;
  double polyak = 0.005;  // target <- (1-polyak)*target + polyak*online
  int batch_size = 256;
  int buffer_capacity = 100000;
  int warmup_steps = 1000;  // uniform-random actions before the policy takes over
  double entropy_target = -2.0;
  std::int64_t total_steps = 30000;
  int updates_per_step = 1;
  int eval_interval = 2000;  // env steps between learning-curve evaluations
  int eval_episodes = 50;
};

struct PlantConfig {
  double p_max_kpa = 210.0;
  double bend_scale_kpa = 100.0;  // pressure scale of the bend channel response
  double rot_scale_kpa = 100.0;
  double kappa_gain = 12.0;  // saturation strain of the bend channel
  double tau_gain = 12.0;
  double gain_bend = 1.0;  // nominal channel gains (the model the controller knows)
  double gain_rot = 1.0;
  double bias_bend = 1.0;  // per-instance multiplicative model error
  double bias_rot = 1.0;
  double payload_g = 0.0;       // grams at the tip
  double droop_per_gram = 0.02; // bend strain lost per gram of payload
  double sensor_pos_noise_m = 0.0;
  double sensor_rot_noise_deg = 0.0;
};

struct ServoConfig {
  double gain = 0.7;        // proportional correction gain
  double tol_kappa = 0.1;   // convergence tolerances on strain error
  double tol_tau = 0.1;
  int max_iters = 15;
  double grad_delta_kpa = 1.0;  // finite-difference step for channel slopes
};

struct EvalConfig {
  std::vector<double> thresholds_px{100.0, 150.0, 200.0};
  double report_threshold_px = 100.0;
  int trials_per_point = 2;
  std::vector<double> distances_m{0.26, 0.30, 0.34};   // horizontal reach bands
  std::vector<double> heights_m{0.12, 0.18, 0.24, 0.30};
  std::vector<double> azimuths_deg{-36.0, -12.0, 12.0, 36.0};
  int episodes = 200;  // for random-goal evaluation
};

struct RunConfig {
  std::uint64_t seed = 0;
  RodParams rod;
  StrainBounds strain_bounds;
  BaseCameraConfig base_camera;
  DistalCameraConfig distal_camera;
  EnvConfig env;
  SacConfig sac;
  PlantConfig plant;
  ServoConfig servo;
  EvalConfig eval;

  // Throws ConfigError when any cross-field constraint is violated
  // (empty ranges, workspace outside the hard strain bounds, ...).
  void validate() const;

  CameraSpec base_camera_spec() const;
  CameraSpec distal_camera_intrinsics() const;
};

// Parses a JSON config file.  Missing keys take the defaults above; unknown
// keys anywhere in the document are an error, so typos fail fast instead of
// silently running with defaults.
RunConfig load_run_config(const std::string& path);

// Same, from a JSON string (used by tests).
RunConfig parse_run_config(const std::string& json_text);

// Serializes the full effective config (defaults applied) as pretty JSON.
std::string dump_run_config(const RunConfig& cfg);

// Stable 64-bit digest of everything a trained policy depends on: rod
// geometry, camera models, observation/action scaling, network sizes.
// Stored in checkpoints and verified on load.
std::uint64_t config_signature_hash(const RunConfig& cfg);

}  // namespace scaservo
