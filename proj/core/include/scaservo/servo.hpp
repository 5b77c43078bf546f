#pragma once

#include "scaservo/plant.hpp"
#include "scaservo/rng.hpp"
#include "scaservo/rod_model.hpp"
#include "scaservo/run_config.hpp"

#include <vector>

namespace scaservo {

// One measure-correct-apply round of the local controller.
struct ServoIteration {
  int iteration = 0;  // 1-based
  Actuation actuation;     // pressures in effect when the measurement was taken
  ArmConfig estimated;     // strain estimate from the tip pose
  double err_kappa = 0.0;  // goal - estimate
  double err_tau = 0.0;
};

struct ServoResult {
  bool converged = false;
  int iterations = 0;  // measurement rounds used (<= max_iters)
  ArmConfig final_estimate;
  double err_kappa = 0.0;
  double err_tau = 0.0;
  // A pressure limit was hit while the error was still above tolerance:
  // the goal is (at least partly) outside this plant's reachable set.
  bool saturated = false;
  // True configuration the plant ended at (simulation-side bookkeeping; a
  // real controller only sees final_estimate).
  ArmConfig final_true;
  std::vector<ServoIteration> history;
};

// Iterative strain servo: start from the nominal inverse map, then
// measure the tip pose, estimate the strains, and nudge the channel
// pressures proportionally until both errors are inside tolerance or the
// iteration budget runs out.  Tip measurements can carry configurable
// position/orientation noise (the plant config's sensor fields), drawn from
// this instance's seed.
class ServoLoop {
 public:
  ServoLoop(const PlantModel& plant, const RodParams& rod,
            const ServoConfig& servo, std::uint64_t noise_seed = 0);

  ServoResult servo_to(const ArmConfig& goal);

  const PlantModel& plant() const { return plant_; }

 private:
  // True tip pose of the current configuration, with sensor noise applied.
  Pose measure_tip(const ArmConfig& true_config);

  PlantModel plant_;
  RodParams rod_;
  ServoConfig servo_;
  Rng rng_;
  bool has_prior_ = false;
  ArmConfig prior_;
};

}  // namespace scaservo
