#pragma once

#include "scaservo/rod_model.hpp"
#include "scaservo/run_config.hpp"

namespace scaservo {

// Chamber pressures commanded to the arm, kPa.  The bend chamber drives
// kappa; the two antagonistic rotation chambers drive tau (only one is
// pressurized at a time).
struct Actuation {
  double bend_kpa = 0.0;
  double rot1_kpa = 0.0;  // positive-tau chamber
  double rot2_kpa = 0.0;  // negative-tau chamber
};

// Synthetic actuation-to-strain response: saturating (tanh) channel curves,
// per-instance multiplicative bias on each channel, and payload droop on the
// bend channel.  Pressures are clamped to [0, p_max] before evaluation.
//   kappa = bias_bend * gain_bend * tanh(b / bend_scale) * kappa_gain
//           - droop_per_gram * payload_g
//   tau   = bias_rot * gain_rot * (tanh(r1 / rot_scale) - tanh(r2 / rot_scale))
//           * tau_gain
class PlantModel {
 public:
  explicit PlantModel(const PlantConfig& cfg) : cfg_(cfg) {}

  ArmConfig apply(const Actuation& a) const;

  // Largest strains this instance can physically reach.
  double max_kappa() const;
  double max_abs_tau() const;

  const PlantConfig& config() const { return cfg_; }

 private:
  PlantConfig cfg_;
};

struct GeneralMapResult {
  Actuation actuation;
  // True when the request exceeded what the nominal model can produce and
  // the pressures were clamped to their limits.
  bool clamped = false;
};

// Inverts the *nominal* response (bias 1, no payload) analytically.
// Unreachable strains clamp to the nearest achievable pressure and flag it.
// Negative bend strains are unreachable by construction (bend pressure
// cannot be negative).
GeneralMapResult general_map(const ArmConfig& goal, const PlantConfig& nominal);

// Net signed rotation pressure of an actuation (rot1 - rot2).
double signed_rotation_kpa(const Actuation& a);

// Actuation with the given bend pressure and signed rotation pressure,
// pressures clamped to [0, p_max].
Actuation actuation_from_channels(double bend_kpa, double signed_rot_kpa,
                                  const PlantConfig& cfg);

// One proportional correction: channel pressure deltas that move the
// estimated strains toward the goal, scaled by `gain` and the nominal
// channel slopes at the current operating point (central finite differences
// with step grad_delta_kpa).
struct ChannelDeltas {
  double d_bend_kpa = 0.0;
  double d_rot_kpa = 0.0;  // applied to the signed rotation pressure
};
ChannelDeltas correction_step(const ArmConfig& goal, const ArmConfig& estimated,
                              const Actuation& current,
                              const PlantConfig& nominal, double gain,
                              double grad_delta_kpa);

}  // namespace scaservo
