#include "scaservo/plant.hpp"

#include <algorithm>
#include <cmath>

namespace scaservo {

namespace {

double clamp_pressure(double p, double p_max) {
  return std::clamp(p, 0.0, p_max);
}

// Nominal (bias-free, payload-free) channel responses and their inverses.
double nominal_kappa(double bend_kpa, const PlantConfig& c) {
  return c.gain_bend * std::tanh(bend_kpa / c.bend_scale_kpa) * c.kappa_gain;
}

double nominal_tau(double signed_rot_kpa, const PlantConfig& c) {
  const double r1 = std::max(signed_rot_kpa, 0.0);
  const double r2 = std::max(-signed_rot_kpa, 0.0);
  return c.gain_rot *
         (std::tanh(r1 / c.rot_scale_kpa) - std::tanh(r2 / c.rot_scale_kpa)) *
         c.tau_gain;
}

}  // namespace

ArmConfig PlantModel::apply(const Actuation& a) const {
  const double b = clamp_pressure(a.bend_kpa, cfg_.p_max_kpa);
  const double r1 = clamp_pressure(a.rot1_kpa, cfg_.p_max_kpa);
  const double r2 = clamp_pressure(a.rot2_kpa, cfg_.p_max_kpa);

  const double kappa = cfg_.bias_bend * cfg_.gain_bend *
                           std::tanh(b / cfg_.bend_scale_kpa) * cfg_.kappa_gain -
                       cfg_.droop_per_gram * cfg_.payload_g;
  const double tau = cfg_.bias_rot * cfg_.gain_rot *
                     (std::tanh(r1 / cfg_.rot_scale_kpa) -
                      std::tanh(r2 / cfg_.rot_scale_kpa)) *
                     cfg_.tau_gain;
  return ArmConfig(kappa, tau);
}

double PlantModel::max_kappa() const {
  return cfg_.bias_bend * cfg_.gain_bend *
             std::tanh(cfg_.p_max_kpa / cfg_.bend_scale_kpa) * cfg_.kappa_gain -
         cfg_.droop_per_gram * cfg_.payload_g;
}

double PlantModel::max_abs_tau() const {
  return cfg_.bias_rot * cfg_.gain_rot *
         std::tanh(cfg_.p_max_kpa / cfg_.rot_scale_kpa) * cfg_.tau_gain;
}

double signed_rotation_kpa(const Actuation& a) { return a.rot1_kpa - a.rot2_kpa; }

Actuation actuation_from_channels(double bend_kpa, double signed_rot_kpa,
                                  const PlantConfig& cfg) {
  Actuation a;
  a.bend_kpa = clamp_pressure(bend_kpa, cfg.p_max_kpa);
  a.rot1_kpa = clamp_pressure(std::max(signed_rot_kpa, 0.0), cfg.p_max_kpa);
  a.rot2_kpa = clamp_pressure(std::max(-signed_rot_kpa, 0.0), cfg.p_max_kpa);
  return a;
}

GeneralMapResult general_map(const ArmConfig& goal, const PlantConfig& nominal) {
  GeneralMapResult out;

  // Bend channel: kappa = gain_bend * tanh(b / scale) * kappa_gain.
  const double kx = goal.kappa / (nominal.gain_bend * nominal.kappa_gain);
  const double bend_limit = std::tanh(nominal.p_max_kpa / nominal.bend_scale_kpa);
  double bend;
  if (kx <= 0.0) {
    bend = 0.0;
    out.clamped = out.clamped || kx < 0.0;
  } else if (kx >= bend_limit) {
    bend = nominal.p_max_kpa;
    out.clamped = out.clamped || kx > bend_limit;
  } else {
    bend = nominal.bend_scale_kpa * std::atanh(kx);
  }

  // Rotation: single-sided, tau = gain_rot * tanh(|r| / scale) * tau_gain
  // with the sign choosing the chamber.
  const double tx = std::abs(goal.tau) / (nominal.gain_rot * nominal.tau_gain);
  const double rot_limit = std::tanh(nominal.p_max_kpa / nominal.rot_scale_kpa);
  double rot;
  if (tx >= rot_limit) {
    rot = nominal.p_max_kpa;
    out.clamped = out.clamped || tx > rot_limit;
  } else {
    rot = nominal.rot_scale_kpa * std::atanh(tx);
  }
  if (goal.tau < 0.0) rot = -rot;

  out.actuation = actuation_from_channels(bend, rot, nominal);
  return out;
}

ChannelDeltas correction_step(const ArmConfig& goal, const ArmConfig& estimated,
                              const Actuation& current,
                              const PlantConfig& nominal, double gain,
                              double grad_delta_kpa) {
  const double h = grad_delta_kpa;
  const double b = clamp_pressure(current.bend_kpa, nominal.p_max_kpa);
  const double rho =
      std::clamp(signed_rotation_kpa(current), -nominal.p_max_kpa, nominal.p_max_kpa);

  // Nominal channel slopes at the operating point.  The central difference
  // stays inside the valid pressure range near the limits.
  const double b_hi = std::min(b + h, nominal.p_max_kpa);
  const double b_lo = std::max(b - h, 0.0);
  double slope_b =
      (nominal_kappa(b_hi, nominal) - nominal_kappa(b_lo, nominal)) / (b_hi - b_lo);
  const double r_hi = std::min(rho + h, nominal.p_max_kpa);
  const double r_lo = std::max(rho - h, -nominal.p_max_kpa);
  double slope_r =
      (nominal_tau(r_hi, nominal) - nominal_tau(r_lo, nominal)) / (r_hi - r_lo);

  // Deep in saturation the nominal slope approaches zero; floor it so a
  // single correction cannot command an absurd pressure jump.
  const double floor_b =
      0.05 * nominal.gain_bend * nominal.kappa_gain / nominal.bend_scale_kpa;
  const double floor_r =
      0.05 * nominal.gain_rot * nominal.tau_gain / nominal.rot_scale_kpa;
  slope_b = std::max(slope_b, floor_b);
  slope_r = std::max(slope_r, floor_r);

  ChannelDeltas d;
  d.d_bend_kpa = gain * (goal.kappa - estimated.kappa) / slope_b;
  d.d_rot_kpa = gain * (goal.tau - estimated.tau) / slope_r;
  return d;
}

}  // namespace scaservo
