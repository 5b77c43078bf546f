#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace scaservo {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Configuration of a single-section arm with uniform bending and torsion
// strain along its length.  Units are 1/m.
struct ArmConfig {
  double kappa = 0.0;  // bending strain about the local x axis
  double tau = 0.0;    // torsional strain about the local z (tangent) axis

  ArmConfig() = default;
  ArmConfig(double k, double t) : kappa(k), tau(t) {}
};

// Hard validity limits for strain values.  The environment may restrict the
// commanded workspace to a subset of these.
struct StrainBounds {
  double kappa_max = 12.0;  // |kappa| <= kappa_max
  double tau_max = 12.0;    // |tau| <= tau_max

  bool contains(const ArmConfig& c) const {
    return std::abs(c.kappa) <= kappa_max && std::abs(c.tau) <= tau_max;
  }
};

// Rigid pose: position plus rotation matrix, base frame unless stated
// otherwise.  The arm's base frame has z along the undeformed backbone.
struct Pose {
  Vec3 position = Vec3::Zero();
  Mat3 orientation = Mat3::Identity();

  static Pose identity() { return Pose{}; }

  // True when the orientation is orthonormal with det +1 to within tol.
  bool has_valid_rotation(double tol = 1e-9) const;
};

// Geometry of the physical rod.
struct RodParams {
  double length = 0.30;         // arc length, m
  int n_markers = 15;           // evenly spaced spherical markers
  double marker_radius = 0.01;  // m

  // Throws std::invalid_argument when any field is non-physical.
  void validate() const;
};

// Pose of the backbone point at arc length s in the base frame, from the
// closed-form solution of the moving-frame equations
//   r'(s) = R(s) v,  R'(s) = R(s) [u]_x,  u = [kappa, 0, tau],  v = [0, 0, 1].
// Pre: 0 <= s <= params.length (throws std::domain_error otherwise).
Pose forward_pose(const ArmConfig& config, double s, const RodParams& params);

// Pose at s = params.length.
Pose tip_pose(const ArmConfig& config, const RodParams& params);

// n_markers poses evenly spaced over (0, length]: s_i = i * L / n, i = 1..n.
std::vector<Pose> centerline_samples(const ArmConfig& config,
                                     const RodParams& params);

// Fixed-step RK4 integration of the moving-frame ODEs from 0 to s.  This is
// the slow reference implementation used to cross-check forward_pose; it
// shares no code with the closed form.
Pose integrate_pose_rk4(const ArmConfig& config, double s, int n_steps,
                        const RodParams& params);

// Result of recovering (kappa, tau) from a measured tip pose.
struct ConfigEstimate {
  ArmConfig config;
  // Sum of the unmodelled y-axis rotation component (|theta*a_y| / L) and the
  // norm of the position mismatch between the measured tip and the forward
  // model at the estimate.  Near zero for poses generated by the model.
  double residual = 0.0;
  // Set when the net rotation angle is within 1e-6 of pi, where the rotation
  // log cannot distinguish the two strain branches from orientation alone.
  // The returned config then comes from the least-squares refinement.
  bool degenerate = false;
};

// Invert tip_pose.  The rotation log gives two candidate strain vectors
// (principal angle and its 2*pi complement); the one whose forward model
// better matches the measured position wins.  An optional prior breaks ties
// and seeds the refinement used in the degenerate case.
ConfigEstimate estimate_config(const Pose& tip, const RodParams& params,
                               std::optional<ArmConfig> prior = std::nullopt);

namespace detail {
// Rotation angle/axis extraction via quaternion, stable for angles near pi.
// Returns angle in [0, pi]; axis is unit length (arbitrary when angle ~ 0).
void rotation_log(const Mat3& R, double& angle, Vec3& axis);
}  // namespace detail

}  // namespace scaservo
