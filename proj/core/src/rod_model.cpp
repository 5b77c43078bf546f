#include "scaservo/rod_model.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace scaservo {

namespace {

Mat3 skew(const Vec3& w) {
  Mat3 m;
  // clang-format off
  m <<     0, -w.z(),  w.y(),
       w.z(),      0, -w.x(),
      -w.y(),  w.x(),      0;
  // clang-format on
  return m;
}

// Forward map evaluated without range checks; shared by the public entry
// points and by estimate_config, which probes candidate strains.
Pose forward_pose_unchecked(double kappa, double tau, double s) {
  const Vec3 u(kappa, 0.0, tau);
  const Vec3 v(0.0, 0.0, 1.0);
  const double sigma = std::hypot(kappa, tau);
  const double theta = sigma * s;

  const Mat3 U = skew(u);
  const Mat3 U2 = U * U;

  Pose out;
  if (theta < 1e-8) {
    // Second-order expansion of the exponential; exact at sigma = 0 and well
    // below double round-off error at theta = 1e-8.
    out.orientation = Mat3::Identity() + s * U + (s * s / 2.0) * U2;
    out.position = (s * Mat3::Identity() + (s * s / 2.0) * U +
                    (s * s * s / 6.0) * U2) *
                   v;
    return out;
  }

  const double sin_t = std::sin(theta);
  const double half = std::sin(theta / 2.0);
  const double one_minus_cos = 2.0 * half * half;  // 1 - cos(theta), no cancellation
  const double s2 = sigma * sigma;
  const double s3 = s2 * sigma;

  out.orientation = Mat3::Identity() + (sin_t / s2) * (sigma * U) +
                    (one_minus_cos / s2) * U2;
  out.position =
      (s * Mat3::Identity() + (one_minus_cos / s2) * U +
       ((theta - sin_t) / s3) * U2) *
      v;
  return out;
}

// Angle/axis of the rotation taking `from` to `to`, expressed as a rotation
// vector.  Small for nearby rotations, so no branch ambiguity.
Vec3 rotation_error_vec(const Mat3& from, const Mat3& to) {
  double angle;
  Vec3 axis;
  detail::rotation_log(from.transpose() * to, angle, axis);
  return angle * axis;
}

struct Residual6 {
  Eigen::Matrix<double, 6, 1> r;
  double cost;
};

Residual6 pose_residual(const ArmConfig& c, const Pose& target, double length) {
  const Pose fk = forward_pose_unchecked(c.kappa, c.tau, length);
  Residual6 out;
  // Position in units of rod length, rotation in radians: both blocks are
  // dimensionless and respond to strain changes at comparable scale, so
  // neither silently dominates the fit.
  out.r.head<3>() = (fk.position - target.position) / length;
  out.r.tail<3>() = rotation_error_vec(target.orientation, fk.orientation);
  out.cost = out.r.squaredNorm();
  return out;
}

// Levenberg–Marquardt over (kappa, tau) on the 6-d pose residual.  Two
// parameters, so the normal equations are a 2x2 solve; Jacobian by central
// differences.
ArmConfig refine_config(ArmConfig c, const Pose& target, double length) {
  const double h = 1e-7;
  double lambda = 1e-3;
  Residual6 cur = pose_residual(c, target, length);

  for (int iter = 0; iter < 60 && cur.cost > 1e-26; ++iter) {
    Eigen::Matrix<double, 6, 2> J;
    for (int p = 0; p < 2; ++p) {
      ArmConfig hi = c, lo = c;
      (p == 0 ? hi.kappa : hi.tau) += h;
      (p == 0 ? lo.kappa : lo.tau) -= h;
      J.col(p) =
          (pose_residual(hi, target, length).r - pose_residual(lo, target, length).r) /
          (2.0 * h);
    }
    const Eigen::Matrix2d JtJ = J.transpose() * J;
    const Eigen::Vector2d g = J.transpose() * cur.r;

    bool stepped = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      const Eigen::Vector2d delta =
          (JtJ + lambda * Eigen::Matrix2d::Identity()).ldlt().solve(-g);
      const ArmConfig trial(c.kappa + delta.x(), c.tau + delta.y());
      const Residual6 next = pose_residual(trial, target, length);
      if (next.cost < cur.cost) {
        c = trial;
        cur = next;
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = delta.norm() > 1e-13;
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) break;
  }
  return c;
}

}  // namespace

bool Pose::has_valid_rotation(double tol) const {
  const double ortho =
      (orientation.transpose() * orientation - Mat3::Identity()).norm();
  return ortho <= tol && std::abs(orientation.determinant() - 1.0) <= tol;
}

void RodParams::validate() const {
  if (!(length > 0.0)) throw std::invalid_argument("rod length must be positive");
  if (n_markers < 1) throw std::invalid_argument("rod needs at least one marker");
  if (!(marker_radius > 0.0))
    throw std::invalid_argument("marker radius must be positive");
  if (marker_radius >= length)
    throw std::invalid_argument("marker radius must be smaller than rod length");
}

Pose forward_pose(const ArmConfig& config, double s, const RodParams& params) {
  params.validate();
  if (s < 0.0 || s > params.length)
    throw std::domain_error("arc length outside [0, rod length]");
  return forward_pose_unchecked(config.kappa, config.tau, s);
}

Pose tip_pose(const ArmConfig& config, const RodParams& params) {
  return forward_pose(config, params.length, params);
}

std::vector<Pose> centerline_samples(const ArmConfig& config,
                                     const RodParams& params) {
  params.validate();
  std::vector<Pose> poses;
  poses.reserve(static_cast<size_t>(params.n_markers));
  for (int i = 1; i <= params.n_markers; ++i) {
    const double s = params.length * static_cast<double>(i) /
                     static_cast<double>(params.n_markers);
    poses.push_back(forward_pose_unchecked(config.kappa, config.tau, s));
  }
  return poses;
}

Pose integrate_pose_rk4(const ArmConfig& config, double s, int n_steps,
                        const RodParams& params) {
  params.validate();
  if (s < 0.0 || s > params.length)
    throw std::domain_error("arc length outside [0, rod length]");
  if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");

  const Mat3 U = skew(Vec3(config.kappa, 0.0, config.tau));
  const Vec3 v(0.0, 0.0, 1.0);
  const double h = s / static_cast<double>(n_steps);

  Vec3 r = Vec3::Zero();
  Mat3 R = Mat3::Identity();
  for (int i = 0; i < n_steps; ++i) {
    // k-coefficients for the coupled system r' = R v, R' = R U.
    const Vec3 kr1 = R * v;
    const Mat3 kR1 = R * U;
    const Vec3 kr2 = (R + 0.5 * h * kR1) * v;
    const Mat3 kR2 = (R + 0.5 * h * kR1) * U;
    const Vec3 kr3 = (R + 0.5 * h * kR2) * v;
    const Mat3 kR3 = (R + 0.5 * h * kR2) * U;
    const Vec3 kr4 = (R + h * kR3) * v;
    const Mat3 kR4 = (R + h * kR3) * U;
    r += (h / 6.0) * (kr1 + 2.0 * kr2 + 2.0 * kr3 + kr4);
    R += (h / 6.0) * (kR1 + 2.0 * kR2 + 2.0 * kR3 + kR4);
  }
  return Pose{r, R};
}

namespace detail {

void rotation_log(const Mat3& R, double& angle, Vec3& axis) {
  Eigen::Quaterniond q(R);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const double vnorm = q.vec().norm();
  angle = 2.0 * std::atan2(vnorm, q.w());
  axis = vnorm > 1e-300 ? Vec3(q.vec() / vnorm) : Vec3(1.0, 0.0, 0.0);
}

}  // namespace detail

ConfigEstimate estimate_config(const Pose& tip, const RodParams& params,
                               std::optional<ArmConfig> prior) {
  params.validate();
  const double L = params.length;

  double angle;
  Vec3 axis;
  detail::rotation_log(tip.orientation, angle, axis);

  // Rotation vectors of magnitude < 2*pi consistent with the measured
  // orientation: the principal log and its complement.  Workspace strains
  // keep the total rotation below 2*pi, so these two cover every case.
  const Vec3 candidates[2] = {angle * axis, (angle - 2.0 * M_PI) * axis};

  struct Scored {
    ArmConfig config;
    double residual;
  };
  Scored scored[2];
  for (int i = 0; i < 2; ++i) {
    const Vec3& w = candidates[i];
    const ArmConfig c(w.x() / L, w.z() / L);
    const Pose fk = forward_pose_unchecked(c.kappa, c.tau, L);
    scored[i] = {c, std::abs(w.y()) / L + (fk.position - tip.position).norm()};
  }

  // Pick the candidate whose forward model better matches the measured
  // position; with a prior, let it break near-ties (noisy measurements near
  // the branch boundary).
  int pick = scored[1].residual < scored[0].residual ? 1 : 0;
  if (prior && std::abs(scored[0].residual - scored[1].residual) < 1e-9) {
    const auto dist = [&](const ArmConfig& c) {
      return std::hypot(c.kappa - prior->kappa, c.tau - prior->tau);
    };
    pick = dist(scored[1].config) < dist(scored[0].config) ? 1 : 0;
  }

  ConfigEstimate best;
  // Polish the winning branch on the full 6-d pose residual: exact poses are
  // already at the optimum (the refinement returns immediately), while for
  // noisy measurements this replaces the log-map estimate — which discards
  // the inconsistent part of the rotation — with the least-squares fit.
  best.config = refine_config(scored[pick].config, tip, L);
  {
    const Pose fk = forward_pose_unchecked(best.config.kappa, best.config.tau, L);
    best.residual =
        std::abs(angle * axis.y()) / L + (fk.position - tip.position).norm();
  }

  if (std::abs(angle - M_PI) < 1e-6) {
    // Orientation alone cannot pick the branch here; polish every seed on
    // the full pose residual and keep the best fit.
    std::vector<ArmConfig> seeds;
    if (prior) seeds.push_back(*prior);
    seeds.push_back(scored[0].config);
    seeds.push_back(scored[1].config);

    double best_cost = std::numeric_limits<double>::infinity();
    ArmConfig best_fit = best.config;
    for (const ArmConfig& seed : seeds) {
      const ArmConfig refined = refine_config(seed, tip, L);
      const double cost = pose_residual(refined, tip, L).cost;
      if (cost < best_cost) {
        best_cost = cost;
        best_fit = refined;
      }
    }
    const Pose fk = forward_pose_unchecked(best_fit.kappa, best_fit.tau, L);
    best.config = best_fit;
    best.residual =
        std::abs(angle * axis.y()) / L + (fk.position - tip.position).norm();
    best.degenerate = true;
  }

  return best;
}

}  // namespace scaservo
