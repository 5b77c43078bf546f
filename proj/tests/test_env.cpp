#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "scaservo/environment.hpp"

#include <cmath>
#include <stdexcept>

using namespace scaservo;

namespace {

CameraSpec plain_camera() {
  CameraSpec cam;
  cam.pose = Pose::identity();
  return cam;
}

Detection visible_at(double u, double v) {
  Detection det;
  det.centroid = {u, v};
  det.visible = true;
  return det;
}

}  // namespace

TEST_CASE("distance reward halves at the characteristic distance") {
  const CameraSpec cam = plain_camera();
  const Detection none;  // invisible
  Pose tip = Pose::identity();

  // Target exactly at the tip: full distance and alignment credit.
  RewardBreakdown r =
      compute_reward(tip, Vec3(0, 0, 0), none, cam, 100.0);
  CHECK(r.distance == doctest::Approx(1.0));
  CHECK(r.alignment == doctest::Approx(1.0));  // defined as aligned at d = 0
  CHECK(r.image == 0.0);
  CHECK(r.capture == 0.0);
  CHECK(r.penalty == doctest::Approx(-10.0));
  CHECK(r.total() == doctest::Approx(1.0 + 1.0 - 10.0));

  // d = pi/40 m along the tangent: distance reward is exactly 1/2 and the
  // alignment stays perfect.
  r = compute_reward(tip, Vec3(0, 0, M_PI / 40.0), none, cam, 100.0);
  CHECK(r.distance == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.alignment == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("alignment reward halves at one eighth of a quarter turn") {
  const CameraSpec cam = plain_camera();
  const Detection none;
  const Pose tip = Pose::identity();
  // Line of sight at angle pi/8 from the tangent (the local z axis).
  const double d = 0.05;
  const Vec3 target = d * Vec3(std::sin(M_PI / 8), 0.0, std::cos(M_PI / 8));
  const RewardBreakdown r = compute_reward(tip, target, none, cam, 100.0);
  CHECK(r.alignment == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.distance ==
        doctest::Approx(std::exp(-std::log(2.0) * std::pow(40.0 * d / M_PI, 2)))
            .epsilon(1e-12));
}

TEST_CASE("image reward follows the centering Gaussian only when visible") {
  const CameraSpec cam = plain_camera();
  const Pose tip = Pose::identity();
  const Vec3 far_target(1.0, 1.0, 1.0);  // keeps distance/alignment tiny

  // Perfectly centered: the full 5-point image reward.
  RewardBreakdown r =
      compute_reward(tip, far_target, visible_at(320, 240), cam, 100.0);
  CHECK(r.image == doctest::Approx(5.0));
  CHECK(r.capture == doctest::Approx(128.0));  // 0 px <= 100 px

  // At the characteristic 400 px the reward drops to 5*exp(-2*pi).
  r = compute_reward(tip, far_target, visible_at(720, 240), cam, 100.0);
  CHECK(r.image == doctest::Approx(5.0 * std::exp(-2.0 * M_PI)).epsilon(1e-12));
  CHECK(r.capture == 0.0);

  // Same centroid, invisible: no image credit at all.
  Detection hidden = visible_at(320, 240);
  hidden.visible = false;
  r = compute_reward(tip, far_target, hidden, cam, 100.0);
  CHECK(r.image == 0.0);
  CHECK(r.capture == 0.0);
}

TEST_CASE("capture bonus boundary is inclusive") {
  const CameraSpec cam = plain_camera();
  const Pose tip = Pose::identity();
  const Vec3 target(1.0, 1.0, 1.0);
  // Exactly 100 px off center.
  RewardBreakdown r = compute_reward(tip, target, visible_at(420, 240), cam, 100.0);
  CHECK(r.capture == doctest::Approx(128.0));
  // A hair beyond.
  r = compute_reward(tip, target, visible_at(420.001, 240), cam, 100.0);
  CHECK(r.capture == 0.0);
}

TEST_CASE("state vector layout matches the documented order") {
  RunConfig cfg;
  Env env(cfg);
  const StateVector s = env.reset_to_target(3, Vec3(0.05, -0.10, 0.20));
  const auto f = s.flatten();
  CHECK(f[0] == s.tip_position.x());
  CHECK(f[1] == s.tip_position.y());
  CHECK(f[2] == s.tip_position.z());
  CHECK(f[3] == s.tip_quat[0]);
  CHECK(f[6] == s.tip_quat[3]);
  CHECK(f[7] == s.kappa);
  CHECK(f[8] == s.tau);
  CHECK(f[9] == s.tip_base_px.u);
  CHECK(f[10] == s.tip_base_px.v);
  CHECK(f[11] == s.target_base_px.u);
  CHECK(f[12] == s.target_base_px.v);
  CHECK(f[13] == s.target_distal_px.u);
  CHECK(f[14] == s.target_distal_px.v);
  CHECK(f[15] == s.target_visible);

  // At the straight start the tip is at (0, 0, L) with identity orientation.
  CHECK(s.tip_position.z() == doctest::Approx(cfg.rod.length));
  CHECK(s.tip_quat[0] == doctest::Approx(1.0));
  CHECK(s.kappa == 0.0);
  CHECK(s.tau == 0.0);
}

TEST_CASE("quaternion observation is unit length with non-negative w") {
  RunConfig cfg;
  Env env(cfg);
  Rng rng(17);
  env.reset(5);
  for (int i = 0; i < 40; ++i) {
    if (env.episode_done()) env.reset(100 + static_cast<std::uint64_t>(i));
    const StepResult res =
        env.step(Action{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    const auto& q = res.state.tip_quat;
    CHECK(q.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(q[0] >= 0.0);
  }
}

TEST_CASE("reset is deterministic in the seed") {
  RunConfig cfg;
  Env a(cfg), b(cfg);
  const auto sa = a.reset(42).flatten();
  const auto sb = b.reset(42).flatten();
  CHECK(sa == sb);
  CHECK((a.target() - b.target()).norm() == 0.0);
  const auto sc = b.reset(43).flatten();
  CHECK((a.target() - b.target()).norm() > 0.0);
  (void)sc;
}

TEST_CASE("sampled targets stay inside the goal box") {
  RunConfig cfg;
  Env env(cfg);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    env.reset(seed);
    const Vec3& t = env.target();
    for (int k = 0; k < 3; ++k) {
      CHECK(t[k] >= cfg.env.target_box_min[k]);
      CHECK(t[k] <= cfg.env.target_box_max[k]);
    }
  }
}

TEST_CASE("actions are clamped to the unit box before scaling") {
  RunConfig cfg;
  Env a(cfg), b(cfg);
  a.reset(9);
  b.reset(9);
  const auto ra = a.step(Action{10.0, -42.0});
  const auto rb = b.step(Action{1.0, -1.0});
  CHECK(ra.state.flatten() == rb.state.flatten());
  CHECK(ra.reward.total() == doctest::Approx(rb.reward.total()));
}

TEST_CASE("commanded goal accumulates and clamps to the workspace") {
  RunConfig cfg;
  Env env(cfg);
  env.reset(1);
  // Scale is 3 per unit action.
  ArmConfig g = env.action_to_goal(Action{0.5, -0.25});
  CHECK(g.kappa == doctest::Approx(1.5));
  CHECK(g.tau == doctest::Approx(-0.75));
  // kappa is confined to [0, 12]: a negative move from the straight start
  // stays at the lower edge.
  g = env.action_to_goal(Action{-1.0, 0.0});
  CHECK(g.kappa == 0.0);
  // March to the top of the range and push past it.
  for (int i = 0; i < 5 && !env.episode_done(); ++i) env.step(Action{1.0, 0.0});
  if (!env.episode_done()) {
    CHECK(env.config().kappa == doctest::Approx(12.0));
    g = env.action_to_goal(Action{1.0, 0.0});
    CHECK(g.kappa == doctest::Approx(12.0));
  }
}

TEST_CASE("episodes time out after max_steps") {
  RunConfig cfg;
  Env env(cfg);
  // A goal below the base is behind the tip camera at the straight start and
  // stays uncaptured under zero actions.
  env.reset_to_target(11, Vec3(0.0, 0.0, 0.10));
  for (int i = 1; i <= cfg.env.max_steps; ++i) {
    const StepResult res = env.step(Action{0.0, 0.0});
    CHECK(res.done == (i == cfg.env.max_steps));
    CHECK_FALSE(res.success);
  }
  CHECK(env.steps_taken() == cfg.env.max_steps);
  CHECK_THROWS_AS(env.step(Action{0.0, 0.0}), std::logic_error);
}

TEST_CASE("a centered goal ends the episode in success") {
  RunConfig cfg;
  Env env(cfg);
  // Straight ahead of the straight arm's tip camera.
  env.reset_to_target(13, Vec3(0.0, 0.0, 0.40));
  const StepResult res = env.step(Action{0.0, 0.0});
  CHECK(res.success);
  CHECK(res.done);
  CHECK(res.image_dist_px == doctest::Approx(0.0));
  CHECK(res.target_visible);
  CHECK(res.reward.capture == doctest::Approx(128.0));
  CHECK(env.steps_taken() == 1);
  CHECK_THROWS_AS(env.step(Action{0.0, 0.0}), std::logic_error);
}

TEST_CASE("stepping before reset is an error") {
  RunConfig cfg;
  Env env(cfg);
  CHECK_THROWS_AS(env.step(Action{0.0, 0.0}), std::logic_error);
}

TEST_CASE("deployment step accepts any in-bounds configuration") {
  RunConfig cfg;
  Env env(cfg);
  env.reset_to_target(19, Vec3(0.0, 0.0, 0.10));
  // Outside the commanded range (kappa >= 0) but inside the hard bounds:
  // the plant actually reached it, so the environment takes it as-is.
  const StepResult res = env.step_to_config(ArmConfig(-5.0, 2.0));
  CHECK(env.config().kappa == doctest::Approx(-5.0));
  CHECK(env.config().tau == doctest::Approx(2.0));
  CHECK(res.state.kappa == doctest::Approx(-5.0));
  // Beyond the hard bounds: refused.
  CHECK_THROWS_AS(env.step_to_config(ArmConfig(13.0, 0.0)), std::domain_error);
}

TEST_CASE("invisible targets report bounded centroids") {
  RunConfig cfg;
  Env env(cfg);
  // Behind the tip camera: the observation pins the centroid to the frame
  // center and clears the visibility flag.
  const StateVector s = env.reset_to_target(23, Vec3(0.0, 0.0, 0.10));
  CHECK(s.target_visible == 0.0);
  CHECK(s.target_distal_px.u == doctest::Approx(320.0));
  CHECK(s.target_distal_px.v == doctest::Approx(240.0));
  // All pixel observations stay inside their frames whatever the pose.
  Rng rng(29);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    StateVector st = env.reset(seed);
    for (int i = 0; i < cfg.env.max_steps && !env.episode_done(); ++i) {
      const auto res = env.step(Action{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
      st = res.state;
      CHECK(st.tip_base_px.u >= 0.0);
      CHECK(st.tip_base_px.u <= 640.0);
      CHECK(st.target_distal_px.u >= 0.0);
      CHECK(st.target_distal_px.u <= 640.0);
      CHECK(st.target_distal_px.v >= 0.0);
      CHECK(st.target_distal_px.v <= 480.0);
    }
  }
}

TEST_CASE("pixel noise is reproducible from the episode seed") {
  RunConfig cfg;
  cfg.env.pixel_noise_sigma = 2.0;
  Env a(cfg), b(cfg);
  const auto sa = a.reset(77).flatten();
  const auto sb = b.reset(77).flatten();
  CHECK(sa == sb);
  for (int i = 0; i < 3; ++i) {
    const auto ra = a.step(Action{0.3, -0.2});
    const auto rb = b.step(Action{0.3, -0.2});
    CHECK(ra.state.flatten() == rb.state.flatten());
    CHECK(ra.reward.total() == doctest::Approx(rb.reward.total()));
    if (ra.done) break;
  }
  // A different seed shifts the noise.
  Env c(cfg);
  const auto sc = c.reset(78).flatten();
  CHECK(sa != sc);
}

TEST_CASE("per-step reward totals stay within the designed envelope") {
  RunConfig cfg;
  Env env(cfg);
  Rng rng(31);
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    env.reset(seed);
    while (!env.episode_done()) {
      const auto res =
          env.step(Action{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
      CHECK(res.reward.total() >= -10.0);
      CHECK(res.reward.total() <= 1.0 + 1.0 + 5.0 + 128.0 - 10.0);
      CHECK(res.reward.distance >= 0.0);
      CHECK(res.reward.alignment >= 0.0);
      CHECK(res.reward.image >= 0.0);
      CHECK((res.reward.capture == 0.0 || res.reward.capture == 128.0));
      CHECK(res.reward.penalty == -10.0);
      // The capture bonus implies the episode succeeded on this step.
      if (res.reward.capture > 0.0) CHECK(res.success);
    }
  }
}
