// Microbenchmarks for the hot paths: rod kinematics, scene observation,
// environment stepping, SAC gradient updates, and the local servo loop.
#include "scaservo/environment.hpp"
#include "scaservo/eval.hpp"
#include "scaservo/rod_model.hpp"
#include "scaservo/sac.hpp"
#include "scaservo/servo.hpp"
#include "scaservo/vision.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace scaservo;

void BM_TipPose(benchmark::State& state) {
  const RodParams rod;
  double kappa = 0.1;
  for (auto _ : state) {
    const Pose tip = tip_pose(ArmConfig(kappa, -3.0), rod);
    benchmark::DoNotOptimize(tip.position);
    kappa = kappa < 11.0 ? kappa + 0.05 : 0.1;  // sweep, defeat caching
  }
}
BENCHMARK(BM_TipPose);

void BM_CenterlineSamples(benchmark::State& state) {
  const RodParams rod;
  const ArmConfig cfg(6.0, -3.0);
  for (auto _ : state) {
    const auto poses = centerline_samples(cfg, rod);
    benchmark::DoNotOptimize(poses.back());
  }
}
BENCHMARK(BM_CenterlineSamples);

void BM_EstimateConfig(benchmark::State& state) {
  const RodParams rod;
  double kappa = 0.5;
  for (auto _ : state) {
    const Pose tip = tip_pose(ArmConfig(kappa, 2.0), rod);
    const ConfigEstimate est = estimate_config(tip, rod);
    benchmark::DoNotOptimize(est.config.kappa);
    kappa = kappa < 9.0 ? kappa + 0.05 : 0.5;
  }
}
BENCHMARK(BM_EstimateConfig);

void BM_ObserveScene(benchmark::State& state) {
  const RunConfig cfg;
  const CameraSpec base = cfg.base_camera_spec();
  const ArmConfig arm(5.0, 1.0);
  Scene scene;
  for (const Pose& p : centerline_samples(arm, cfg.rod))
    scene.marker_centers.push_back(p.position);
  scene.marker_radius = cfg.rod.marker_radius;
  scene.target_center = Vec3(0.0, -0.29, 0.2);
  scene.target_radius = cfg.env.target_radius;
  const CameraSpec distal =
      distal_camera(tip_pose(arm, cfg.rod), cfg.distal_camera_intrinsics());
  for (auto _ : state) {
    const SceneObservation obs = observe_scene(scene, base, distal);
    benchmark::DoNotOptimize(obs.target_in_distal.centroid);
  }
}
BENCHMARK(BM_ObserveScene);

void BM_EnvStep(benchmark::State& state) {
  const RunConfig cfg;
  Env env(cfg);
  std::uint64_t seed = 0;
  env.reset(seed);
  for (auto _ : state) {
    const StepResult r = env.step(Action{0.05, -0.03});
    benchmark::DoNotOptimize(r.reward);
    if (r.done) env.reset(++seed);
  }
}
BENCHMARK(BM_EnvStep);

void BM_PolicyActMean(benchmark::State& state) {
  const RunConfig cfg;
  Rng rng(1);
  const SacNets nets = SacNets::make(cfg.sac.hidden, rng);
  const Normalizer norm = Normalizer::for_config(cfg);
  Env env(cfg);
  const std::array<double, kStateDim> obs = env.reset(3).flatten();
  for (auto _ : state) {
    const Eigen::Vector2d a = act_mean(nets.actor, norm, obs);
    benchmark::DoNotOptimize(a);
  }
}
BENCHMARK(BM_PolicyActMean);

void BM_SacUpdate(benchmark::State& state) {
  RunConfig cfg;
  Rng rng(2);
  SacNets nets = SacNets::make(cfg.sac.hidden, rng);
  SacOptimizers opt = SacOptimizers::make(nets, cfg.sac.lr);
  const Normalizer norm = Normalizer::for_config(cfg);
  ReplayBuffer buffer(4096);
  Env env(cfg);
  std::uint64_t seed = 0;
  StateVector s = env.reset(seed);
  while (buffer.size() < 1024) {
    const Action a{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const StepResult r = env.step(a);
    buffer.push(Transition{s.flatten(),
                           {a.d_kappa, a.d_tau},
                           r.reward.total(),
                           r.state.flatten(),
                           r.done && r.success});
    s = r.state;
    if (r.done) s = env.reset(++seed);
  }
  for (auto _ : state) {
    const auto idx = buffer.sample_indices(cfg.sac.batch_size, rng);
    const SacUpdateStats stats =
        sac_update(nets, opt, buffer, idx, norm, cfg.sac, rng);
    benchmark::DoNotOptimize(stats);
  }
}
BENCHMARK(BM_SacUpdate)->Unit(benchmark::kMillisecond);

void BM_ServoSolve(benchmark::State& state) {
  const RunConfig cfg;
  PlantConfig biased = cfg.plant;
  biased.bias_bend = 1.1;
  biased.bias_rot = 0.92;
  const PlantModel plant(biased);
  for (auto _ : state) {
    ServoLoop loop(plant, cfg.rod, cfg.servo);
    const ServoResult r = loop.servo_to(ArmConfig(7.0, -4.0));
    benchmark::DoNotOptimize(r.iterations);
  }
}
BENCHMARK(BM_ServoSolve);

void BM_OracleSolve(benchmark::State& state) {
  const RunConfig cfg;
  for (auto _ : state) {
    const auto [goal, best] = OraclePolicy::solve(cfg, Vec3(0.05, -0.3, 0.2));
    benchmark::DoNotOptimize(goal);
    benchmark::DoNotOptimize(best);
  }
}
BENCHMARK(BM_OracleSolve)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
