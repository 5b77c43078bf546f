// scaservo: soft-arm visual servoing pipelines behind one executable.
//
//   train       learn a centering policy in simulation
//   eval        score a policy on the test-point lattice or random goals
//   rollout     print one episode step by step
//   servo-test  drive the pressure controller to a strain goal
//   fk          forward kinematics / strain estimation round trip
//   report      regenerate metric files from stored episode records
//
// Exit codes: 0 success, 2 bad configuration or usage, 3 runtime failure.

#include <CLI11.hpp>

#include "scaservo/checkpoint.hpp"
#include "scaservo/eval.hpp"
#include "scaservo/sac.hpp"
#include "scaservo/servo.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace scaservo;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  int workers = 1;
};

RunConfig load_config(const CommonOpts& opts) {
  RunConfig cfg =
      opts.config_path.empty() ? RunConfig{} : load_run_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_workers = true) {
  cmd->add_option("--config", opts.config_path, "JSON run configuration")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "override the config seed");
  cmd->add_option("--out", opts.out_dir, "output directory");
  if (with_workers)
    cmd->add_option("--workers", opts.workers, "parallel episode workers")
        ->check(CLI::PositiveNumber);
}

void print_pose(const Pose& pose) {
  std::printf("position  %.6f %.6f %.6f\n", pose.position.x(),
              pose.position.y(), pose.position.z());
  for (int r = 0; r < 3; ++r)
    std::printf("rotation  %.6f %.6f %.6f\n", pose.orientation(r, 0),
                pose.orientation(r, 1), pose.orientation(r, 2));
}

void print_metrics(const Metrics& m) {
  std::printf("episodes            %d\n", m.episodes);
  for (const ThresholdStat& t : m.by_threshold) {
    std::printf("success @ %3.0f px    %.3f  (%d/%d)", t.threshold_px,
                t.success_rate, t.successes, m.episodes);
    if (t.successes > 0)
      std::printf("   steps mean %.2f median %.1f", t.mean_steps, t.median_steps);
    std::printf("\n");
  }
  std::printf("report threshold    %.0f px\n", m.report_threshold_px);
  if (std::isfinite(m.repeatability))
    std::printf("repeatability       %.3f\n", m.repeatability);
}

PolicyFactory make_policy_factory(const std::string& policy,
                                  const std::string& checkpoint_path,
                                  const RunConfig& cfg) {
  if (policy == "random") return random_policy_factory();
  if (policy == "oracle") return oracle_policy_factory(cfg);
  if (checkpoint_path.empty())
    throw ConfigError("--checkpoint is required with the trained policy");
  return sac_policy_factory(checkpoint_path, cfg);
}

int cmd_train(const CommonOpts& opts) {
  const RunConfig cfg = load_config(opts);
  const TrainResult res = train_sac(cfg, opts.out_dir, &std::cout);
  std::printf("trained %lld steps in %.1f s  (%lld episodes, %lld updates)\n",
              static_cast<long long>(cfg.sac.total_steps), res.wall_seconds,
              static_cast<long long>(res.episodes),
              static_cast<long long>(res.gradient_updates));
  std::printf("final eval success  %.3f\n", res.final_eval_success);
  std::printf("best eval success   %.3f\n", res.best_eval_success);
  std::printf("checkpoint          %s\n", res.checkpoint_path.c_str());
  return kExitOk;
}

int cmd_eval(const CommonOpts& opts, const std::string& checkpoint,
             const std::string& policy, const std::string& mode,
             const std::string& goals, std::optional<double> threshold,
             const std::vector<double>& payloads) {
  RunConfig cfg = load_config(opts);
  if (threshold) {
    cfg.eval.report_threshold_px = *threshold;
    cfg.validate();
  }
  const PipelineMode pm =
      mode == "deploy-sim" ? PipelineMode::kDeploySim : PipelineMode::kPureSim;
  const PolicyFactory factory = make_policy_factory(policy, checkpoint, cfg);

  namespace fs = std::filesystem;
  fs::create_directories(opts.out_dir);

  if (!payloads.empty()) {
    if (pm != PipelineMode::kDeploySim)
      throw ConfigError("--payloads requires --mode deploy-sim");
    const auto sweep = payload_sweep(cfg, factory, payloads, opts.workers);
    const std::string path = (fs::path(opts.out_dir) / "payload_sweep.csv").string();
    write_sweep_csv(sweep, path);
    for (const PayloadResult& r : sweep) {
      std::printf("payload %5.1f g  success@%gpx %.3f  saturated episodes %d  "
                  "extreme failures %d/%d\n",
                  r.payload_g, cfg.eval.report_threshold_px,
                  r.metrics.success_rate, r.saturated_episodes,
                  r.extreme_saturated_failures, r.extreme_goals);
    }
    std::printf("sweep written to %s\n", path.c_str());
    return kExitOk;
  }

  const std::vector<EpisodePlan> plans =
      goals == "random"
          ? random_goal_plans(cfg.eval.episodes, cfg.seed)
          : plans_from_point_set(make_test_point_set(cfg.eval), cfg.seed);
  const auto records = run_episodes(cfg, factory, plans, pm, opts.workers);
  const Metrics metrics = compute_metrics(records, cfg.eval);

  write_episodes_jsonl(records,
                       (fs::path(opts.out_dir) / "eval_records.jsonl").string());
  export_report(metrics, records, opts.out_dir);
  print_metrics(metrics);
  std::printf("reports written to %s\n", opts.out_dir.c_str());
  return kExitOk;
}

int cmd_rollout(const CommonOpts& opts, const std::string& checkpoint,
                const std::string& policy) {
  const RunConfig cfg = load_config(opts);
  const PolicyFactory factory = make_policy_factory(policy, checkpoint, cfg);

  Env env(cfg);
  const std::uint64_t seed = cfg.seed;
  StateVector s = env.reset(seed);
  auto pol = factory(seed);
  pol->begin_episode(env);

  std::printf("episode seed %llu  target %.4f %.4f %.4f\n",
              static_cast<unsigned long long>(seed), env.target().x(),
              env.target().y(), env.target().z());
  int step = 0;
  while (!env.episode_done()) {
    const Action a = pol->act(s, env);
    const StepResult r = env.step(a);
    s = r.state;
    ++step;
    std::printf(
        "step %d  action [%+.3f %+.3f]  kappa %.3f tau %.3f  "
        "reward %.3f (d %.3f a %.3f i %.3f c %.0f p %.0f)  d_i ",
        step, a.d_kappa, a.d_tau, s.kappa, s.tau, r.reward.total(),
        r.reward.distance, r.reward.alignment, r.reward.image,
        r.reward.capture, r.reward.penalty);
    if (r.target_visible)
      std::printf("%.1f px\n", r.image_dist_px);
    else
      std::printf("-- (not visible)\n");
    if (r.done) {
      if (r.success)
        std::printf("success: target centered within %.0f px\n",
                    cfg.env.success_px);
      else
        std::printf("episode over after %d steps without capture\n", step);
    }
  }
  return kExitOk;
}

int cmd_servo_test(const CommonOpts& opts, double kappa, double tau) {
  const RunConfig cfg = load_config(opts);
  const PlantModel plant(cfg.plant);
  ServoLoop servo(plant, cfg.rod, cfg.servo, derive_seed(cfg.seed, "servo-noise"));
  const ServoResult res = servo.servo_to(ArmConfig(kappa, tau));
  for (const ServoIteration& it : res.history) {
    std::printf("iter %2d  bend %7.2f kPa  rot %+8.2f kPa  estimate "
                "(%7.3f, %+7.3f)  err (%+.3f, %+.3f)\n",
                it.iteration, it.actuation.bend_kpa,
                signed_rotation_kpa(it.actuation), it.estimated.kappa,
                it.estimated.tau, it.err_kappa, it.err_tau);
  }
  std::printf("%s in %d iteration%s  final estimate (%.3f, %+.3f)  "
              "true (%.3f, %+.3f)%s\n",
              res.converged ? "converged" : "did not converge", res.iterations,
              res.iterations == 1 ? "" : "s", res.final_estimate.kappa,
              res.final_estimate.tau, res.final_true.kappa, res.final_true.tau,
              res.saturated ? "  [pressure limit hit]" : "");
  return res.converged ? kExitOk : kExitRuntime;
}

int cmd_fk(const CommonOpts& opts, double kappa, double tau,
           std::optional<double> s_arc) {
  const RunConfig cfg = load_config(opts);
  const double s = s_arc.value_or(cfg.rod.length);
  const Pose pose = forward_pose(ArmConfig(kappa, tau), s, cfg.rod);
  std::printf("arc length %.6f of %.6f m\n", s, cfg.rod.length);
  print_pose(pose);
  if (s == cfg.rod.length) {
    const ConfigEstimate est = estimate_config(pose, cfg.rod);
    std::printf("estimate  kappa %.6f  tau %.6f  residual %.2e%s\n",
                est.config.kappa, est.config.tau, est.residual,
                est.degenerate ? "  [degenerate half-turn pose]" : "");
  }
  return kExitOk;
}

int cmd_report(const CommonOpts& opts, const std::string& records_path,
               std::optional<double> threshold) {
  RunConfig cfg = load_config(opts);
  if (threshold) {
    cfg.eval.report_threshold_px = *threshold;
    cfg.validate();
  }
  const auto records = read_episodes_jsonl(records_path);
  const Metrics metrics = compute_metrics(records, cfg.eval);
  std::filesystem::create_directories(opts.out_dir);
  export_report(metrics, records, opts.out_dir);
  print_metrics(metrics);
  std::printf("reports written to %s\n", opts.out_dir.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"soft continuum arm visual servoing toolkit"};
  app.require_subcommand(1);

  CommonOpts train_opts;
  CLI::App* train = app.add_subcommand("train", "train the centering policy");
  add_common(train, train_opts, /*with_workers=*/false);

  CommonOpts eval_opts;
  std::string eval_checkpoint, eval_policy = "sac", eval_mode = "pure-sim";
  std::string eval_goals = "lattice";
  std::optional<double> eval_threshold;
  std::vector<double> eval_payloads;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a policy");
  add_common(eval, eval_opts);
  eval->add_option("--checkpoint", eval_checkpoint, "trained policy file")
      ->check(CLI::ExistingFile);
  eval->add_option("--policy", eval_policy, "sac | random | oracle")
      ->check(CLI::IsMember({"sac", "random", "oracle"}));
  eval->add_option("--mode", eval_mode, "pure-sim | deploy-sim")
      ->check(CLI::IsMember({"pure-sim", "deploy-sim"}));
  eval->add_option("--goals", eval_goals, "lattice | random")
      ->check(CLI::IsMember({"lattice", "random"}));
  eval->add_option("--threshold", eval_threshold, "report threshold (px)");
  eval->add_option("--payloads", eval_payloads,
                   "payload sweep (grams, deploy-sim only)")
      ->delimiter(',');

  CommonOpts rollout_opts;
  std::string rollout_checkpoint, rollout_policy = "sac";
  CLI::App* rollout = app.add_subcommand("rollout", "print one episode");
  add_common(rollout, rollout_opts, /*with_workers=*/false);
  rollout->add_option("--checkpoint", rollout_checkpoint, "trained policy file")
      ->check(CLI::ExistingFile);
  rollout->add_option("--policy", rollout_policy, "sac | random | oracle")
      ->check(CLI::IsMember({"sac", "random", "oracle"}));

  CommonOpts servo_opts;
  double servo_kappa = 0.0, servo_tau = 0.0;
  CLI::App* servo = app.add_subcommand("servo-test", "drive the local controller");
  add_common(servo, servo_opts, /*with_workers=*/false);
  servo->add_option("kappa", servo_kappa, "goal bending strain")->required();
  servo->add_option("tau", servo_tau, "goal torsional strain")->required();

  CommonOpts fk_opts;
  double fk_kappa = 0.0, fk_tau = 0.0;
  std::optional<double> fk_s;
  CLI::App* fk = app.add_subcommand("fk", "forward kinematics query");
  add_common(fk, fk_opts, /*with_workers=*/false);
  fk->add_option("kappa", fk_kappa, "bending strain")->required();
  fk->add_option("tau", fk_tau, "torsional strain")->required();
  fk->add_option("s", fk_s, "arc length (default: full length)");

  CommonOpts report_opts;
  std::string report_records;
  std::optional<double> report_threshold;
  CLI::App* report = app.add_subcommand("report", "metrics from stored records");
  add_common(report, report_opts, /*with_workers=*/false);
  report->add_option("--records", report_records, "episode records (jsonl)")
      ->required()
      ->check(CLI::ExistingFile);
  report->add_option("--threshold", report_threshold, "report threshold (px)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // CLI11's help paths return 0; anything else is a usage problem.
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (train->parsed()) return cmd_train(train_opts);
    if (eval->parsed())
      return cmd_eval(eval_opts, eval_checkpoint, eval_policy, eval_mode,
                      eval_goals, eval_threshold, eval_payloads);
    if (rollout->parsed())
      return cmd_rollout(rollout_opts, rollout_checkpoint, rollout_policy);
    if (servo->parsed()) return cmd_servo_test(servo_opts, servo_kappa, servo_tau);
    if (fk->parsed()) return cmd_fk(fk_opts, fk_kappa, fk_tau, fk_s);
    if (report->parsed())
      return cmd_report(report_opts, report_records, report_threshold);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitConfig;
}
