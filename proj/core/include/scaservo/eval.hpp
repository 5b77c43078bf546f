#pragma once

#include "scaservo/environment.hpp"
#include "scaservo/plant.hpp"
#include "scaservo/run_config.hpp"
#include "scaservo/sac.hpp"
#include "scaservo/servo.hpp"

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace scaservo {

// ---------------------------------------------------------------------------
// Policies

class Policy {
 public:
  virtual ~Policy() = default;
  // Called once per episode after reset, before the first act().
  virtual void begin_episode(const Env& env) { (void)env; }
  virtual Action act(const StateVector& state, const Env& env) = 0;
};

// Trained-network policy; deterministic (tanh of the mean) by default.
class SacPolicy : public Policy {
 public:
  SacPolicy(std::shared_ptr<const Mlp> actor, const Normalizer& norm,
            bool stochastic = false, std::uint64_t seed = 0);
  Action act(const StateVector& state, const Env& env) override;

 private:
  std::shared_ptr<const Mlp> actor_;
  Normalizer norm_;
  bool stochastic_;
  Rng rng_;
};

// Uniform actions in [-1, 1]^2; the floor any learned policy must beat.
class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  Action act(const StateVector& state, const Env& env) override;

 private:
  Rng rng_;
};

// Simulation-privileged reference policy: grid-searches the configuration
// that best centers the episode's target in the tip camera, then walks
// straight to it at full action speed.  An upper bound on what image-based
// centering can achieve, and the ground truth for "solvable" test points.
class OraclePolicy : public Policy {
 public:
  explicit OraclePolicy(const RunConfig& cfg);
  void begin_episode(const Env& env) override;
  Action act(const StateVector& state, const Env& env) override;

  // The configuration the grid search picked for the current episode.
  const ArmConfig& goal() const { return goal_; }
  // Best achievable centering error found by the search (px; infinite when
  // the target is invisible from everywhere in the workspace).
  double best_image_dist() const { return best_dist_; }

  // Standalone search used by tests: best (config, centering error) for a
  // target under this config's geometry.
  static std::pair<ArmConfig, double> solve(const RunConfig& cfg,
                                            const Vec3& target);

 private:
  RunConfig cfg_;
  ArmConfig goal_;
  double best_dist_ = 0.0;
};

// Fresh policy per episode, seeded for that episode: keeps stochastic
// policies deterministic per-episode no matter how episodes are scheduled
// across workers.
using PolicyFactory =
    std::function<std::unique_ptr<Policy>(std::uint64_t episode_seed)>;

PolicyFactory sac_policy_factory(const std::string& checkpoint_path,
                                 const RunConfig& cfg, bool stochastic = false);
PolicyFactory random_policy_factory();
PolicyFactory oracle_policy_factory(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Test points and episode plans

struct TestPoint {
  Vec3 position = Vec3::Zero();
  int distance_band = 0;
  int height_band = 0;
};

struct TestPointSet {
  std::vector<TestPoint> points;
  int trials_per_point = 2;
};

// Deterministic lattice of goal positions: for every (distance, height,
// azimuth) in the eval config, a point at horizontal range d from the base,
// azimuth measured around the arm's bending direction, at height h.
TestPointSet make_test_point_set(const EvalConfig& eval);

enum class PipelineMode { kPureSim, kDeploySim };

struct EpisodePlan {
  std::uint64_t seed = 0;
  Vec3 target = Vec3::Zero();
  int point_index = -1;  // -1: sample the target from the seed instead
  int trial = 0;
};

// One plan per (point, trial), seeds derived from master_seed.
std::vector<EpisodePlan> plans_from_point_set(const TestPointSet& set,
                                              std::uint64_t master_seed);
// Plans with environment-sampled goals.
std::vector<EpisodePlan> random_goal_plans(int episodes,
                                           std::uint64_t master_seed);

// Runs every plan and returns records in plan order.  workers > 1 runs
// episodes in parallel; results are identical to the single-threaded run
// because each episode's randomness comes only from its plan seed.
// kDeploySim routes every policy action through the local pressure
// controller on the configured plant instead of setting strains directly.
std::vector<EpisodeRecord> run_episodes(const RunConfig& cfg,
                                        const PolicyFactory& make_policy,
                                        const std::vector<EpisodePlan>& plans,
                                        PipelineMode mode, int workers = 1);

// ---------------------------------------------------------------------------
// Metrics

struct ThresholdStat {
  double threshold_px = 0.0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_steps = 0.0;    // NaN when no episode met the threshold
  double median_steps = 0.0;  // NaN when no episode met the threshold
};

struct RegionStat {
  int distance_band = 0;
  int height_band = 0;
  int episodes = 0;
  int successes = 0;  // at the report threshold
  double success_rate = 0.0;
};

inline constexpr int kHistogramBins = 21;  // 20 x 25px over [0,500) + overflow
inline constexpr double kHistogramBinPx = 25.0;

struct Metrics {
  int episodes = 0;
  std::vector<ThresholdStat> by_threshold;  // ascending thresholds
  double report_threshold_px = 0.0;
  double success_rate = 0.0;       // at the report threshold
  double mean_steps_to_goal = 0.0;   // at the report threshold; NaN if none
  double median_steps_to_goal = 0.0;
  double repeatability = 0.0;  // NaN when no episodes belong to test points
  std::array<int, kHistogramBins> histogram{};  // of per-episode best centering error
  std::vector<RegionStat> regions;
};

// Pure summary of episode records; a success at threshold T means the
// episode's best visible centering error was <= T.  Steps-to-goal counts the
// first step reaching the report threshold, averaged over episodes that did.
// Repeatability is the fraction of test points whose trials all agree on
// success at the report threshold.
Metrics compute_metrics(const std::vector<EpisodeRecord>& records,
                        const EvalConfig& eval);

// ---------------------------------------------------------------------------
// Exports (all byte-stable given identical inputs)

void write_episodes_jsonl(const std::vector<EpisodeRecord>& records,
                          const std::string& path);
std::vector<EpisodeRecord> read_episodes_jsonl(const std::string& path);

// Writes summary.json, histogram.csv, scatter.csv and regions.csv.
void export_report(const Metrics& metrics,
                   const std::vector<EpisodeRecord>& records,
                   const std::string& out_dir);

// ---------------------------------------------------------------------------
// Payload robustness sweep

struct PayloadResult {
  double payload_g = 0.0;
  Metrics metrics;
  int saturated_episodes = 0;  // episodes with at least one pressure-limit event
  int extreme_goals = 0;       // near-maximum-bend servo battery size
  int extreme_saturated_failures = 0;
};

// Repeats the full deploy-sim point-set evaluation at each payload (same
// plans and seeds throughout) and, at each payload, drives a battery of
// near-limit bend goals through the servo to count hard saturation failures.
std::vector<PayloadResult> payload_sweep(const RunConfig& base,
                                         const PolicyFactory& make_policy,
                                         const std::vector<double>& payloads_g,
                                         int workers = 1);

void write_sweep_csv(const std::vector<PayloadResult>& results,
                     const std::string& path);

}  // namespace scaservo
