#include "scaservo/eval.hpp"

#include "scaservo/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace scaservo {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Policies

SacPolicy::SacPolicy(std::shared_ptr<const Mlp> actor, const Normalizer& norm,
                     bool stochastic, std::uint64_t seed)
    : actor_(std::move(actor)), norm_(norm), stochastic_(stochastic), rng_(seed) {}

Action SacPolicy::act(const StateVector& state, const Env&) {
  const auto raw = state.flatten();
  const Eigen::Vector2d a = stochastic_ ? act_sample(*actor_, norm_, raw, rng_)
                                        : act_mean(*actor_, norm_, raw);
  return Action{a.x(), a.y()};
}

Action RandomPolicy::act(const StateVector&, const Env&) {
  return Action{rng_.uniform(-1.0, 1.0), rng_.uniform(-1.0, 1.0)};
}

OraclePolicy::OraclePolicy(const RunConfig& cfg) : cfg_(cfg) {}

void OraclePolicy::begin_episode(const Env& env) {
  const auto [goal, dist] = solve(cfg_, env.target());
  goal_ = goal;
  best_dist_ = dist;
}

Action OraclePolicy::act(const StateVector&, const Env& env) {
  const ArmConfig& cur = env.config();
  return Action{
      std::clamp((goal_.kappa - cur.kappa) / cfg_.env.action_scale_kappa, -1.0, 1.0),
      std::clamp((goal_.tau - cur.tau) / cfg_.env.action_scale_tau, -1.0, 1.0)};
}

std::pair<ArmConfig, double> OraclePolicy::solve(const RunConfig& cfg,
                                                 const Vec3& target) {
  const CameraSpec intr = cfg.distal_camera_intrinsics();

  // Centering error of the target as seen from the tip at (kappa, tau);
  // configurations that cannot see the target score by pointing error,
  // offset so any visible configuration beats them.
  const auto score = [&](double k, double t) {
    const Pose tip = tip_pose(ArmConfig(k, t), cfg.rod);
    const CameraSpec cam = distal_camera(tip, intr);
    const Detection det = sphere_detection(cam, target, cfg.env.target_radius);
    if (det.visible) return center_distance_px(cam, det);
    const Vec3 tangent = tip.orientation.col(2);
    const Vec3 to_goal = target - tip.position;
    const double ang =
        std::atan2(tangent.cross(to_goal).norm(), tangent.dot(to_goal));
    return 1e7 + ang * 1e5;
  };

  const Interval kr = cfg.env.kappa_range;
  const Interval tr = cfg.env.tau_range;

  double best_k = kr.lo, best_t = tr.lo;
  double best = std::numeric_limits<double>::infinity();
  const int nk = 61, nt = 121;
  for (int i = 0; i < nk; ++i) {
    const double k = kr.lo + kr.width() * i / (nk - 1);
    for (int j = 0; j < nt; ++j) {
      const double t = tr.lo + tr.width() * j / (nt - 1);
      const double s = score(k, t);
      if (s < best) {
        best = s;
        best_k = k;
        best_t = t;
      }
    }
  }

  // Two local refinements, each shrinking the window tenfold.
  double wk = kr.width() / (nk - 1), wt = tr.width() / (nt - 1);
  for (int stage = 0; stage < 2; ++stage) {
    const double k0 = best_k, t0 = best_t;
    for (int i = -10; i <= 10; ++i) {
      const double k = kr.clamp(k0 + wk * i / 10.0);
      for (int j = -10; j <= 10; ++j) {
        const double t = tr.clamp(t0 + wt * j / 10.0);
        const double s = score(k, t);
        if (s < best) {
          best = s;
          best_k = k;
          best_t = t;
        }
      }
    }
    wk /= 10.0;
    wt /= 10.0;
  }

  const double dist = best >= 1e7 ? std::numeric_limits<double>::infinity() : best;
  return {ArmConfig(best_k, best_t), dist};
}

PolicyFactory sac_policy_factory(const std::string& checkpoint_path,
                                 const RunConfig& cfg, bool stochastic) {
  const Checkpoint ck = load_checkpoint(checkpoint_path, cfg);
  auto actor = std::make_shared<const Mlp>(ck.nets.actor);
  const Normalizer norm = ck.normalizer;
  return [actor, norm, stochastic](std::uint64_t seed) -> std::unique_ptr<Policy> {
    return std::make_unique<SacPolicy>(actor, norm, stochastic,
                                       derive_seed(seed, "sac-policy"));
  };
}

PolicyFactory random_policy_factory() {
  return [](std::uint64_t seed) -> std::unique_ptr<Policy> {
    return std::make_unique<RandomPolicy>(derive_seed(seed, "random-policy"));
  };
}

PolicyFactory oracle_policy_factory(const RunConfig& cfg) {
  return [cfg](std::uint64_t) -> std::unique_ptr<Policy> {
    return std::make_unique<OraclePolicy>(cfg);
  };
}

// ---------------------------------------------------------------------------
// Test points and plans

TestPointSet make_test_point_set(const EvalConfig& eval) {
  TestPointSet set;
  set.trials_per_point = eval.trials_per_point;
  for (size_t di = 0; di < eval.distances_m.size(); ++di) {
    for (size_t hi = 0; hi < eval.heights_m.size(); ++hi) {
      for (double az_deg : eval.azimuths_deg) {
        const double az = az_deg * M_PI / 180.0;
        TestPoint p;
        // Azimuth 0 faces the arm's bending direction (-y); positive
        // azimuths swing toward +x.
        p.position = Vec3(eval.distances_m[di] * std::sin(az),
                          -eval.distances_m[di] * std::cos(az),
                          eval.heights_m[hi]);
        p.distance_band = static_cast<int>(di);
        p.height_band = static_cast<int>(hi);
        set.points.push_back(p);
      }
    }
  }
  return set;
}

std::vector<EpisodePlan> plans_from_point_set(const TestPointSet& set,
                                              std::uint64_t master_seed) {
  std::vector<EpisodePlan> plans;
  for (size_t pi = 0; pi < set.points.size(); ++pi) {
    for (int trial = 0; trial < set.trials_per_point; ++trial) {
      EpisodePlan plan;
      plan.seed = derive_seed(master_seed, "point-episode",
                              (static_cast<std::uint64_t>(pi) << 16) |
                                  static_cast<std::uint64_t>(trial));
      plan.target = set.points[pi].position;
      plan.point_index = static_cast<int>(pi);
      plan.trial = trial;
      plans.push_back(plan);
    }
  }
  return plans;
}

std::vector<EpisodePlan> random_goal_plans(int episodes,
                                           std::uint64_t master_seed) {
  std::vector<EpisodePlan> plans;
  plans.reserve(static_cast<size_t>(episodes));
  for (int i = 0; i < episodes; ++i) {
    EpisodePlan plan;
    plan.seed = derive_seed(master_seed, "random-episode",
                            static_cast<std::uint64_t>(i));
    plan.point_index = -1;
    plan.trial = 0;
    plans.push_back(plan);
  }
  return plans;
}

// ---------------------------------------------------------------------------
// Episode running

namespace {

EpisodeRecord run_one_episode(const RunConfig& cfg, Policy& policy,
                              const EpisodePlan& plan, PipelineMode mode) {
  Env env(cfg);
  StateVector s = plan.point_index >= 0
                      ? env.reset_to_target(plan.seed, plan.target)
                      : env.reset(plan.seed);

  std::unique_ptr<ServoLoop> servo;
  if (mode == PipelineMode::kDeploySim) {
    servo = std::make_unique<ServoLoop>(PlantModel(cfg.plant), cfg.rod,
                                        cfg.servo,
                                        derive_seed(plan.seed, "servo-noise"));
  }

  policy.begin_episode(env);

  EpisodeRecord rec;
  rec.seed = plan.seed;
  rec.target = env.target();
  rec.point_index = plan.point_index;
  rec.trial = plan.trial;

  while (!env.episode_done()) {
    const Action a = policy.act(s, env);
    StepResult sr;
    if (mode == PipelineMode::kPureSim) {
      sr = env.step(a);
    } else {
      const ArmConfig goal = env.action_to_goal(a);
      const ServoResult sres = servo->servo_to(goal);
      rec.servo_iterations_total += sres.iterations;
      if (sres.saturated) ++rec.servo_saturated_events;
      sr = env.step_to_config(sres.final_true);
    }

    StepRecord st;
    st.state_after = sr.state.flatten();
    st.action = {a.d_kappa, a.d_tau};
    st.reward = sr.reward;
    st.image_dist_px = sr.image_dist_px;
    st.target_visible = sr.target_visible;
    rec.steps.push_back(st);

    rec.episode_return += sr.reward.total();
    if (sr.target_visible)
      rec.best_image_dist_px = std::min(rec.best_image_dist_px, sr.image_dist_px);
    rec.success = sr.success;
    s = sr.state;
  }
  rec.steps_taken = static_cast<int>(rec.steps.size());
  return rec;
}

}  // namespace

std::vector<EpisodeRecord> run_episodes(const RunConfig& cfg,
                                        const PolicyFactory& make_policy,
                                        const std::vector<EpisodePlan>& plans,
                                        PipelineMode mode, int workers) {
  std::vector<EpisodeRecord> out(plans.size());
  if (workers <= 1) {
    for (size_t i = 0; i < plans.size(); ++i) {
      auto policy = make_policy(plans[i].seed);
      out[i] = run_one_episode(cfg, *policy, plans[i], mode);
    }
    return out;
  }

  std::atomic<size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto work = [&]() {
    try {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= plans.size()) break;
        auto policy = make_policy(plans[i].seed);
        out[i] = run_one_episode(cfg, *policy, plans[i], mode);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(err_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  std::vector<std::thread> pool;
  const int n = std::min<int>(workers, static_cast<int>(plans.size()));
  pool.reserve(static_cast<size_t>(n));
  for (int w = 0; w < n; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

namespace {

// First 1-based step whose visible centering error is within `threshold`;
// 0 when the episode never got there.
int first_step_within(const EpisodeRecord& rec, double threshold) {
  for (size_t i = 0; i < rec.steps.size(); ++i) {
    if (rec.steps[i].target_visible && rec.steps[i].image_dist_px <= threshold)
      return static_cast<int>(i) + 1;
  }
  return 0;
}

ThresholdStat threshold_stat(const std::vector<EpisodeRecord>& records,
                             double threshold) {
  ThresholdStat st;
  st.threshold_px = threshold;
  std::vector<int> steps;
  for (const auto& rec : records) {
    const int s = first_step_within(rec, threshold);
    if (s > 0) {
      ++st.successes;
      steps.push_back(s);
    }
  }
  st.success_rate =
      records.empty() ? 0.0
                      : static_cast<double>(st.successes) / records.size();
  if (steps.empty()) {
    st.mean_steps = std::numeric_limits<double>::quiet_NaN();
    st.median_steps = std::numeric_limits<double>::quiet_NaN();
  } else {
    std::sort(steps.begin(), steps.end());
    double sum = 0.0;
    for (int s : steps) sum += s;
    st.mean_steps = sum / steps.size();
    const size_t n = steps.size();
    st.median_steps = n % 2 == 1
                          ? steps[n / 2]
                          : 0.5 * (steps[n / 2 - 1] + steps[n / 2]);
  }
  return st;
}

}  // namespace

Metrics compute_metrics(const std::vector<EpisodeRecord>& records,
                        const EvalConfig& eval) {
  Metrics m;
  m.episodes = static_cast<int>(records.size());
  m.report_threshold_px = eval.report_threshold_px;

  std::vector<double> thresholds = eval.thresholds_px;
  std::sort(thresholds.begin(), thresholds.end());
  for (double t : thresholds) m.by_threshold.push_back(threshold_stat(records, t));

  const ThresholdStat rep = threshold_stat(records, eval.report_threshold_px);
  m.success_rate = rep.success_rate;
  m.mean_steps_to_goal = rep.mean_steps;
  m.median_steps_to_goal = rep.median_steps;

  for (const auto& rec : records) {
    int bin = kHistogramBins - 1;
    if (std::isfinite(rec.best_image_dist_px)) {
      bin = std::min(static_cast<int>(rec.best_image_dist_px / kHistogramBinPx),
                     kHistogramBins - 1);
    }
    ++m.histogram[static_cast<size_t>(bin)];
  }

  // Repeatability over test points: all trials of a point must agree on
  // success at the report threshold.
  std::map<int, std::pair<int, int>> by_point;  // point -> (trials, successes)
  for (const auto& rec : records) {
    if (rec.point_index < 0) continue;
    auto& [trials, wins] = by_point[rec.point_index];
    ++trials;
    if (first_step_within(rec, eval.report_threshold_px) > 0) ++wins;
  }
  if (by_point.empty()) {
    m.repeatability = std::numeric_limits<double>::quiet_NaN();
  } else {
    int repeatable = 0;
    for (const auto& [pi, tw] : by_point)
      if (tw.second == 0 || tw.second == tw.first) ++repeatable;
    m.repeatability = static_cast<double>(repeatable) / by_point.size();
  }

  // Regional success table, recovered from the lattice the point indices
  // refer to.
  const TestPointSet set = make_test_point_set(eval);
  std::map<std::pair<int, int>, std::pair<int, int>> by_region;
  for (const auto& rec : records) {
    if (rec.point_index < 0 ||
        rec.point_index >= static_cast<int>(set.points.size()))
      continue;
    const TestPoint& p = set.points[static_cast<size_t>(rec.point_index)];
    auto& [n, wins] = by_region[{p.distance_band, p.height_band}];
    ++n;
    if (first_step_within(rec, eval.report_threshold_px) > 0) ++wins;
  }
  for (const auto& [band, nw] : by_region) {
    RegionStat rs;
    rs.distance_band = band.first;
    rs.height_band = band.second;
    rs.episodes = nw.first;
    rs.successes = nw.second;
    rs.success_rate = static_cast<double>(nw.second) / nw.first;
    m.regions.push_back(rs);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Exports

namespace {

json reward_to_json(const RewardBreakdown& r) {
  return json{{"distance", r.distance}, {"alignment", r.alignment},
              {"image", r.image},       {"capture", r.capture},
              {"penalty", r.penalty},   {"total", r.total()}};
}

RewardBreakdown reward_from_json(const json& j) {
  RewardBreakdown r;
  r.distance = j.at("distance").get<double>();
  r.alignment = j.at("alignment").get<double>();
  r.image = j.at("image").get<double>();
  r.capture = j.at("capture").get<double>();
  r.penalty = j.at("penalty").get<double>();
  return r;
}

json finite_or_null(double x) {
  if (std::isfinite(x)) return json(x);
  return json(nullptr);
}

}  // namespace

void write_episodes_jsonl(const std::vector<EpisodeRecord>& records,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write episode records: " + path);
  for (const auto& rec : records) {
    json j;
    j["seed"] = rec.seed;
    j["target"] = {rec.target.x(), rec.target.y(), rec.target.z()};
    j["point_index"] = rec.point_index;
    j["trial"] = rec.trial;
    j["success"] = rec.success;
    j["steps_taken"] = rec.steps_taken;
    j["best_image_dist_px"] = finite_or_null(rec.best_image_dist_px);
    j["episode_return"] = rec.episode_return;
    j["servo_iterations_total"] = rec.servo_iterations_total;
    j["servo_saturated_events"] = rec.servo_saturated_events;
    json steps = json::array();
    for (const auto& st : rec.steps) {
      json sj;
      sj["state"] = st.state_after;
      sj["action"] = st.action;
      sj["reward"] = reward_to_json(st.reward);
      sj["image_dist_px"] = finite_or_null(st.image_dist_px);
      sj["target_visible"] = st.target_visible;
      steps.push_back(std::move(sj));
    }
    j["steps"] = std::move(steps);
    out << j.dump() << "\n";
  }
}

std::vector<EpisodeRecord> read_episodes_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open episode records: " + path);
  std::vector<EpisodeRecord> records;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("bad episode record at " + path + ":" +
                               std::to_string(lineno) + ": " + e.what());
    }
    EpisodeRecord rec;
    rec.seed = j.at("seed").get<std::uint64_t>();
    const auto& t = j.at("target");
    rec.target = Vec3(t.at(0).get<double>(), t.at(1).get<double>(),
                      t.at(2).get<double>());
    rec.point_index = j.at("point_index").get<int>();
    rec.trial = j.at("trial").get<int>();
    rec.success = j.at("success").get<bool>();
    rec.steps_taken = j.at("steps_taken").get<int>();
    rec.best_image_dist_px = j.at("best_image_dist_px").is_null()
                                 ? std::numeric_limits<double>::infinity()
                                 : j.at("best_image_dist_px").get<double>();
    rec.episode_return = j.at("episode_return").get<double>();
    rec.servo_iterations_total = j.at("servo_iterations_total").get<int>();
    rec.servo_saturated_events = j.at("servo_saturated_events").get<int>();
    for (const auto& sj : j.at("steps")) {
      StepRecord st;
      const auto& sv = sj.at("state");
      for (int i = 0; i < kStateDim; ++i)
        st.state_after[static_cast<size_t>(i)] = sv.at(i).get<double>();
      st.action[0] = sj.at("action").at(0).get<double>();
      st.action[1] = sj.at("action").at(1).get<double>();
      st.reward = reward_from_json(sj.at("reward"));
      st.image_dist_px = sj.at("image_dist_px").is_null()
                             ? std::numeric_limits<double>::infinity()
                             : sj.at("image_dist_px").get<double>();
      st.target_visible = sj.at("target_visible").get<bool>();
      rec.steps.push_back(st);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void export_report(const Metrics& m, const std::vector<EpisodeRecord>& records,
                   const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  {
    json j;
    j["episodes"] = m.episodes;
    j["report_threshold_px"] = m.report_threshold_px;
    j["success_rate"] = m.success_rate;
    j["mean_steps_to_goal"] = finite_or_null(m.mean_steps_to_goal);
    j["median_steps_to_goal"] = finite_or_null(m.median_steps_to_goal);
    j["repeatability"] = finite_or_null(m.repeatability);
    json th = json::array();
    for (const auto& t : m.by_threshold) {
      th.push_back({{"threshold_px", t.threshold_px},
                    {"successes", t.successes},
                    {"success_rate", t.success_rate},
                    {"mean_steps", finite_or_null(t.mean_steps)},
                    {"median_steps", finite_or_null(t.median_steps)}});
    }
    j["by_threshold"] = std::move(th);
    j["histogram_bin_px"] = kHistogramBinPx;
    j["histogram"] = m.histogram;
    json regions = json::array();
    for (const auto& r : m.regions) {
      regions.push_back({{"distance_band", r.distance_band},
                         {"height_band", r.height_band},
                         {"episodes", r.episodes},
                         {"successes", r.successes},
                         {"success_rate", r.success_rate}});
    }
    j["regions"] = std::move(regions);
    std::ofstream out(fs::path(out_dir) / "summary.json");
    out << j.dump(2) << "\n";
  }

  {
    std::ofstream out(fs::path(out_dir) / "histogram.csv");
    out << "bin,count\n";
    char line[64];
    for (int b = 0; b < kHistogramBins - 1; ++b) {
      std::snprintf(line, sizeof line, "%d-%d,%d\n",
                    static_cast<int>(b * kHistogramBinPx),
                    static_cast<int>((b + 1) * kHistogramBinPx),
                    m.histogram[static_cast<size_t>(b)]);
      out << line;
    }
    out << ">" << static_cast<int>((kHistogramBins - 1) * kHistogramBinPx) << ","
        << m.histogram[kHistogramBins - 1] << "\n";
  }

  {
    std::ofstream out(fs::path(out_dir) / "scatter.csv");
    out << "episode,point_index,trial,target_x,target_y,target_z,"
           "best_image_dist_px,success,steps_to_goal\n";
    char line[256];
    for (size_t i = 0; i < records.size(); ++i) {
      const auto& rec = records[i];
      char best[32] = "";
      if (std::isfinite(rec.best_image_dist_px))
        std::snprintf(best, sizeof best, "%.6f", rec.best_image_dist_px);
      const int sg = first_step_within(rec, m.report_threshold_px);
      char sg_text[16] = "";
      if (sg > 0) std::snprintf(sg_text, sizeof sg_text, "%d", sg);
      std::snprintf(line, sizeof line, "%zu,%d,%d,%.6f,%.6f,%.6f,%s,%d,%s\n", i,
                    rec.point_index, rec.trial, rec.target.x(), rec.target.y(),
                    rec.target.z(), best, sg > 0 ? 1 : 0, sg_text);
      out << line;
    }
  }

  {
    std::ofstream out(fs::path(out_dir) / "regions.csv");
    out << "distance_band,height_band,episodes,successes,success_rate\n";
    char line[128];
    for (const auto& r : m.regions) {
      std::snprintf(line, sizeof line, "%d,%d,%d,%d,%.6f\n", r.distance_band,
                    r.height_band, r.episodes, r.successes, r.success_rate);
      out << line;
    }
  }
}

// ---------------------------------------------------------------------------
// Payload sweep

std::vector<PayloadResult> payload_sweep(const RunConfig& base,
                                         const PolicyFactory& make_policy,
                                         const std::vector<double>& payloads_g,
                                         int workers) {
  const TestPointSet set = make_test_point_set(base.eval);
  const auto plans = plans_from_point_set(set, base.seed);

  // Near-limit bend goals, fractions of the nominal zero-payload maximum:
  // reachable when fresh, progressively not as payload eats into the range.
  const PlantConfig nominal_cfg = [&] {
    PlantConfig c = base.plant;
    c.bias_bend = 1.0;
    c.bias_rot = 1.0;
    c.payload_g = 0.0;
    return c;
  }();
  const double nominal_max = PlantModel(nominal_cfg).max_kappa();
  const double battery_fracs[] = {0.975, 0.985, 0.995};

  std::vector<PayloadResult> results;
  for (double payload : payloads_g) {
    RunConfig cfg = base;
    cfg.plant.payload_g = payload;

    PayloadResult pr;
    pr.payload_g = payload;
    const auto records =
        run_episodes(cfg, make_policy, plans, PipelineMode::kDeploySim, workers);
    pr.metrics = compute_metrics(records, cfg.eval);
    for (const auto& rec : records)
      if (rec.servo_saturated_events > 0) ++pr.saturated_episodes;

    for (double frac : battery_fracs) {
      ++pr.extreme_goals;
      ServoLoop servo(PlantModel(cfg.plant), cfg.rod, cfg.servo,
                      derive_seed(base.seed, "extreme-goal",
                                  static_cast<std::uint64_t>(pr.extreme_goals)));
      const ServoResult res = servo.servo_to(ArmConfig(frac * nominal_max, 0.0));
      if (res.saturated && !res.converged) ++pr.extreme_saturated_failures;
    }
    results.push_back(std::move(pr));
  }
  return results;
}

void write_sweep_csv(const std::vector<PayloadResult>& results,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write sweep: " + path);
  out << "payload_g,episodes";
  if (!results.empty()) {
    for (const auto& t : results.front().metrics.by_threshold) {
      char col[48];
      std::snprintf(col, sizeof col, ",success_at_%gpx", t.threshold_px);
      out << col;
    }
  }
  out << ",saturated_episodes,extreme_goals,extreme_saturated_failures\n";
  for (const auto& r : results) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g,%d", r.payload_g, r.metrics.episodes);
    out << buf;
    for (const auto& t : r.metrics.by_threshold) {
      std::snprintf(buf, sizeof buf, ",%.6f", t.success_rate);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%d,%d,%d\n", r.saturated_episodes,
                  r.extreme_goals, r.extreme_saturated_failures);
    out << buf;
  }
}

}  // namespace scaservo
