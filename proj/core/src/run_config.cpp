#include "scaservo/run_config.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace scaservo {

using nlohmann::json;

namespace {

// Fails on keys we do not understand; silent typos in config files are much
// worse than a hard error.
void expect_keys(const json& obj, const std::string& where,
                 std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!ok.count(it.key()))
      throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
  }
}

double get_num(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number())
    throw ConfigError(std::string("\"") + key + "\" must be a number");
  return obj[key].get<double>();
}

int get_int(const json& obj, const char* key, int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer())
    throw ConfigError(std::string("\"") + key + "\" must be an integer");
  return obj[key].get<int>();
}

Vec3 get_vec3(const json& obj, const char* key, const Vec3& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& a = obj[key];
  if (!a.is_array() || a.size() != 3 || !a[0].is_number() ||
      !a[1].is_number() || !a[2].is_number())
    throw ConfigError(std::string("\"") + key + "\" must be [x, y, z]");
  return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

Interval get_interval(const json& obj, const char* key, Interval fallback) {
  if (!obj.contains(key)) return fallback;
  const json& a = obj[key];
  if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
    throw ConfigError(std::string("\"") + key + "\" must be [lo, hi]");
  Interval iv{a[0].get<double>(), a[1].get<double>()};
  if (!(iv.lo <= iv.hi))
    throw ConfigError(std::string("\"") + key + "\" has lo > hi");
  return iv;
}

std::vector<double> get_num_list(const json& obj, const char* key,
                                 std::vector<double> fallback) {
  if (!obj.contains(key)) return fallback;
  const json& a = obj[key];
  if (!a.is_array() || a.empty())
    throw ConfigError(std::string("\"") + key + "\" must be a non-empty array");
  std::vector<double> out;
  for (const auto& x : a) {
    if (!x.is_number())
      throw ConfigError(std::string("\"") + key + "\" must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

RunConfig from_json(const json& j) {
  RunConfig cfg;
  expect_keys(j, "config root",
              {"seed", "rod", "strain_bounds", "base_camera", "distal_camera",
               "env", "sac", "plant", "servo", "eval"});

  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      throw ConfigError("\"seed\" must be a non-negative integer");
    const auto s = j["seed"].get<std::int64_t>();
    if (s < 0) throw ConfigError("\"seed\" must be a non-negative integer");
    cfg.seed = static_cast<std::uint64_t>(s);
  }

  if (j.contains("rod")) {
    const json& r = j["rod"];
    expect_keys(r, "rod", {"length", "n_markers", "marker_radius"});
    cfg.rod.length = get_num(r, "length", cfg.rod.length);
    cfg.rod.n_markers = get_int(r, "n_markers", cfg.rod.n_markers);
    cfg.rod.marker_radius = get_num(r, "marker_radius", cfg.rod.marker_radius);
  }

  if (j.contains("strain_bounds")) {
    const json& b = j["strain_bounds"];
    expect_keys(b, "strain_bounds", {"kappa_max", "tau_max"});
    cfg.strain_bounds.kappa_max =
        get_num(b, "kappa_max", cfg.strain_bounds.kappa_max);
    cfg.strain_bounds.tau_max = get_num(b, "tau_max", cfg.strain_bounds.tau_max);
  }

  if (j.contains("base_camera")) {
    const json& c = j["base_camera"];
    expect_keys(c, "base_camera",
                {"position", "pitch_down_deg", "yaw_deg", "focal_px", "width",
                 "height"});
    auto& bc = cfg.base_camera;
    bc.position = get_vec3(c, "position", bc.position);
    bc.pitch_down_deg = get_num(c, "pitch_down_deg", bc.pitch_down_deg);
    bc.yaw_deg = get_num(c, "yaw_deg", bc.yaw_deg);
    bc.focal_px = get_num(c, "focal_px", bc.focal_px);
    bc.width = get_int(c, "width", bc.width);
    bc.height = get_int(c, "height", bc.height);
  }

  if (j.contains("distal_camera")) {
    const json& c = j["distal_camera"];
    expect_keys(c, "distal_camera", {"focal_px", "width", "height"});
    auto& dc = cfg.distal_camera;
    dc.focal_px = get_num(c, "focal_px", dc.focal_px);
    dc.width = get_int(c, "width", dc.width);
    dc.height = get_int(c, "height", dc.height);
  }

  if (j.contains("env")) {
    const json& e = j["env"];
    expect_keys(e, "env",
                {"action_scale_kappa", "action_scale_tau", "max_steps",
                 "success_px", "kappa_range", "tau_range", "target_box_min",
                 "target_box_max", "target_radius", "init_config",
                 "pixel_noise_sigma"});
    auto& ec = cfg.env;
    ec.action_scale_kappa = get_num(e, "action_scale_kappa", ec.action_scale_kappa);
    ec.action_scale_tau = get_num(e, "action_scale_tau", ec.action_scale_tau);
    ec.max_steps = get_int(e, "max_steps", ec.max_steps);
    ec.success_px = get_num(e, "success_px", ec.success_px);
    ec.kappa_range = get_interval(e, "kappa_range", ec.kappa_range);
    ec.tau_range = get_interval(e, "tau_range", ec.tau_range);
    ec.target_box_min = get_vec3(e, "target_box_min", ec.target_box_min);
    ec.target_box_max = get_vec3(e, "target_box_max", ec.target_box_max);
    ec.target_radius = get_num(e, "target_radius", ec.target_radius);
    if (e.contains("init_config")) {
      const json& ic = e["init_config"];
      if (!ic.is_array() || ic.size() != 2 || !ic[0].is_number() ||
          !ic[1].is_number())
        throw ConfigError("\"init_config\" must be [kappa, tau]");
      ec.init_config = ArmConfig(ic[0].get<double>(), ic[1].get<double>());
    }
    ec.pixel_noise_sigma = get_num(e, "pixel_noise_sigma", ec.pixel_noise_sigma);
  }

  if (j.contains("sac")) {
    const json& s = j["sac"];
    expect_keys(s, "sac",
                {"hidden", "lr", "gamma", "polyak", "batch_size",
                 "buffer_capacity", "warmup_steps", "entropy_target",
                 "total_steps", "updates_per_step", "eval_interval",
                 "eval_episodes"});
    auto& sc = cfg.sac;
    if (s.contains("hidden")) {
      const json& h = s["hidden"];
      if (!h.is_array() || h.empty())
        throw ConfigError("\"hidden\" must be a non-empty array of layer sizes");
      sc.hidden.clear();
      for (const auto& x : h) {
        if (!x.is_number_integer() || x.get<int>() < 1)
          throw ConfigError("\"hidden\" must hold positive integers");
        sc.hidden.push_back(x.get<int>());
      }
    }
    sc.lr = get_num(s, "lr", sc.lr);
    sc.gamma = get_num(s, "gamma", sc.gamma);
    sc.polyak = get_num(s, "polyak", sc.polyak);
    sc.batch_size = get_int(s, "batch_size", sc.batch_size);
    sc.buffer_capacity = get_int(s, "buffer_capacity", sc.buffer_capacity);
    sc.warmup_steps = get_int(s, "warmup_steps", sc.warmup_steps);
    sc.entropy_target = get_num(s, "entropy_target", sc.entropy_target);
    if (s.contains("total_steps")) {
      if (!s["total_steps"].is_number_integer() ||
          s["total_steps"].get<std::int64_t>() < 0)
        throw ConfigError("\"total_steps\" must be a non-negative integer");
      sc.total_steps = s["total_steps"].get<std::int64_t>();
    }
    sc.updates_per_step = get_int(s, "updates_per_step", sc.updates_per_step);
    sc.eval_interval = get_int(s, "eval_interval", sc.eval_interval);
    sc.eval_episodes = get_int(s, "eval_episodes", sc.eval_episodes);
  }

  if (j.contains("plant")) {
    const json& p = j["plant"];
    expect_keys(p, "plant",
                {"p_max_kpa", "bend_scale_kpa", "rot_scale_kpa", "kappa_gain",
                 "tau_gain", "gain_bend", "gain_rot", "bias_bend", "bias_rot",
                 "payload_g", "droop_per_gram", "sensor_pos_noise_m",
                 "sensor_rot_noise_deg"});
    auto& pc = cfg.plant;
    pc.p_max_kpa = get_num(p, "p_max_kpa", pc.p_max_kpa);
    pc.bend_scale_kpa = get_num(p, "bend_scale_kpa", pc.bend_scale_kpa);
    pc.rot_scale_kpa = get_num(p, "rot_scale_kpa", pc.rot_scale_kpa);
    pc.kappa_gain = get_num(p, "kappa_gain", pc.kappa_gain);
    pc.tau_gain = get_num(p, "tau_gain", pc.tau_gain);
    pc.gain_bend = get_num(p, "gain_bend", pc.gain_bend);
    pc.gain_rot = get_num(p, "gain_rot", pc.gain_rot);
    pc.bias_bend = get_num(p, "bias_bend", pc.bias_bend);
    pc.bias_rot = get_num(p, "bias_rot", pc.bias_rot);
    pc.payload_g = get_num(p, "payload_g", pc.payload_g);
    pc.droop_per_gram = get_num(p, "droop_per_gram", pc.droop_per_gram);
    pc.sensor_pos_noise_m = get_num(p, "sensor_pos_noise_m", pc.sensor_pos_noise_m);
    pc.sensor_rot_noise_deg =
        get_num(p, "sensor_rot_noise_deg", pc.sensor_rot_noise_deg);
  }

  if (j.contains("servo")) {
    const json& s = j["servo"];
    expect_keys(s, "servo",
                {"gain", "tol_kappa", "tol_tau", "max_iters", "grad_delta_kpa"});
    auto& sv = cfg.servo;
    sv.gain = get_num(s, "gain", sv.gain);
    sv.tol_kappa = get_num(s, "tol_kappa", sv.tol_kappa);
    sv.tol_tau = get_num(s, "tol_tau", sv.tol_tau);
    sv.max_iters = get_int(s, "max_iters", sv.max_iters);
    sv.grad_delta_kpa = get_num(s, "grad_delta_kpa", sv.grad_delta_kpa);
  }

  if (j.contains("eval")) {
    const json& e = j["eval"];
    expect_keys(e, "eval",
                {"thresholds_px", "report_threshold_px", "trials_per_point",
                 "distances_m", "heights_m", "azimuths_deg", "episodes"});
    auto& ev = cfg.eval;
    ev.thresholds_px = get_num_list(e, "thresholds_px", ev.thresholds_px);
    ev.report_threshold_px =
        get_num(e, "report_threshold_px", ev.report_threshold_px);
    ev.trials_per_point = get_int(e, "trials_per_point", ev.trials_per_point);
    ev.distances_m = get_num_list(e, "distances_m", ev.distances_m);
    ev.heights_m = get_num_list(e, "heights_m", ev.heights_m);
    ev.azimuths_deg = get_num_list(e, "azimuths_deg", ev.azimuths_deg);
    ev.episodes = get_int(e, "episodes", ev.episodes);
  }

  cfg.validate();
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["rod"] = {{"length", cfg.rod.length},
              {"n_markers", cfg.rod.n_markers},
              {"marker_radius", cfg.rod.marker_radius}};
  j["strain_bounds"] = {{"kappa_max", cfg.strain_bounds.kappa_max},
                        {"tau_max", cfg.strain_bounds.tau_max}};
  const auto& bc = cfg.base_camera;
  j["base_camera"] = {
      {"position", {bc.position.x(), bc.position.y(), bc.position.z()}},
      {"pitch_down_deg", bc.pitch_down_deg},
      {"yaw_deg", bc.yaw_deg},
      {"focal_px", bc.focal_px},
      {"width", bc.width},
      {"height", bc.height}};
  const auto& dc = cfg.distal_camera;
  j["distal_camera"] = {
      {"focal_px", dc.focal_px}, {"width", dc.width}, {"height", dc.height}};
  const auto& e = cfg.env;
  j["env"] = {{"action_scale_kappa", e.action_scale_kappa},
              {"action_scale_tau", e.action_scale_tau},
              {"max_steps", e.max_steps},
              {"success_px", e.success_px},
              {"kappa_range", {e.kappa_range.lo, e.kappa_range.hi}},
              {"tau_range", {e.tau_range.lo, e.tau_range.hi}},
              {"target_box_min",
               {e.target_box_min.x(), e.target_box_min.y(), e.target_box_min.z()}},
              {"target_box_max",
               {e.target_box_max.x(), e.target_box_max.y(), e.target_box_max.z()}},
              {"target_radius", e.target_radius},
              {"init_config", {e.init_config.kappa, e.init_config.tau}},
              {"pixel_noise_sigma", e.pixel_noise_sigma}};
  const auto& s = cfg.sac;
  j["sac"] = {{"hidden", s.hidden},
              {"lr", s.lr},
              {"gamma", s.gamma},
              {"polyak", s.polyak},
              {"batch_size", s.batch_size},
              {"buffer_capacity", s.buffer_capacity},
              {"warmup_steps", s.warmup_steps},
              {"entropy_target", s.entropy_target},
              {"total_steps", s.total_steps},
              {"updates_per_step", s.updates_per_step},
              {"eval_interval", s.eval_interval},
              {"eval_episodes", s.eval_episodes}};
  const auto& p = cfg.plant;
  j["plant"] = {{"p_max_kpa", p.p_max_kpa},
                {"bend_scale_kpa", p.bend_scale_kpa},
                {"rot_scale_kpa", p.rot_scale_kpa},
                {"kappa_gain", p.kappa_gain},
                {"tau_gain", p.tau_gain},
                {"gain_bend", p.gain_bend},
                {"gain_rot", p.gain_rot},
                {"bias_bend", p.bias_bend},
                {"bias_rot", p.bias_rot},
                {"payload_g", p.payload_g},
                {"droop_per_gram", p.droop_per_gram},
                {"sensor_pos_noise_m", p.sensor_pos_noise_m},
                {"sensor_rot_noise_deg", p.sensor_rot_noise_deg}};
  const auto& sv = cfg.servo;
  j["servo"] = {{"gain", sv.gain},
                {"tol_kappa", sv.tol_kappa},
                {"tol_tau", sv.tol_tau},
                {"max_iters", sv.max_iters},
                {"grad_delta_kpa", sv.grad_delta_kpa}};
  const auto& ev = cfg.eval;
  j["eval"] = {{"thresholds_px", ev.thresholds_px},
               {"report_threshold_px", ev.report_threshold_px},
               {"trials_per_point", ev.trials_per_point},
               {"distances_m", ev.distances_m},
               {"heights_m", ev.heights_m},
               {"azimuths_deg", ev.azimuths_deg},
               {"episodes", ev.episodes}};
  return j;
}

}  // namespace

void RunConfig::validate() const {
  try {
    rod.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(strain_bounds.kappa_max > 0.0) || !(strain_bounds.tau_max > 0.0))
    throw ConfigError("strain bounds must be positive");
  if (env.kappa_range.lo < -strain_bounds.kappa_max ||
      env.kappa_range.hi > strain_bounds.kappa_max)
    throw ConfigError("env kappa_range exceeds strain bounds");
  if (env.tau_range.lo < -strain_bounds.tau_max ||
      env.tau_range.hi > strain_bounds.tau_max)
    throw ConfigError("env tau_range exceeds strain bounds");
  if (!(env.action_scale_kappa > 0.0) || !(env.action_scale_tau > 0.0))
    throw ConfigError("action scales must be positive");
  if (env.max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (!(env.success_px > 0.0)) throw ConfigError("success_px must be positive");
  for (int k = 0; k < 3; ++k)
    if (!(env.target_box_min[k] <= env.target_box_max[k]))
      throw ConfigError("target box has min > max");
  if (!(env.target_radius > 0.0))
    throw ConfigError("target_radius must be positive");
  if (env.pixel_noise_sigma < 0.0)
    throw ConfigError("pixel_noise_sigma must be >= 0");
  if (!env.kappa_range.contains(env.init_config.kappa) ||
      !env.tau_range.contains(env.init_config.tau))
    throw ConfigError("init_config outside the commanded strain ranges");

  if (base_camera.width < 2 || base_camera.height < 2 ||
      distal_camera.width < 2 || distal_camera.height < 2)
    throw ConfigError("camera frames must be at least 2x2 px");
  if (!(base_camera.focal_px > 0.0) || !(distal_camera.focal_px > 0.0))
    throw ConfigError("focal lengths must be positive");

  if (!(sac.lr > 0.0)) throw ConfigError("sac.lr must be positive");
  if (!(sac.gamma >= 0.0 && sac.gamma < 1.0))
    throw ConfigError("sac.gamma must be in [0, 1)");
  if (!(sac.polyak > 0.0 && sac.polyak <= 1.0))
    throw ConfigError("sac.polyak must be in (0, 1]");
  if (sac.batch_size < 1) throw ConfigError("sac.batch_size must be >= 1");
  if (sac.buffer_capacity < sac.batch_size)
    throw ConfigError("sac.buffer_capacity must hold at least one batch");
  if (sac.warmup_steps < 0) throw ConfigError("sac.warmup_steps must be >= 0");
  if (sac.updates_per_step < 0)
    throw ConfigError("sac.updates_per_step must be >= 0");
  if (sac.eval_interval < 1) throw ConfigError("sac.eval_interval must be >= 1");
  if (sac.eval_episodes < 1) throw ConfigError("sac.eval_episodes must be >= 1");

  if (!(plant.p_max_kpa > 0.0)) throw ConfigError("plant.p_max_kpa must be positive");
  if (!(plant.bend_scale_kpa > 0.0) || !(plant.rot_scale_kpa > 0.0))
    throw ConfigError("plant pressure scales must be positive");
  if (!(plant.gain_bend > 0.0) || !(plant.gain_rot > 0.0))
    throw ConfigError("plant nominal gains must be positive");
  if (!(plant.bias_bend > 0.0) || !(plant.bias_rot > 0.0))
    throw ConfigError("plant bias factors must be positive");
  if (plant.payload_g < 0.0) throw ConfigError("plant.payload_g must be >= 0");
  if (plant.sensor_pos_noise_m < 0.0 || plant.sensor_rot_noise_deg < 0.0)
    throw ConfigError("sensor noise must be >= 0");

  if (!(servo.gain > 0.0 && servo.gain < 2.0))
    throw ConfigError("servo.gain must be in (0, 2)");
  if (!(servo.tol_kappa > 0.0) || !(servo.tol_tau > 0.0))
    throw ConfigError("servo tolerances must be positive");
  if (servo.max_iters < 1) throw ConfigError("servo.max_iters must be >= 1");
  if (!(servo.grad_delta_kpa > 0.0))
    throw ConfigError("servo.grad_delta_kpa must be positive");

  if (eval.thresholds_px.empty())
    throw ConfigError("eval.thresholds_px must not be empty");
  for (double t : eval.thresholds_px)
    if (!(t > 0.0)) throw ConfigError("eval thresholds must be positive");
  if (!(eval.report_threshold_px > 0.0))
    throw ConfigError("eval.report_threshold_px must be positive");
  if (eval.trials_per_point < 1)
    throw ConfigError("eval.trials_per_point must be >= 1");
  if (eval.episodes < 1) throw ConfigError("eval.episodes must be >= 1");
}

CameraSpec RunConfig::base_camera_spec() const {
  return make_base_camera(base_camera.position, base_camera.pitch_down_deg,
                          base_camera.yaw_deg, base_camera.focal_px,
                          base_camera.width, base_camera.height);
}

CameraSpec RunConfig::distal_camera_intrinsics() const {
  CameraSpec cam;
  cam.focal_px = distal_camera.focal_px;
  cam.width = distal_camera.width;
  cam.height = distal_camera.height;
  return cam;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  return from_json(j);
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  return from_json(j);
}

std::string dump_run_config(const RunConfig& cfg) {
  return to_json(cfg).dump(2) + "\n";
}

std::uint64_t config_signature_hash(const RunConfig& cfg) {
  json sig;
  sig["rod"] = {cfg.rod.length, cfg.rod.n_markers, cfg.rod.marker_radius};
  sig["base_camera"] = {cfg.base_camera.position.x(),
                        cfg.base_camera.position.y(),
                        cfg.base_camera.position.z(),
                        cfg.base_camera.pitch_down_deg,
                        cfg.base_camera.yaw_deg,
                        cfg.base_camera.focal_px,
                        cfg.base_camera.width,
                        cfg.base_camera.height};
  sig["distal_camera"] = {cfg.distal_camera.focal_px, cfg.distal_camera.width,
                          cfg.distal_camera.height};
  sig["env"] = {cfg.env.action_scale_kappa,
                cfg.env.action_scale_tau,
                cfg.env.max_steps,
                cfg.env.success_px,
                cfg.env.kappa_range.lo,
                cfg.env.kappa_range.hi,
                cfg.env.tau_range.lo,
                cfg.env.tau_range.hi,
                cfg.env.target_radius};
  sig["strain_bounds"] = {cfg.strain_bounds.kappa_max, cfg.strain_bounds.tau_max};
  sig["hidden"] = cfg.sac.hidden;

  const std::string text = sig.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace scaservo
