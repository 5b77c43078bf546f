#include "scaservo/sac.hpp"

#include "scaservo/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <stdexcept>

namespace scaservo {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * log(2*pi)

double softplus(double z) {
  // log(1 + exp(z)) without overflow on either side.
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

Mat normal_matrix(int rows, int cols, Rng& rng) {
  Mat m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = rng.normal();
  return m;
}

}  // namespace

Normalizer Normalizer::for_config(const RunConfig& cfg) {
  Normalizer n;
  const double L = cfg.rod.length;
  for (int i = 0; i < 3; ++i) {
    n.offset[i] = 0.0;
    n.scale[i] = L;
  }
  for (int i = 3; i < 7; ++i) {
    n.offset[i] = 0.0;
    n.scale[i] = 1.0;
  }
  const auto mid = [](const Interval& iv) { return 0.5 * (iv.lo + iv.hi); };
  const auto half = [](const Interval& iv) {
    const double h = 0.5 * (iv.hi - iv.lo);
    return h > 0.0 ? h : 1.0;
  };
  n.offset[7] = mid(cfg.env.kappa_range);
  n.scale[7] = half(cfg.env.kappa_range);
  n.offset[8] = mid(cfg.env.tau_range);
  n.scale[8] = half(cfg.env.tau_range);
  const double bw = cfg.base_camera.width / 2.0, bh = cfg.base_camera.height / 2.0;
  const double dw = cfg.distal_camera.width / 2.0, dh = cfg.distal_camera.height / 2.0;
  n.offset[9] = bw;  n.scale[9] = bw;
  n.offset[10] = bh; n.scale[10] = bh;
  n.offset[11] = bw; n.scale[11] = bw;
  n.offset[12] = bh; n.scale[12] = bh;
  n.offset[13] = dw; n.scale[13] = dw;
  n.offset[14] = dh; n.scale[14] = dh;
  n.offset[15] = 0.5;
  n.scale[15] = 0.5;
  return n;
}

Vec Normalizer::apply(const std::array<double, kStateDim>& raw) const {
  Vec v(kStateDim);
  for (int i = 0; i < kStateDim; ++i) v[i] = (raw[i] - offset[i]) / scale[i];
  return v;
}

Mat Normalizer::apply_batch(
    const std::vector<std::array<double, kStateDim>>& raw) const {
  Mat m(kStateDim, static_cast<int>(raw.size()));
  for (int c = 0; c < m.cols(); ++c) m.col(c) = apply(raw[static_cast<size_t>(c)]);
  return m;
}

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("replay capacity must be >= 1");
  data_.resize(static_cast<size_t>(capacity));
}

void ReplayBuffer::push(const Transition& t) {
  data_[static_cast<size_t>(next_)] = t;
  next_ = (next_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

std::vector<int> ReplayBuffer::sample_indices(int count, Rng& rng) const {
  if (count > size_)
    throw std::invalid_argument("cannot sample more transitions than stored");
  // Floyd's sampling: uniform over count-subsets, O(count) draws.
  std::set<int> chosen;
  for (int j = size_ - count; j < size_; ++j) {
    const int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(j) + 1));
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  return std::vector<int>(chosen.begin(), chosen.end());
}

SacNets SacNets::make(const std::vector<int>& hidden, Rng& rng, int state_dim,
                      int action_dim) {
  std::vector<int> actor_sizes{state_dim};
  actor_sizes.insert(actor_sizes.end(), hidden.begin(), hidden.end());
  actor_sizes.push_back(2 * action_dim);
  std::vector<int> critic_sizes{state_dim + action_dim};
  critic_sizes.insert(critic_sizes.end(), hidden.begin(), hidden.end());
  critic_sizes.push_back(1);

  SacNets nets;
  // Fixed construction order keeps seeding reproducible.
  nets.actor = Mlp(actor_sizes, rng);
  nets.critic1 = Mlp(critic_sizes, rng);
  nets.critic2 = Mlp(critic_sizes, rng);
  nets.target1 = nets.critic1;
  nets.target2 = nets.critic2;
  nets.log_alpha = 0.0;
  return nets;
}

ActorSample actor_sample(const Mlp& actor, const Mat& states, const Mat& eps) {
  ActorSample as;
  const Mat out = actor.forward(states, &as.cache);
  const int A = actor.output_dim() / 2;
  as.mu = out.topRows(A);
  as.log_std_raw = out.bottomRows(A);
  as.log_std = as.log_std_raw.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  as.stddev = as.log_std.array().exp();
  as.pre = as.mu + as.stddev.cwiseProduct(eps);
  as.action = as.pre.array().tanh();

  const int B = static_cast<int>(states.cols());
  as.logp = Vec::Zero(B);
  for (int c = 0; c < B; ++c) {
    double lp = 0.0;
    for (int r = 0; r < A; ++r) {
      const double e = eps(r, c);
      const double x = as.pre(r, c);
      // log(1 - tanh(x)^2) = 2*(log 2 - x - softplus(-2x)), stable for any x.
      const double log_one_minus_a2 =
          2.0 * (std::log(2.0) - x - softplus(-2.0 * x));
      lp += -0.5 * e * e - kHalfLog2Pi - as.log_std(r, c) - log_one_minus_a2;
    }
    as.logp[c] = lp;
  }
  return as;
}

Mat actor_mean_action(const Mlp& actor, const Mat& states) {
  const Mat out = actor.forward(states);
  const int A = actor.output_dim() / 2;
  return out.topRows(A).array().tanh();
}

Vec compute_targets(const SacNets& nets, double gamma, const Mat& next_states,
                    const Vec& rewards, const Vec& mask, const Mat& eps2) {
  const ActorSample a2 = actor_sample(nets.actor, next_states, eps2);
  const int B = static_cast<int>(next_states.cols());
  Mat in(next_states.rows() + a2.action.rows(), B);
  in << next_states, a2.action;
  const Vec q1 = nets.target1.forward(in).row(0).transpose();
  const Vec q2 = nets.target2.forward(in).row(0).transpose();
  const double alpha = std::exp(nets.log_alpha);
  const Vec soft_value = q1.cwiseMin(q2) - alpha * a2.logp;
  return rewards + gamma * mask.cwiseProduct(soft_value);
}

CriticLoss critic_loss(const Mlp& critic, const Mat& states, const Mat& actions,
                       const Vec& targets) {
  const int B = static_cast<int>(states.cols());
  Mat in(states.rows() + actions.rows(), B);
  in << states, actions;
  Mlp::Cache cache;
  const Mat q = critic.forward(in, &cache);
  const Vec diff = q.row(0).transpose() - targets;

  CriticLoss out;
  out.loss = 0.5 * diff.squaredNorm() / B;
  out.grads = critic.zero_grads();
  const Mat dq = (diff / B).transpose();
  critic.backward(dq, cache, out.grads);
  return out;
}

ActorLoss actor_loss(const Mlp& actor, const Mlp& critic1, const Mlp& critic2,
                     const Mat& states, const Mat& eps, double alpha) {
  const int B = static_cast<int>(states.cols());
  const int A = actor.output_dim() / 2;
  ActorSample as = actor_sample(actor, states, eps);

  Mat in(states.rows() + A, B);
  in << states, as.action;
  Mlp::Cache c1, c2;
  const Vec q1 = critic1.forward(in, &c1).row(0).transpose();
  const Vec q2 = critic2.forward(in, &c2).row(0).transpose();
  const Vec qmin = q1.cwiseMin(q2);

  ActorLoss out;
  out.logp = as.logp;
  out.loss = (alpha * as.logp - qmin).mean();

  // dL/d(action) via the critic that won the min, parameters held fixed.
  Mat dq1 = Mat::Zero(1, B), dq2 = Mat::Zero(1, B);
  for (int c = 0; c < B; ++c)
    (q1[c] <= q2[c] ? dq1(0, c) : dq2(0, c)) = -1.0 / B;
  MlpGrads discard1 = critic1.zero_grads();
  MlpGrads discard2 = critic2.zero_grads();
  const Mat din1 = critic1.backward(dq1, c1, discard1);
  const Mat din2 = critic2.backward(dq2, c2, discard2);
  const Mat da = din1.bottomRows(A) + din2.bottomRows(A);

  // Chain rule to the actor head.  With a = tanh(x), x = mu + sigma*eps:
  //   dlogp/dx = 2*tanh(x),  dlogp/dlog_std = -1 + 2*tanh(x)*sigma*eps,
  //   da/dx = 1 - a^2,       dx/dlog_std = sigma*eps.
  const Mat sig_eps = as.stddev.cwiseProduct(eps);
  const Mat dmu =
      (alpha / B) * 2.0 * as.action + da.cwiseProduct(Mat(1.0 - as.action.array().square()));
  Mat dlog_std = dmu.cwiseProduct(sig_eps);
  dlog_std.array() -= alpha / B;
  // Zero where the clamp was active.
  const Mat clamp_mask =
      ((as.log_std_raw.array() > kLogStdMin) && (as.log_std_raw.array() < kLogStdMax))
          .cast<double>();
  dlog_std = dlog_std.cwiseProduct(clamp_mask);

  Mat d_out(2 * A, B);
  d_out << dmu, dlog_std;
  out.grads = actor.zero_grads();
  actor.backward(d_out, as.cache, out.grads);
  return out;
}

void polyak_update(Mlp& target, const Mlp& online, double rho) {
  auto& Wt = target.mutable_weights();
  auto& bt = target.mutable_biases();
  const auto& Wo = online.weights();
  const auto& bo = online.biases();
  for (size_t l = 0; l < Wt.size(); ++l) {
    Wt[l] = (1.0 - rho) * Wt[l] + rho * Wo[l];
    bt[l] = (1.0 - rho) * bt[l] + rho * bo[l];
  }
}

SacOptimizers SacOptimizers::make(const SacNets& nets, double lr) {
  SacOptimizers opt;
  opt.actor = Adam(nets.actor, lr);
  opt.critic1 = Adam(nets.critic1, lr);
  opt.critic2 = Adam(nets.critic2, lr);
  opt.alpha.lr = lr;
  return opt;
}

SacUpdateStats sac_update(SacNets& nets, SacOptimizers& opt,
                          const ReplayBuffer& buffer,
                          const std::vector<int>& batch_indices,
                          const Normalizer& norm, const SacConfig& cfg,
                          Rng& rng) {
  const int B = static_cast<int>(batch_indices.size());
  const int S = nets.state_dim();
  const int A = nets.action_dim();

  Mat states(S, B), next_states(S, B), actions(A, B);
  Vec rewards(B), mask(B);
  for (int i = 0; i < B; ++i) {
    const Transition& t = buffer.at(batch_indices[static_cast<size_t>(i)]);
    states.col(i) = norm.apply(t.state);
    next_states.col(i) = norm.apply(t.next_state);
    for (int r = 0; r < A; ++r) actions(r, i) = t.action[static_cast<size_t>(r)];
    rewards[i] = t.reward;
    mask[i] = t.terminal ? 0.0 : 1.0;
  }

  const Mat eps2 = normal_matrix(A, B, rng);
  const Vec y = compute_targets(nets, cfg.gamma, next_states, rewards, mask, eps2);

  const CriticLoss c1 = critic_loss(nets.critic1, states, actions, y);
  opt.critic1.step(nets.critic1, c1.grads);
  const CriticLoss c2 = critic_loss(nets.critic2, states, actions, y);
  opt.critic2.step(nets.critic2, c2.grads);

  const double alpha = std::exp(nets.log_alpha);
  const Mat eps = normal_matrix(A, B, rng);
  const ActorLoss al =
      actor_loss(nets.actor, nets.critic1, nets.critic2, states, eps, alpha);
  opt.actor.step(nets.actor, al.grads);

  const double entropy_gap = (al.logp.array() + cfg.entropy_target).mean();
  const double alpha_loss = -nets.log_alpha * entropy_gap;
  opt.alpha.step(nets.log_alpha, -entropy_gap);

  polyak_update(nets.target1, nets.critic1, cfg.polyak);
  polyak_update(nets.target2, nets.critic2, cfg.polyak);

  SacUpdateStats stats;
  stats.critic1_loss = c1.loss;
  stats.critic2_loss = c2.loss;
  stats.actor_loss = al.loss;
  stats.alpha_loss = alpha_loss;
  stats.alpha = std::exp(nets.log_alpha);
  stats.mean_logp = al.logp.mean();
  if (!std::isfinite(stats.critic1_loss) || !std::isfinite(stats.critic2_loss) ||
      !std::isfinite(stats.actor_loss) || !std::isfinite(stats.alpha))
    throw std::runtime_error(
        "non-finite loss in SAC update (critic1=" + std::to_string(stats.critic1_loss) +
        ", critic2=" + std::to_string(stats.critic2_loss) +
        ", actor=" + std::to_string(stats.actor_loss) +
        ", alpha=" + std::to_string(stats.alpha) + ")");
  return stats;
}

Eigen::Vector2d act_mean(const Mlp& actor, const Normalizer& norm,
                         const std::array<double, kStateDim>& raw_state) {
  const Mat a = actor_mean_action(actor, norm.apply(raw_state));
  return Eigen::Vector2d(a(0, 0), a(1, 0));
}

Eigen::Vector2d act_sample(const Mlp& actor, const Normalizer& norm,
                           const std::array<double, kStateDim>& raw_state,
                           Rng& rng) {
  Mat eps(2, 1);
  eps(0, 0) = rng.normal();
  eps(1, 0) = rng.normal();
  const ActorSample as = actor_sample(actor, norm.apply(raw_state), eps);
  return Eigen::Vector2d(as.action(0, 0), as.action(1, 0));
}

namespace {

double curve_eval(const RunConfig& cfg, const SacNets& nets,
                  const Normalizer& norm, std::uint64_t tag) {
  Env env(cfg);
  int wins = 0;
  for (int i = 0; i < cfg.sac.eval_episodes; ++i) {
    auto s = env.reset(derive_seed(cfg.seed, "curve_eval", tag * 1000003ULL +
                                                               static_cast<std::uint64_t>(i)))
                 .flatten();
    while (!env.episode_done()) {
      const Eigen::Vector2d a = act_mean(nets.actor, norm, s);
      const StepResult sr = env.step(Action{a.x(), a.y()});
      s = sr.state.flatten();
      if (sr.done && sr.success) ++wins;
    }
  }
  return static_cast<double>(wins) / cfg.sac.eval_episodes;
}

}  // namespace

TrainResult train_sac(const RunConfig& cfg, const std::string& out_dir,
                      std::ostream* log) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto t_start = std::chrono::steady_clock::now();

  Rng init_rng(derive_seed(cfg.seed, "net_init"));
  SacNets nets = SacNets::make(cfg.sac.hidden, init_rng);
  SacOptimizers opt = SacOptimizers::make(nets, cfg.sac.lr);
  const Normalizer norm = Normalizer::for_config(cfg);
  ReplayBuffer buffer(cfg.sac.buffer_capacity);
  Rng explore(derive_seed(cfg.seed, "explore"));
  Rng replay_rng(derive_seed(cfg.seed, "replay"));
  Rng update_rng(derive_seed(cfg.seed, "update"));
  Env env(cfg);

  TrainResult result;
  std::int64_t episode = 0;
  auto state = env.reset(derive_seed(cfg.seed, "train_episode",
                                     static_cast<std::uint64_t>(episode)))
                   .flatten();
  double episode_return = 0.0;
  double interval_return_sum = 0.0;
  std::int64_t interval_episodes = 0;

  SacNets best_nets = nets;
  double best_success = -1.0;

  for (std::int64_t t = 1; t <= cfg.sac.total_steps; ++t) {
    Action a;
    if (t <= cfg.sac.warmup_steps) {
      a.d_kappa = explore.uniform(-1.0, 1.0);
      a.d_tau = explore.uniform(-1.0, 1.0);
    } else {
      const Eigen::Vector2d v = act_sample(nets.actor, norm, state, explore);
      a.d_kappa = v.x();
      a.d_tau = v.y();
    }

    const StepResult sr = env.step(a);
    Transition tr;
    tr.state = state;
    tr.action = {a.d_kappa, a.d_tau};
    tr.reward = sr.reward.total();
    tr.next_state = sr.state.flatten();
    // Success is real termination; running out of steps is truncation, so
    // the next-state value bootstrap stays on for it.
    tr.terminal = sr.success;
    buffer.push(tr);
    episode_return += tr.reward;
    state = tr.next_state;

    if (sr.done) {
      ++episode;
      interval_return_sum += episode_return;
      ++interval_episodes;
      episode_return = 0.0;
      state = env.reset(derive_seed(cfg.seed, "train_episode",
                                    static_cast<std::uint64_t>(episode)))
                  .flatten();
    }

    if (t > cfg.sac.warmup_steps && buffer.size() >= cfg.sac.batch_size) {
      for (int u = 0; u < cfg.sac.updates_per_step; ++u) {
        const auto idx = buffer.sample_indices(cfg.sac.batch_size, replay_rng);
        sac_update(nets, opt, buffer, idx, norm, cfg.sac, update_rng);
        ++result.gradient_updates;
      }
    }

    if (t % cfg.sac.eval_interval == 0 || t == cfg.sac.total_steps) {
      CurvePoint pt;
      pt.step = t;
      pt.mean_train_return =
          interval_episodes > 0 ? interval_return_sum / interval_episodes : 0.0;
      pt.eval_success = curve_eval(cfg, nets, norm,
                                   static_cast<std::uint64_t>(result.curve.size()));
      result.curve.push_back(pt);
      interval_return_sum = 0.0;
      interval_episodes = 0;
      if (pt.eval_success > best_success) {
        best_success = pt.eval_success;
        best_nets = nets;
      }
      if (log) {
        (*log) << "step " << pt.step << "  train_return " << pt.mean_train_return
               << "  eval_success " << pt.eval_success << "  alpha "
               << std::exp(nets.log_alpha) << std::endl;
      }
    }
  }

  result.episodes = episode;
  result.final_eval_success =
      result.curve.empty() ? 0.0 : result.curve.back().eval_success;
  result.best_eval_success = best_success < 0.0 ? 0.0 : best_success;

  // Outputs: learning curve CSV with fixed formatting so reruns are
  // byte-identical, plus final and best checkpoints.
  const fs::path curve_path = fs::path(out_dir) / "learning_curve.csv";
  {
    std::ofstream out(curve_path);
    out << "step,mean_train_return,eval_success\n";
    char line[128];
    for (const CurvePoint& pt : result.curve) {
      std::snprintf(line, sizeof line, "%lld,%.6f,%.6f\n",
                    static_cast<long long>(pt.step), pt.mean_train_return,
                    pt.eval_success);
      out << line;
    }
  }

  result.checkpoint_path = (fs::path(out_dir) / "checkpoint.json").string();
  save_checkpoint(result.checkpoint_path, nets, norm, cfg);
  result.best_checkpoint_path =
      (fs::path(out_dir) / "best_checkpoint.json").string();
  save_checkpoint(result.best_checkpoint_path, best_nets, norm, cfg);

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();

  {
    nlohmann::json rep;
    rep["episodes"] = result.episodes;
    rep["gradient_updates"] = result.gradient_updates;
    rep["final_eval_success"] = result.final_eval_success;
    rep["best_eval_success"] = result.best_eval_success;
    rep["wall_seconds"] = result.wall_seconds;
    rep["checkpoint"] = result.checkpoint_path;
    rep["best_checkpoint"] = result.best_checkpoint_path;
    rep["curve_points"] = result.curve.size();
    std::ofstream out(fs::path(out_dir) / "train_report.json");
    out << rep.dump(2) << "\n";
  }

  return result;
}

}  // namespace scaservo
