#include "scaservo/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace scaservo {

void MlpGrads::set_zero() {
  for (auto& w : W) w.setZero();
  for (auto& g : b) g.setZero();
}

Mlp::Mlp(const std::vector<int>& layer_sizes, Rng& rng)
    : layer_sizes_(layer_sizes) {
  if (layer_sizes.size() < 2)
    throw std::invalid_argument("network needs at least input and output layers");
  const int L = static_cast<int>(layer_sizes.size()) - 1;
  W_.reserve(L);
  b_.reserve(L);
  for (int l = 0; l < L; ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    // He-uniform keeps ReLU activations well-scaled; the output layer starts
    // near zero so initial policies are gentle and initial values small.
    const double limit =
        l == L - 1 ? 3e-3 : std::sqrt(6.0 / static_cast<double>(fan_in));
    Mat W(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) W(r, c) = rng.uniform(-limit, limit);
    W_.push_back(std::move(W));
    b_.push_back(Vec::Zero(fan_out));
  }
}

Mlp Mlp::from_params(std::vector<Mat> W, std::vector<Vec> b) {
  if (W.empty() || W.size() != b.size())
    throw std::invalid_argument("parameter lists are empty or mismatched");
  Mlp net;
  net.layer_sizes_.push_back(static_cast<int>(W.front().cols()));
  for (size_t l = 0; l < W.size(); ++l) {
    if (W[l].rows() != b[l].size() ||
        W[l].cols() != net.layer_sizes_.back())
      throw std::invalid_argument("inconsistent layer shapes");
    net.layer_sizes_.push_back(static_cast<int>(W[l].rows()));
  }
  net.W_ = std::move(W);
  net.b_ = std::move(b);
  return net;
}

Mat Mlp::forward(const Mat& input, Cache* cache) const {
  if (input.rows() != input_dim())
    throw std::invalid_argument("forward input has wrong row count");
  if (cache) {
    cache->x.clear();
    cache->x.reserve(W_.size() + 1);
    cache->x.push_back(input);
  }
  Mat x = input;
  for (size_t l = 0; l < W_.size(); ++l) {
    Mat z = (W_[l] * x).colwise() + b_[l];
    if (l + 1 < W_.size()) z = z.cwiseMax(0.0);
    x = std::move(z);
    if (cache) cache->x.push_back(x);
  }
  return x;
}

Mat Mlp::backward(const Mat& d_output, const Cache& cache, MlpGrads& grads) const {
  if (cache.x.size() != W_.size() + 1)
    throw std::invalid_argument("cache does not match this network");
  Mat dz = d_output;
  for (int l = static_cast<int>(W_.size()) - 1; l >= 0; --l) {
    // For hidden layers the cached output x[l+1] is relu(z), so its sign
    // doubles as the activation mask.
    if (l != static_cast<int>(W_.size()) - 1)
      dz = dz.cwiseProduct((cache.x[l + 1].array() > 0.0).cast<double>().matrix());
    grads.W[l] += dz * cache.x[l].transpose();
    grads.b[l] += dz.rowwise().sum();
    if (l > 0)
      dz = (W_[l].transpose() * dz).eval();
  }
  return W_[0].transpose() * dz;
}

MlpGrads Mlp::zero_grads() const {
  MlpGrads g;
  for (size_t l = 0; l < W_.size(); ++l) {
    g.W.push_back(Mat::Zero(W_[l].rows(), W_[l].cols()));
    g.b.push_back(Vec::Zero(b_[l].size()));
  }
  return g;
}

Adam::Adam(const Mlp& net, double lr_in) {
  lr = lr_in;
  for (const auto& W : net.weights()) {
    mW_.push_back(Mat::Zero(W.rows(), W.cols()));
    vW_.push_back(Mat::Zero(W.rows(), W.cols()));
  }
  for (const auto& b : net.biases()) {
    mb_.push_back(Vec::Zero(b.size()));
    vb_.push_back(Vec::Zero(b.size()));
  }
}

void Adam::step(Mlp& net, const MlpGrads& g) {
  ++t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  const double alpha = lr * std::sqrt(bc2) / bc1;
  auto& W = net.mutable_weights();
  auto& b = net.mutable_biases();
  for (size_t l = 0; l < W.size(); ++l) {
    mW_[l] = beta1 * mW_[l] + (1.0 - beta1) * g.W[l];
    vW_[l] = beta2 * vW_[l] + (1.0 - beta2) * g.W[l].cwiseProduct(g.W[l]);
    W[l].array() -= alpha * mW_[l].array() / (vW_[l].array().sqrt() + eps);
    mb_[l] = beta1 * mb_[l] + (1.0 - beta1) * g.b[l];
    vb_[l] = beta2 * vb_[l] + (1.0 - beta2) * g.b[l].cwiseProduct(g.b[l]);
    b[l].array() -= alpha * mb_[l].array() / (vb_[l].array().sqrt() + eps);
  }
}

void ScalarAdam::step(double& x, double grad) {
  ++t;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad * grad;
  const double mhat = m / (1.0 - std::pow(beta1, static_cast<double>(t)));
  const double vhat = v / (1.0 - std::pow(beta2, static_cast<double>(t)));
  x -= lr * mhat / (std::sqrt(vhat) + eps);
}

}  // namespace scaservo
