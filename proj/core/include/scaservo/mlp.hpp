#pragma once

#include "scaservo/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace scaservo {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Parameter gradients for an Mlp, same shapes as the parameters.
struct MlpGrads {
  std::vector<Mat> W;
  std::vector<Vec> b;
  void set_zero();
};

// Fully connected network with ReLU hidden layers and a linear output.
// Batches are stored column-wise: a forward input is (input_dim x batch).
class Mlp {
 public:
  // Activations recorded during forward, consumed by backward.
  // x[l] is the input to layer l; x.back() is the network output.
  struct Cache {
    std::vector<Mat> x;
  };

  Mlp() = default;
  // layer_sizes includes input and output dims, e.g. {16, 256, 256, 4}.
  // Hidden layers get He-uniform weights, the output layer small uniform
  // weights, all biases zero.  Draws come from rng in a fixed order.
  Mlp(const std::vector<int>& layer_sizes, Rng& rng);

  Mat forward(const Mat& input, Cache* cache = nullptr) const;

  // Backpropagates d_loss/d_output, accumulating parameter gradients into
  // `grads` (which must have matching shapes, see zero_grads) and returning
  // d_loss/d_input.
  Mat backward(const Mat& d_output, const Cache& cache, MlpGrads& grads) const;

  MlpGrads zero_grads() const;

  int input_dim() const { return layer_sizes_.front(); }
  int output_dim() const { return layer_sizes_.back(); }
  int n_layers() const { return static_cast<int>(W_.size()); }
  const std::vector<int>& layer_sizes() const { return layer_sizes_; }

  const std::vector<Mat>& weights() const { return W_; }
  const std::vector<Vec>& biases() const { return b_; }
  std::vector<Mat>& mutable_weights() { return W_; }
  std::vector<Vec>& mutable_biases() { return b_; }

  // Rebuilds a network from explicit parameters (checkpoint loading).
  static Mlp from_params(std::vector<Mat> W, std::vector<Vec> b);

 private:
  std::vector<int> layer_sizes_;
  std::vector<Mat> W_;
  std::vector<Vec> b_;
};

// Adam optimizer bound to one Mlp's parameter shapes.
class Adam {
 public:
  Adam() = default;
  Adam(const Mlp& net, double lr);
  void step(Mlp& net, const MlpGrads& g);

  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t t = 0;

 private:
  std::vector<Mat> mW_, vW_;
  std::vector<Vec> mb_, vb_;
};

// Adam on a single scalar (used for the entropy temperature).
struct ScalarAdam {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t t = 0;
  double m = 0.0;
  double v = 0.0;
  void step(double& x, double grad);
};

}  // namespace scaservo
