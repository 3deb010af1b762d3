#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "owssl/matrix.hpp"
#include "owssl/rng.hpp"

namespace owssl {

/// Classifier parameters: optional ReLU hidden layer, then a bias-free head
/// whose rows are l2-normalized at forward time. hidden_w empty => linear.
struct ModelParams {
  Matrix hidden_w;              // h x d
  std::vector<double> hidden_b; // h
  Matrix head_w;                // C x f, f = h or d

  bool has_hidden() const { return hidden_w.rows() > 0; }
  std::size_t input_dim() const {
    return has_hidden() ? hidden_w.cols() : head_w.cols();
  }
  std::size_t num_classes() const { return head_w.rows(); }
};

struct Gradients {
  Matrix hidden_w;
  std::vector<double> hidden_b;
  Matrix head_w;
};

struct OptimizerState {
  double momentum = 0.9;
  double weight_decay = 1e-4;
  Matrix v_hidden_w;
  std::vector<double> v_hidden_b;
  Matrix v_head_w;
};

struct LrSchedule {
  double base_lr = 0.1;
  std::size_t warmup_epochs = 10;
  std::size_t total_epochs = 100;
};

struct PredictionBatch {
  Matrix logits;
  Matrix probs;  // temperature-1 softmax rows
};

/// hidden_width == 0 builds a pure linear head. Head rows start at sigma=0.01
/// Gaussian, hidden weights He-scaled divided by input_scale (pass the
/// coordinate RMS of the training features so first-layer activations start
/// near unit size).
ModelParams init_params(std::size_t input_dim, std::size_t hidden_width,
                        std::size_t num_classes, RngStream rng,
                        double input_scale = 1.0);

OptimizerState init_optimizer(const ModelParams& params, double momentum = 0.9,
                              double weight_decay = 1e-4);

Matrix forward(const ModelParams& params, const Matrix& x);

PredictionBatch predict_batch(const ModelParams& params, const Matrix& x);

/// Per-sample temperature cross entropy: loss = -(1/B) sum_ij Y_ij log
/// softmax(z_i/u_i)_j, gradients analytic through the temperature division
/// and the head-row normalization.
std::pair<double, Gradients> ce_loss_and_grad(const ModelParams& params, const Matrix& x,
                                              const Matrix& y,
                                              const std::vector<double>& u);

/// v <- mu v + g + wd w; w <- w - lr v.
void sgd_step(ModelParams& params, const Gradients& grads, OptimizerState& opt,
              double lr);

/// Linear warmup to base_lr over warmup_epochs, then cosine annealing to 0.
double lr_at(const LrSchedule& schedule, std::size_t epoch);

/// Versioned textual checkpoint (named tensors with shapes, full-precision
/// values); round-trips exactly.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace owssl
