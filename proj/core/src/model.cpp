#include "owssl/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "owssl/numerics.hpp"

namespace owssl {

namespace {

constexpr double kLogFloor = 1e-30;
constexpr double kNormFloor = 1e-12;

// Hidden activations plus pre-activations, kept for the backward pass.
struct ForwardTrace {
  Matrix pre;      // B x h (unset for linear)
  Matrix features; // the head input (hidden activations or x itself)
  Matrix head_unit;// C x f, rows w_j / ||w_j||
  std::vector<double> head_norms;
  Matrix logits;
};

ForwardTrace run_forward(const ModelParams& params, const Matrix& x) {
  if (x.cols() != params.input_dim())
    throw std::invalid_argument("forward: input dim mismatch");
  ForwardTrace t;
  if (params.has_hidden()) {
    t.pre = matmul_nt(x, params.hidden_w);
    for (std::size_t i = 0; i < t.pre.rows(); ++i) {
      auto row = t.pre.row(i);
      for (std::size_t k = 0; k < row.size(); ++k) row[k] += params.hidden_b[k];
    }
    t.features = t.pre;
    for (double& v : t.features.data()) v = std::max(v, 0.0);
  } else {
    t.features = x;
  }

  const std::size_t c = params.head_w.rows();
  t.head_unit = params.head_w;
  t.head_norms.resize(c);
  for (std::size_t j = 0; j < c; ++j) {
    auto row = t.head_unit.row(j);
    double nrm = 0.0;
    for (double v : row) nrm += v * v;
    nrm = std::max(std::sqrt(nrm), kNormFloor);
    t.head_norms[j] = nrm;
    for (double& v : row) v /= nrm;
  }
  t.logits = matmul_nt(t.features, t.head_unit);
  return t;
}

}  // namespace

ModelParams init_params(std::size_t input_dim, std::size_t hidden_width,
                        std::size_t num_classes, RngStream rng, double input_scale) {
  if (input_dim == 0 || num_classes == 0)
    throw std::invalid_argument("init_params: zero dimension");
  if (!(input_scale > 0.0))
    throw std::invalid_argument("init_params: input_scale must be > 0");
  ModelParams p;
  if (hidden_width > 0) {
    p.hidden_w = Matrix(hidden_width, input_dim);
    const double scale = std::sqrt(2.0 / static_cast<double>(input_dim)) / input_scale;
    for (double& v : p.hidden_w.data()) v = scale * rng.normal();
    p.hidden_b.assign(hidden_width, 0.0);
  }
  const std::size_t f = hidden_width > 0 ? hidden_width : input_dim;
  p.head_w = Matrix(num_classes, f);
  for (double& v : p.head_w.data()) v = 0.01 * rng.normal();
  return p;
}

OptimizerState init_optimizer(const ModelParams& params, double momentum,
                              double weight_decay) {
  OptimizerState opt;
  opt.momentum = momentum;
  opt.weight_decay = weight_decay;
  opt.v_hidden_w = Matrix(params.hidden_w.rows(), params.hidden_w.cols());
  opt.v_hidden_b.assign(params.hidden_b.size(), 0.0);
  opt.v_head_w = Matrix(params.head_w.rows(), params.head_w.cols());
  return opt;
}

Matrix forward(const ModelParams& params, const Matrix& x) {
  return run_forward(params, x).logits;
}

PredictionBatch predict_batch(const ModelParams& params, const Matrix& x) {
  PredictionBatch out;
  out.logits = forward(params, x);
  out.probs = out.logits;
  for (std::size_t i = 0; i < out.probs.rows(); ++i) softmax_inplace(out.probs.row(i));
  return out;
}

std::pair<double, Gradients> ce_loss_and_grad(const ModelParams& params, const Matrix& x,
                                              const Matrix& y,
                                              const std::vector<double>& u) {
  const std::size_t b = x.rows();
  if (y.rows() != b || u.size() != b)
    throw std::invalid_argument("ce_loss_and_grad: batch size mismatch");
  if (y.cols() != params.num_classes())
    throw std::invalid_argument("ce_loss_and_grad: label width mismatch");
  for (double ui : u)
    if (!(ui > 0.0)) throw std::invalid_argument("ce_loss_and_grad: temperatures must be > 0");

  ForwardTrace t = run_forward(params, x);
  const std::size_t c = params.num_classes();

  double loss = 0.0;
  Matrix g_logits(b, c);  // dL/dz
  std::vector<double> scaled(c);
  for (std::size_t i = 0; i < b; ++i) {
    const auto z = t.logits.row(i);
    for (std::size_t j = 0; j < c; ++j) scaled[j] = z[j] / u[i];
    softmax_inplace(scaled);
    const auto yi = y.row(i);
    for (std::size_t j = 0; j < c; ++j) {
      if (yi[j] != 0.0) loss -= yi[j] * std::log(std::max(scaled[j], kLogFloor));
      g_logits(i, j) = (scaled[j] - yi[j]) / (u[i] * static_cast<double>(b));
    }
  }
  loss /= static_cast<double>(b);

  Gradients g;
  g.head_w = Matrix(c, t.head_unit.cols());

  // d z_ij / d w_j = (h_i - z_ij w_j_unit) / ||w_j||
  for (std::size_t j = 0; j < c; ++j) {
    double s = 0.0;  // sum_i G_ij z_ij
    auto grow = g.head_w.row(j);
    for (std::size_t i = 0; i < b; ++i) {
      const double gij = g_logits(i, j);
      if (gij == 0.0) continue;
      s += gij * t.logits(i, j);
      const auto hi = t.features.row(i);
      for (std::size_t k = 0; k < grow.size(); ++k) grow[k] += gij * hi[k];
    }
    const auto wu = t.head_unit.row(j);
    for (std::size_t k = 0; k < grow.size(); ++k)
      grow[k] = (grow[k] - s * wu[k]) / t.head_norms[j];
  }

  if (params.has_hidden()) {
    Matrix g_features = matmul(g_logits, t.head_unit);  // B x h
    for (std::size_t i = 0; i < b; ++i) {
      auto gf = g_features.row(i);
      const auto pre = t.pre.row(i);
      for (std::size_t k = 0; k < gf.size(); ++k)
        if (pre[k] <= 0.0) gf[k] = 0.0;
    }
    g.hidden_w = matmul_tn(g_features, x);  // h x d
    g.hidden_b.assign(params.hidden_b.size(), 0.0);
    for (std::size_t i = 0; i < b; ++i) {
      const auto gf = g_features.row(i);
      for (std::size_t k = 0; k < gf.size(); ++k) g.hidden_b[k] += gf[k];
    }
  }
  return {loss, g};
}

namespace {

void sgd_tensor(std::vector<double>& w, const std::vector<double>& g,
                std::vector<double>& v, double mu, double wd, double lr) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    v[i] = mu * v[i] + g[i] + wd * w[i];
    w[i] -= lr * v[i];
  }
}

}  // namespace

void sgd_step(ModelParams& params, const Gradients& grads, OptimizerState& opt,
              double lr) {
  if (!params.head_w.same_shape(grads.head_w))
    throw std::invalid_argument("sgd_step: gradient shape mismatch");
  sgd_tensor(params.head_w.data(), grads.head_w.data(), opt.v_head_w.data(),
             opt.momentum, opt.weight_decay, lr);
  if (params.has_hidden()) {
    sgd_tensor(params.hidden_w.data(), grads.hidden_w.data(), opt.v_hidden_w.data(),
               opt.momentum, opt.weight_decay, lr);
    sgd_tensor(params.hidden_b, grads.hidden_b, opt.v_hidden_b, opt.momentum,
               opt.weight_decay, lr);
  }
}

double lr_at(const LrSchedule& schedule, std::size_t epoch) {
  if (epoch >= schedule.total_epochs)
    throw std::invalid_argument("lr_at: epoch out of range");
  if (schedule.warmup_epochs >= schedule.total_epochs)
    throw std::invalid_argument("lr_at: warmup must be shorter than the run");
  if (epoch < schedule.warmup_epochs) {
    return schedule.base_lr * static_cast<double>(epoch + 1) /
           static_cast<double>(schedule.warmup_epochs);
  }
  const double progress = static_cast<double>(epoch - schedule.warmup_epochs) /
                          static_cast<double>(schedule.total_epochs - schedule.warmup_epochs);
  return 0.5 * schedule.base_lr * (1.0 + std::cos(progress * 3.14159265358979323846));
}

namespace {

constexpr const char* kCheckpointMagic = "owssl_checkpoint";
constexpr int kCheckpointVersion = 1;

void write_tensor(std::ostream& out, const std::string& name, std::size_t rows,
                  std::size_t cols, const std::vector<double>& data) {
  out << name << " " << rows << " " << cols << "\n";
  char buf[40];
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", data[i]);
    out << buf << ((i + 1) % cols == 0 ? "\n" : " ");
  }
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << kCheckpointMagic << " " << kCheckpointVersion << "\n";
  if (params.has_hidden()) {
    write_tensor(out, "hidden_w", params.hidden_w.rows(), params.hidden_w.cols(),
                 params.hidden_w.data());
    write_tensor(out, "hidden_b", 1, params.hidden_b.size(), params.hidden_b);
  }
  write_tensor(out, "head_w", params.head_w.rows(), params.head_w.cols(),
               params.head_w.data());
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != kCheckpointMagic || version != kCheckpointVersion)
    throw std::runtime_error("load_checkpoint: unrecognized format in " + path);

  ModelParams params;
  std::string name;
  while (in >> name) {
    std::size_t rows = 0, cols = 0;
    if (!(in >> rows >> cols))
      throw std::runtime_error("load_checkpoint: truncated tensor header");
    std::vector<double> data(rows * cols);
    for (double& v : data)
      if (!(in >> v)) throw std::runtime_error("load_checkpoint: truncated tensor data");
    if (name == "hidden_w") {
      params.hidden_w = Matrix(rows, cols);
      params.hidden_w.data() = data;
    } else if (name == "hidden_b") {
      params.hidden_b = data;
    } else if (name == "head_w") {
      params.head_w = Matrix(rows, cols);
      params.head_w.data() = data;
    } else {
      throw std::runtime_error("load_checkpoint: unknown tensor " + name);
    }
  }
  if (params.head_w.rows() == 0)
    throw std::runtime_error("load_checkpoint: missing head_w tensor");
  return params;
}

}  // namespace owssl
