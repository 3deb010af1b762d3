#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "owssl/model.hpp"
#include "owssl/rng.hpp"

using namespace owssl;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, RngStream& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

// Random rows on the simplex (normalized positive draws).
Matrix random_labels(std::size_t r, std::size_t c, RngStream& rng) {
  Matrix y(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    double sum = 0.0;
    auto row = y.row(i);
    for (double& v : row) {
      v = rng.uniform(0.05, 1.0);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
  return y;
}

ModelParams random_params(std::size_t d, std::size_t hidden, std::size_t c,
                          RngStream& rng) {
  ModelParams p;
  if (hidden > 0) {
    p.hidden_w = random_matrix(hidden, d, rng, 0.7);
    p.hidden_b.resize(hidden);
    for (double& v : p.hidden_b) v = 0.3 * rng.normal();
  }
  p.head_w = random_matrix(c, hidden > 0 ? hidden : d, rng, 0.8);
  return p;
}

double loss_only(const ModelParams& params, const Matrix& x, const Matrix& y,
                 const std::vector<double>& u) {
  return ce_loss_and_grad(params, x, y, u).first;
}

// Central finite differences over every parameter component.
bool check_gradients(ModelParams params, const Matrix& x, const Matrix& y,
                     const std::vector<double>& u, double eps, double tol) {
  const Gradients analytic = ce_loss_and_grad(params, x, y, u).second;
  auto check_tensor = [&](std::vector<double>& w, const std::vector<double>& g) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double orig = w[i];
      w[i] = orig + eps;
      const double lp = loss_only(params, x, y, u);
      w[i] = orig - eps;
      const double lm = loss_only(params, x, y, u);
      w[i] = orig;
      const double fd = (lp - lm) / (2.0 * eps);
      const double denom = std::max(std::abs(fd), std::abs(g[i]));
      const double err = denom > 1e-6 ? std::abs(fd - g[i]) / denom : std::abs(fd - g[i]);
      if (err >= tol) {
        INFO("component ", i, " fd ", fd, " analytic ", g[i]);
        return false;
      }
    }
    return true;
  };
  bool ok = check_tensor(params.head_w.data(), analytic.head_w.data());
  if (params.has_hidden()) {
    ok = ok && check_tensor(params.hidden_w.data(), analytic.hidden_w.data());
    ok = ok && check_tensor(params.hidden_b, analytic.hidden_b);
  }
  return ok;
}

}  // namespace

TEST_CASE("forward normalizes head rows") {
  ModelParams p;
  p.head_w = Matrix::from_rows({{3.0, 4.0}});
  Matrix x = Matrix::from_rows({{1.0, 0.0}});
  CHECK(forward(p, x)(0, 0) == doctest::Approx(0.6).epsilon(1e-15));

  Matrix zero = Matrix::from_rows({{0.0, 0.0}});
  CHECK(forward(p, zero)(0, 0) == 0.0);
}

TEST_CASE("forward is exactly invariant to positive head-row scaling") {
  RngStream rng(5, 0);
  ModelParams p = random_params(4, 6, 3, rng);
  Matrix x = random_matrix(5, 4, rng);
  const Matrix base = forward(p, x);
  for (double c : {0.25, 2.0, 64.0}) {
    ModelParams scaled = p;
    for (double& v : scaled.head_w.row(1)) v *= c;
    const Matrix z = forward(scaled, x);
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t j = 0; j < z.cols(); ++j)
        CHECK(z(i, j) == doctest::Approx(base(i, j)).epsilon(1e-12));
  }
  CHECK_THROWS(forward(p, Matrix(2, 7)));
}

TEST_CASE("loss at a saturated correct prediction is zero") {
  ModelParams p;
  p.head_w = Matrix::from_rows({{5.0, 0.0}, {-5.0, 0.0}});  // normalized to +-e1
  Matrix x = Matrix::from_rows({{40.0, 0.0}});              // logits +-40
  Matrix y = Matrix::from_rows({{1.0, 0.0}});
  auto [loss, grads] = ce_loss_and_grad(p, x, y, {0.1});
  CHECK(loss == 0.0);
  (void)grads;
}

TEST_CASE("loss under uniform prediction is ln C") {
  const std::size_t c = 5;
  RngStream rng(6, 0);
  ModelParams p = random_params(3, 0, c, rng);
  Matrix x(4, 3);  // zero inputs -> zero logits -> uniform prediction
  Matrix y(4, c);
  for (std::size_t i = 0; i < 4; ++i) y(i, i % c) = 1.0;
  auto [loss, grads] = ce_loss_and_grad(p, x, y, {1.0, 1.0, 1.0, 1.0});
  CHECK(loss == doctest::Approx(std::log(static_cast<double>(c))).epsilon(1e-12));
  (void)grads;
}

TEST_CASE("analytic gradients match central finite differences") {
  RngStream rng(2718, 0);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = 2 + rng.next_below(4);
    const std::size_t d = 2 + rng.next_below(3);
    const std::size_t c = 2 + rng.next_below(4);
    const std::size_t hidden = (trial % 3 == 0) ? 0 : 3 + rng.next_below(5);
    ModelParams p = random_params(d, hidden, c, rng);
    const Matrix x = random_matrix(b, d, rng);
    const Matrix y = random_labels(b, c, rng);
    std::vector<double> u(b);
    for (double& v : u) v = rng.uniform(0.1, 1.0);
    CHECK(check_gradients(p, x, y, u, 1e-5, 1e-4));
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("head gradient is orthogonal to the raw row direction") {
  RngStream rng(11, 4);
  ModelParams p = random_params(4, 5, 3, rng);
  const Matrix x = random_matrix(6, 4, rng);
  const Matrix y = random_labels(6, 3, rng);
  const std::vector<double> u(6, 0.3);
  const Gradients g = ce_loss_and_grad(p, x, y, u).second;
  for (std::size_t j = 0; j < 3; ++j) {
    double dot = 0.0, norm = 0.0;
    for (std::size_t k = 0; k < p.head_w.cols(); ++k) {
      dot += g.head_w(j, k) * p.head_w(j, k);
      norm += p.head_w(j, k) * p.head_w(j, k);
    }
    CHECK(std::abs(dot) / std::sqrt(norm) < 1e-12);
  }
}

TEST_CASE("sgd step algebra") {
  auto make = [] {
    ModelParams p;
    p.head_w = Matrix::from_rows({{2.0}});
    return p;
  };
  Gradients g;
  g.head_w = Matrix::from_rows({{3.0}});

  // mu = 0, wd = 0: plain descent
  ModelParams p = make();
  OptimizerState opt = init_optimizer(p, 0.0, 0.0);
  sgd_step(p, g, opt, 0.1);
  CHECK(p.head_w(0, 0) == doctest::Approx(2.0 - 0.1 * 3.0).epsilon(1e-15));

  // zero gradient leaves parameters alone
  ModelParams q = make();
  OptimizerState opt2 = init_optimizer(q, 0.9, 0.0);
  Gradients zero;
  zero.head_w = Matrix(1, 1, 0.0);
  sgd_step(q, zero, opt2, 0.5);
  CHECK(q.head_w(0, 0) == 2.0);

  // two momentum steps with constant gradient: displacement lr*g*(1 + 1.9)
  ModelParams r = make();
  OptimizerState opt3 = init_optimizer(r, 0.9, 0.0);
  const double lr = 0.01;
  sgd_step(r, g, opt3, lr);
  sgd_step(r, g, opt3, lr);
  CHECK(r.head_w(0, 0) == doctest::Approx(2.0 - lr * 3.0 * (1.0 + 1.9)).epsilon(1e-12));
}

TEST_CASE("learning rate schedule") {
  LrSchedule s;
  s.base_lr = 0.1;
  s.warmup_epochs = 10;
  s.total_epochs = 100;
  CHECK(lr_at(s, 0) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(lr_at(s, 9) == doctest::Approx(0.1).epsilon(1e-12));   // warmup endpoint
  CHECK(lr_at(s, 55) == doctest::Approx(0.05).epsilon(1e-12)); // cosine midpoint
  const double tail = 0.5 * 0.1 * (1.0 + std::cos(M_PI * 89.0 / 90.0));
  CHECK(lr_at(s, 99) == doctest::Approx(tail).epsilon(1e-12));
  CHECK(lr_at(s, 99) < 0.001);
  CHECK_THROWS(lr_at(s, 100));
  LrSchedule bad = s;
  bad.warmup_epochs = 100;
  CHECK_THROWS(lr_at(bad, 5));
}

TEST_CASE("training math is deterministic") {
  RngStream rng_a(77, 0), rng_b(77, 0);
  ModelParams a = init_params(4, 8, 3, rng_a);
  ModelParams b = init_params(4, 8, 3, rng_b);
  OptimizerState oa = init_optimizer(a), ob = init_optimizer(b);
  RngStream data_rng(3, 3);
  const Matrix x = random_matrix(6, 4, data_rng);
  const Matrix y = random_labels(6, 3, data_rng);
  const std::vector<double> u(6, 0.2);
  for (int step = 0; step < 25; ++step) {
    sgd_step(a, ce_loss_and_grad(a, x, y, u).second, oa, 0.05);
    sgd_step(b, ce_loss_and_grad(b, x, y, u).second, ob, 0.05);
  }
  CHECK(a.head_w.data() == b.head_w.data());
  CHECK(a.hidden_w.data() == b.hidden_w.data());
  CHECK(a.hidden_b == b.hidden_b);
}

TEST_CASE("checkpoint round trip is exact") {
  RngStream rng(101, 0);
  const ModelParams p = random_params(5, 7, 4, rng);
  const std::string path =
      (std::filesystem::temp_directory_path() / "owssl_ckpt_test.txt").string();
  save_checkpoint(p, path);
  const ModelParams q = load_checkpoint(path);
  CHECK(p.head_w.data() == q.head_w.data());
  CHECK(p.hidden_w.data() == q.hidden_w.data());
  CHECK(p.hidden_b == q.hidden_b);
  CHECK(q.head_w.rows() == 4);
  CHECK(q.hidden_w.rows() == 7);
  std::filesystem::remove(path);

  CHECK_THROWS(load_checkpoint("/nonexistent/owssl.ckpt"));
}
