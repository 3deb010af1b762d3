#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "owssl/eval.hpp"
#include "owssl/rng.hpp"

using namespace owssl;

namespace {

// Exhaustive minimum over all permutations; the oracle for the O(n^3) solver.
double brute_force_min_cost(const Matrix& cost) {
  const std::size_t n = cost.rows();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += cost(i, perm[i]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Matrix random_cost(std::size_t n, RngStream& rng) {
  Matrix cost(n, n);
  for (double& v : cost.data()) v = rng.uniform(-10.0, 10.0);
  return cost;
}

}  // namespace

TEST_CASE("hungarian basics") {
  Matrix cost = Matrix::from_rows({{0, 1, 1}, {1, 0, 1}, {1, 1, 0}});
  auto [assignment, total] = hungarian(cost);
  CHECK(total == doctest::Approx(0.0));
  for (std::size_t i = 0; i < 3; ++i) CHECK(assignment[i] == i);

  // 0s along a permutation sigma: sigma recovered exactly
  const std::vector<std::size_t> sigma{2, 0, 3, 1};
  Matrix pc(4, 4, 1.0);
  for (std::size_t i = 0; i < 4; ++i) pc(i, sigma[i]) = 0.0;
  auto [a2, t2] = hungarian(pc);
  CHECK(t2 == doctest::Approx(0.0));
  for (std::size_t i = 0; i < 4; ++i) CHECK(a2[i] == sigma[i]);
}

TEST_CASE("hungarian rejects bad input") {
  CHECK_THROWS(hungarian(Matrix(2, 3)));
  Matrix inf(2, 2);
  inf(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS(hungarian(inf));
  CHECK_THROWS(hungarian(Matrix()));
}

TEST_CASE("hungarian matches brute force on random matrices") {
  RngStream rng(321, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.next_below(5);  // up to 6x6
    Matrix cost = random_cost(n, rng);
    auto [assignment, total] = hungarian(cost);
    CHECK(total == doctest::Approx(brute_force_min_cost(cost)).epsilon(1e-9));
    std::vector<bool> used(n, false);
    for (std::size_t c : assignment) {
      CHECK(!used[c]);
      used[c] = true;
    }
  }
  for (int trial = 0; trial < 10; ++trial) {
    Matrix cost = random_cost(7, rng);
    auto [assignment, total] = hungarian(cost);
    CHECK(total == doctest::Approx(brute_force_min_cost(cost)).epsilon(1e-9));
  }
}

TEST_CASE("clustering accuracy basics") {
  const std::vector<int> gt{0, 1, 2, 0, 1, 2};
  auto [acc_same, match_same] = clustering_accuracy(gt, gt, 3);
  CHECK(acc_same == doctest::Approx(1.0));
  for (std::size_t j = 0; j < 3; ++j) CHECK(match_same.mapping[j] == j);

  // relabeled predictions still score 1.0
  const std::vector<int> relabeled{2, 0, 1, 2, 0, 1};
  auto [acc_rel, match_rel] = clustering_accuracy(relabeled, gt, 3);
  CHECK(acc_rel == doctest::Approx(1.0));
  CHECK(match_rel.mapping[2] == 0);
  CHECK(match_rel.mapping[0] == 1);
  CHECK(match_rel.mapping[1] == 2);

  // worked example: optimal map 0->1, 1->0 leaves one class-2 sample unmatched
  auto [acc, match] = clustering_accuracy({0, 0, 1, 1}, {1, 1, 0, 2}, 3);
  CHECK(acc == doctest::Approx(0.75));
  CHECK(match.total_matched_correct == 3);

  CHECK_THROWS(clustering_accuracy({}, {}, 3));
  CHECK_THROWS(clustering_accuracy({0, 5}, {0, 1}, 3));
}

TEST_CASE("clustering accuracy is invariant under any prediction relabeling") {
  RngStream rng(8, 8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng.next_below(6);
    const std::size_t n = 10 + rng.next_below(50);
    std::vector<int> pred(n), gt(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = static_cast<int>(rng.next_below(k));
      gt[i] = static_cast<int>(rng.next_below(k));
    }
    std::vector<int> relabel(k);
    std::iota(relabel.begin(), relabel.end(), 0);
    for (std::size_t i = k; i > 1; --i)
      std::swap(relabel[i - 1], relabel[rng.next_below(i)]);
    std::vector<int> pred2(n);
    for (std::size_t i = 0; i < n; ++i) pred2[i] = relabel[static_cast<std::size_t>(pred[i])];
    CHECK(clustering_accuracy(pred, gt, k).first ==
          doctest::Approx(clustering_accuracy(pred2, gt, k).first));
  }
}

TEST_CASE("open world report: perfect predictor") {
  const std::vector<int> gt{0, 0, 1, 1, 2, 2, 3, 3};
  const EvalReport r = open_world_report(gt, gt, 2, 2);
  CHECK(r.seen_acc == doctest::Approx(1.0));
  CHECK(r.novel_acc == doctest::Approx(1.0));
  CHECK(r.all_acc == doctest::Approx(1.0));
  CHECK(r.removed_count == 0);
  for (std::size_t j = 0; j < 4; ++j) CHECK(r.confusion(j, j) == 2.0);
}

TEST_CASE("open world report: removal rule arithmetic") {
  // 4 novel samples of class 2; one leaks into seen class 0, the rest land
  // in one novel cluster.
  const std::vector<int> gt{0, 0, 2, 2, 2, 2};
  const std::vector<int> pred{0, 0, 0, 2, 2, 2};
  const EvalReport r = open_world_report(pred, gt, 2, 1);
  CHECK(r.seen_acc == doctest::Approx(1.0));
  CHECK(r.removed_count == 1);
  CHECK(r.novel_acc == doctest::Approx(0.75));
}

TEST_CASE("open world report: degenerate all-one-class predictor") {
  // Balanced 4-class test set, everything predicted as class 0.
  std::vector<int> gt, pred;
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 10; ++i) {
      gt.push_back(c);
      pred.push_back(0);
    }
  const EvalReport r = open_world_report(pred, gt, 2, 2);
  CHECK(r.all_acc == doctest::Approx(0.25));
  CHECK(r.novel_acc == doctest::Approx(0.0));  // all novel samples leaked to seen
  CHECK(r.removed_count == 20);
}

TEST_CASE("open world report with no novel classes reduces to seen accuracy") {
  RngStream rng(55, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 20 + rng.next_below(40);
    std::vector<int> gt(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      gt[i] = static_cast<int>(rng.next_below(4));
      pred[i] = static_cast<int>(rng.next_below(4));
    }
    const EvalReport r = open_world_report(pred, gt, 4, 0);
    CHECK(r.all_acc == r.seen_acc);  // exact
  }
}

TEST_CASE("confusion matrix row sums equal per-class counts") {
  RngStream rng(77, 0);
  std::vector<int> gt, pred;
  std::vector<std::size_t> per_class(5, 0);
  for (int i = 0; i < 200; ++i) {
    const int g = static_cast<int>(rng.next_below(5));
    gt.push_back(g);
    per_class[static_cast<std::size_t>(g)]++;
    pred.push_back(static_cast<int>(rng.next_below(5)));
  }
  const EvalReport r = open_world_report(pred, gt, 3, 2);
  for (std::size_t g = 0; g < 5; ++g) {
    double row = 0.0;
    for (std::size_t c = 0; c < 5; ++c) row += r.confusion(g, c);
    CHECK(row == doctest::Approx(static_cast<double>(per_class[g])));
  }
  // matched-correct consistency: all-class matched count is the confusion
  // diagonal under the chosen mapping
  double diag = 0.0;
  for (std::size_t j = 0; j < 5; ++j) diag += r.confusion(j, j);
  CHECK(r.all_acc == doctest::Approx(diag / 200.0));
}

TEST_CASE("eval report serialization") {
  const std::vector<int> gt{0, 1, 1};
  const EvalReport r = open_world_report(gt, gt, 2, 0);
  const std::string json = to_json(r);
  CHECK(json.find("\"seen_acc\"") != std::string::npos);
  CHECK(json.find("\"confusion\"") != std::string::npos);
  const std::string csv = confusion_csv(r);
  CHECK(csv.rfind("pred0", 0) == 0);
}
