#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "owssl/data.hpp"
#include "owssl/estimate.hpp"
#include "owssl/eval.hpp"
#include "owssl/rng.hpp"

using namespace owssl;

namespace {

// Blobs with known membership; labeled subset = first per_class/2 samples of
// the first labeled_classes blobs.
struct Blobs {
  Matrix x;
  std::vector<int> gt;
  std::vector<std::size_t> labeled_idx;
  std::vector<int> labeled_gt;
};

Blobs make_blobs(std::size_t classes, std::size_t labeled_classes,
                 std::size_t per_class, double sep, std::uint64_t seed) {
  DatasetSpec spec;
  spec.dim = 6;
  spec.num_seen = labeled_classes;
  spec.num_novel = classes - labeled_classes;
  spec.samples_per_class = per_class;
  spec.labeled_fraction = 0.5;
  spec.class_sep = sep;
  spec.test_per_class = 1;
  spec.seed = seed;
  const SplitDataset ds = generate(spec);

  Blobs blobs;
  const std::size_t nl = ds.labeled_x.rows();
  const std::size_t nu = ds.unlabeled_x.rows();
  blobs.x = Matrix(nl + nu, spec.dim);
  for (std::size_t i = 0; i < nl; ++i) {
    std::copy(ds.labeled_x.row(i).begin(), ds.labeled_x.row(i).end(),
              blobs.x.row(i).begin());
    blobs.gt.push_back(ds.labeled_class[i]);
    blobs.labeled_idx.push_back(i);
    blobs.labeled_gt.push_back(ds.labeled_class[i]);
  }
  for (std::size_t i = 0; i < nu; ++i) {
    std::copy(ds.unlabeled_x.row(i).begin(), ds.unlabeled_x.row(i).end(),
              blobs.x.row(nl + i).begin());
    blobs.gt.push_back(ds.unlabeled_gt[i]);
  }
  return blobs;
}

}  // namespace

TEST_CASE("kmeans degenerate cases") {
  RngStream gen(5, 0);
  Matrix x(6, 2);
  for (double& v : x.data()) v = gen.uniform(-3.0, 3.0);

  const KmeansResult every = kmeans(x, 6, RngStream(1, 0));
  CHECK(every.inertia == doctest::Approx(0.0).epsilon(1e-18));

  const KmeansResult one = kmeans(x, 1, RngStream(1, 1));
  std::vector<double> mean(2, 0.0);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t k = 0; k < 2; ++k) mean[k] += x(i, k) / 6.0;
  CHECK(one.centers(0, 0) == doctest::Approx(mean[0]).epsilon(1e-12));
  CHECK(one.centers(0, 1) == doctest::Approx(mean[1]).epsilon(1e-12));
  double total_var = 0.0;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t k = 0; k < 2; ++k)
      total_var += (x(i, k) - mean[k]) * (x(i, k) - mean[k]);
  CHECK(one.inertia == doctest::Approx(total_var).epsilon(1e-9));

  CHECK_THROWS(kmeans(x, 0, RngStream(1, 2)));
  CHECK_THROWS(kmeans(x, 7, RngStream(1, 3)));
}

TEST_CASE("kmeans recovers separated blobs") {
  const Blobs blobs = make_blobs(3, 1, 60, 8.0, 7);
  const KmeansResult res = kmeans(blobs.x, 3, RngStream(42, 0));
  std::vector<int> pred(res.assignments.size());
  for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = static_cast<int>(res.assignments[i]);
  const auto [acc, match] = clustering_accuracy(pred, blobs.gt, 3);
  (void)match;
  CHECK(acc == doctest::Approx(1.0));
}

TEST_CASE("lloyd iterations never increase inertia") {
  RngStream gen(9, 0);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix x(120, 4);
    for (double& v : x.data()) v = gen.uniform(-5.0, 5.0);
    const KmeansResult res = kmeans(x, 2 + gen.next_below(10), RngStream(100, trial));
    for (std::size_t i = 1; i < res.inertia_history.size(); ++i)
      CHECK(res.inertia_history[i] <= res.inertia_history[i - 1] + 1e-9);
  }
}

TEST_CASE("labeled_cluster_score: perfect clusters score 1 either way") {
  const Blobs blobs = make_blobs(4, 2, 50, 8.0, 21);
  const KmeansResult res = kmeans(blobs.x, 4, RngStream(11, 0));
  CHECK(labeled_cluster_score(res, blobs.x, blobs.labeled_idx, blobs.labeled_gt, false) ==
        doctest::Approx(1.0));
  CHECK(labeled_cluster_score(res, blobs.x, blobs.labeled_idx, blobs.labeled_gt, true) ==
        doctest::Approx(1.0));
}

TEST_CASE("reassignment rescues a constructed stray sample") {
  // Two labeled classes, three clusters; one labeled sample stranded in its
  // own spurious cluster whose nearest dominant center is its true class.
  Matrix x = Matrix::from_rows({
      {0.0, 0.0}, {0.2, 0.0}, {0.0, 0.2},   // class 0 around origin
      {10.0, 0.0}, {10.2, 0.0}, {10.0, 0.2},// class 1 around (10, 0)
      {1.5, 0.0},                           // stray class-0 sample
  });
  KmeansResult res;
  res.centers = Matrix::from_rows({{0.066, 0.066}, {10.066, 0.066}, {1.5, 0.0}});
  res.assignments = {0, 0, 0, 1, 1, 1, 2};
  const std::vector<std::size_t> labeled_idx{0, 1, 2, 3, 4, 5, 6};
  const std::vector<int> labeled_gt{0, 0, 0, 1, 1, 1, 0};

  const double without =
      labeled_cluster_score(res, x, labeled_idx, labeled_gt, false);
  const double with_reassign =
      labeled_cluster_score(res, x, labeled_idx, labeled_gt, true);
  CHECK(without == doctest::Approx(6.0 / 7.0));
  CHECK(with_reassign == doctest::Approx(1.0));
}

TEST_CASE("reassignment never lowers the score") {
  RngStream gen(33, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 40 + gen.next_below(40);
    const std::size_t k = 3 + gen.next_below(6);
    Matrix x(n, 3);
    for (double& v : x.data()) v = gen.uniform(-4.0, 4.0);
    const KmeansResult res = kmeans(x, k, RngStream(7, trial));
    const std::size_t labeled_classes = 2 + gen.next_below(2);
    std::vector<std::size_t> labeled_idx;
    std::vector<int> labeled_gt;
    for (std::size_t i = 0; i < n / 2; ++i) {
      labeled_idx.push_back(i);
      labeled_gt.push_back(static_cast<int>(gen.next_below(labeled_classes)));
    }
    if (k < labeled_classes) continue;
    const double off = labeled_cluster_score(res, x, labeled_idx, labeled_gt, false);
    const double on = labeled_cluster_score(res, x, labeled_idx, labeled_gt, true);
    CHECK(on >= off - 1e-12);
  }
}

TEST_CASE("labeled_cluster_score needs enough clusters") {
  const Blobs blobs = make_blobs(4, 3, 30, 8.0, 3);
  const KmeansResult res = kmeans(blobs.x, 2, RngStream(4, 0));
  CHECK_THROWS(labeled_cluster_score(res, blobs.x, blobs.labeled_idx, blobs.labeled_gt,
                                     true));
}

TEST_CASE("score peaks at the true k on well-separated blobs") {
  const Blobs blobs = make_blobs(6, 3, 60, 8.0, 77);
  double sum_true = 0.0, sum_double = 0.0;
  for (std::uint64_t run = 0; run < 3; ++run) {
    sum_true += labeled_cluster_score(kmeans(blobs.x, 6, RngStream(50, run)), blobs.x,
                                      blobs.labeled_idx, blobs.labeled_gt, false);
    sum_double += labeled_cluster_score(kmeans(blobs.x, 12, RngStream(60, run)), blobs.x,
                                        blobs.labeled_idx, blobs.labeled_gt, false);
  }
  CHECK(sum_true / 3.0 >= sum_double / 3.0 + 0.05);
}

TEST_CASE("estimate_class_count is deterministic and bounded below by k_min") {
  const Blobs blobs = make_blobs(6, 3, 40, 5.0, 13);
  EstimatorConfig cfg;
  cfg.k_min = 3;
  cfg.k_max = 12;
  cfg.runs_per_k = 2;
  cfg.top_values = 5;
  cfg.seed = 99;
  const EstimateResult a = estimate_class_count(blobs.x, blobs.labeled_idx,
                                                blobs.labeled_gt, cfg);
  const EstimateResult b = estimate_class_count(blobs.x, blobs.labeled_idx,
                                                blobs.labeled_gt, cfg);
  CHECK(a.estimated_classes == b.estimated_classes);
  CHECK(a.estimated_classes >= cfg.k_min);
  CHECK(a.table.size() == 10);
  for (std::size_t i = 0; i < a.table.size(); ++i)
    CHECK(a.table[i].score == doctest::Approx(b.table[i].score));

  EstimatorConfig bad = cfg;
  bad.k_max = 2;
  CHECK_THROWS(estimate_class_count(blobs.x, blobs.labeled_idx, blobs.labeled_gt, bad));
}

TEST_CASE("score table serializes") {
  EstimateResult r;
  r.table = {{3, 0.5}, {4, 0.75}};
  r.estimated_classes = 4;
  const std::string csv = score_table_csv(r);
  CHECK(csv.rfind("k,score\n", 0) == 0);
  CHECK(csv.find("\n3,") != std::string::npos);
}
