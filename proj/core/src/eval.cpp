#include "owssl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace owssl {

std::pair<std::vector<std::size_t>, double> hungarian(const Matrix& cost) {
  if (cost.rows() != cost.cols()) throw std::invalid_argument("hungarian: non-square");
  if (!cost.all_finite()) throw std::invalid_argument("hungarian: non-finite entry");
  const std::size_t n = cost.rows();
  if (n == 0) throw std::invalid_argument("hungarian: empty");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-indexed potentials; p[j] is the row matched to column j.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);

  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += cost(i, assignment[i]);
  return {assignment, total};
}

namespace {

Matrix contingency_table(const std::vector<int>& pred, const std::vector<int>& gt,
                         std::size_t num_classes) {
  Matrix counts(num_classes, num_classes);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || gt[i] < 0 || static_cast<std::size_t>(pred[i]) >= num_classes ||
        static_cast<std::size_t>(gt[i]) >= num_classes)
      throw std::invalid_argument("clustering_accuracy: id out of range");
    counts(static_cast<std::size_t>(pred[i]), static_cast<std::size_t>(gt[i])) += 1.0;
  }
  return counts;
}

}  // namespace

std::pair<double, MatchResult> clustering_accuracy(const std::vector<int>& pred,
                                                   const std::vector<int>& gt,
                                                   std::size_t num_classes) {
  if (pred.empty() || pred.size() != gt.size())
    throw std::invalid_argument("clustering_accuracy: empty or mismatched inputs");
  const Matrix counts = contingency_table(pred, gt, num_classes);

  Matrix neg(num_classes, num_classes);
  for (std::size_t i = 0; i < num_classes; ++i)
    for (std::size_t j = 0; j < num_classes; ++j) neg(i, j) = -counts(i, j);
  auto [assignment, total_cost] = hungarian(neg);

  MatchResult match;
  match.mapping = assignment;
  match.total_matched_correct = static_cast<std::size_t>(std::llround(-total_cost));
  const double acc =
      static_cast<double>(match.total_matched_correct) / static_cast<double>(pred.size());
  return {acc, match};
}

EvalReport open_world_report(const std::vector<int>& pred, const std::vector<int>& gt,
                             std::size_t seen_count, std::size_t novel_count) {
  if (pred.size() != gt.size() || pred.empty())
    throw std::invalid_argument("open_world_report: empty or mismatched inputs");

  std::size_t num_classes = seen_count + novel_count;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (gt[i] < 0 || pred[i] < 0)
      throw std::invalid_argument("open_world_report: negative id");
    num_classes = std::max(num_classes, static_cast<std::size_t>(pred[i]) + 1);
    num_classes = std::max(num_classes, static_cast<std::size_t>(gt[i]) + 1);
  }

  EvalReport report;

  // Seen classes: standard accuracy.
  std::size_t seen_total = 0, seen_correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (static_cast<std::size_t>(gt[i]) < seen_count) {
      ++seen_total;
      if (pred[i] == gt[i]) ++seen_correct;
    }
  }
  report.seen_acc =
      seen_total ? static_cast<double>(seen_correct) / static_cast<double>(seen_total) : 0.0;

  // Novel classes: remove seen-predicted samples as errors, Hungarian-match
  // the remainder over novel columns only.
  std::size_t novel_total = 0;
  std::vector<int> novel_pred, novel_gt;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (static_cast<std::size_t>(gt[i]) < seen_count) continue;
    ++novel_total;
    if (static_cast<std::size_t>(pred[i]) < seen_count) {
      ++report.removed_count;
      continue;
    }
    novel_pred.push_back(pred[i] - static_cast<int>(seen_count));
    novel_gt.push_back(gt[i] - static_cast<int>(seen_count));
  }
  if (novel_total == 0) {
    report.novel_acc = 0.0;
  } else if (novel_pred.empty()) {
    report.novel_acc = 0.0;  // everything leaked into seen classes
  } else {
    auto [acc, match] =
        clustering_accuracy(novel_pred, novel_gt, num_classes - seen_count);
    (void)acc;
    report.novel_acc = static_cast<double>(match.total_matched_correct) /
                       static_cast<double>(novel_total);
  }

  // All classes.
  MatchResult all_match;
  if (novel_count == 0) {
    // No clustering ambiguity: cluster ids are class ids.
    all_match.mapping.resize(num_classes);
    for (std::size_t j = 0; j < num_classes; ++j) all_match.mapping[j] = j;
    all_match.total_matched_correct = seen_correct;
    report.all_acc = report.seen_acc;
  } else {
    auto [acc, match] = clustering_accuracy(pred, gt, num_classes);
    report.all_acc = acc;
    all_match = match;
  }

  report.confusion = Matrix(num_classes, num_classes);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const std::size_t mapped = all_match.mapping[static_cast<std::size_t>(pred[i])];
    report.confusion(static_cast<std::size_t>(gt[i]), mapped) += 1.0;
  }
  return report;
}

std::string to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["seen_acc"] = report.seen_acc;
  j["novel_acc"] = report.novel_acc;
  j["all_acc"] = report.all_acc;
  j["removed_count"] = report.removed_count;
  std::vector<std::vector<long long>> confusion(report.confusion.rows());
  for (std::size_t r = 0; r < report.confusion.rows(); ++r)
    for (std::size_t c = 0; c < report.confusion.cols(); ++c)
      confusion[r].push_back(static_cast<long long>(report.confusion(r, c)));
  j["confusion"] = confusion;
  return j.dump(2);
}

std::string confusion_csv(const EvalReport& report) {
  std::ostringstream out;
  const Matrix& m = report.confusion;
  for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << "pred" << j;
  out << "\n";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j)
      out << (j ? "," : "") << static_cast<long long>(m(i, j));
    out << "\n";
  }
  return out.str();
}

}  // namespace owssl
