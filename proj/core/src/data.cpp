#include "owssl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace owssl {

namespace {

enum StreamTag : std::uint64_t {
  kMeansTag = 0x11,
  kTrainTag = 0x22,
  kTestTag = 0x33,
};

std::vector<double> sphere_point(std::size_t dim, double radius, RngStream& rng) {
  std::vector<double> v(dim);
  double nrm = 0.0;
  do {
    nrm = 0.0;
    for (double& c : v) {
      c = rng.normal();
      nrm += c * c;
    }
  } while (nrm == 0.0);
  nrm = std::sqrt(nrm);
  for (double& c : v) c *= radius / nrm;
  return v;
}

double dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

// Greedy farthest-point selection from a seeded candidate pool: deterministic
// and close enough to max-min optimal at desk scale.
Matrix place_means(const DatasetSpec& spec) {
  const std::size_t c = spec.num_classes();
  const double radius = spec.class_sep * std::sqrt(static_cast<double>(spec.dim));
  RngStream rng(spec.seed, derive_stream({kMeansTag}));

  const std::size_t pool_size = 128 + 8 * c;
  std::vector<std::vector<double>> pool;
  pool.reserve(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i)
    pool.push_back(sphere_point(spec.dim, radius, rng));

  std::vector<std::size_t> chosen{0};
  std::vector<double> min_d2(pool_size, std::numeric_limits<double>::infinity());
  while (chosen.size() < c) {
    const auto& last = pool[chosen.back()];
    std::size_t best = 0;
    double best_d2 = -1.0;
    for (std::size_t i = 0; i < pool_size; ++i) {
      min_d2[i] = std::min(min_d2[i], dist2(pool[i], last));
      if (min_d2[i] > best_d2) {
        best_d2 = min_d2[i];
        best = i;
      }
    }
    chosen.push_back(best);
  }

  Matrix means(c, spec.dim);
  for (std::size_t j = 0; j < c; ++j) {
    const auto& p = pool[chosen[j]];
    for (std::size_t k = 0; k < spec.dim; ++k) means(j, k) = p[k];
  }
  return means;
}

std::vector<std::size_t> class_counts(const DatasetSpec& spec) {
  const std::size_t c = spec.num_classes();
  std::vector<std::size_t> counts(c);
  for (std::size_t j = 0; j < c; ++j) {
    double decay = 1.0;
    if (c > 1 && spec.imbalance_factor > 1.0)
      decay = std::pow(spec.imbalance_factor,
                       -static_cast<double>(j) / static_cast<double>(c - 1));
    const auto n = static_cast<std::size_t>(
        std::llround(static_cast<double>(spec.samples_per_class) * decay));
    if (n == 0)
      throw std::invalid_argument(
          "generate: class " + std::to_string(j) +
          " would receive 0 samples; increase samples_per_class");
    counts[j] = n;
  }
  return counts;
}

void append_row(Matrix& dst, std::size_t row, std::span<const double> src) {
  auto r = dst.row(row);
  std::copy(src.begin(), src.end(), r.begin());
}

}  // namespace

void DatasetSpec::validate() const {
  if (dim == 0) throw std::invalid_argument("DatasetSpec: dim must be >= 1");
  if (num_seen < 1) throw std::invalid_argument("DatasetSpec: num_seen must be >= 1");
  if (samples_per_class == 0)
    throw std::invalid_argument("DatasetSpec: samples_per_class must be >= 1");
  if (!(labeled_fraction > 0.0) || labeled_fraction > 1.0)
    throw std::invalid_argument("DatasetSpec: labeled_fraction must be in (0,1]");
  if (imbalance_factor < 1.0)
    throw std::invalid_argument("DatasetSpec: imbalance_factor must be >= 1");
  if (!(class_sep >= 0.0)) throw std::invalid_argument("DatasetSpec: class_sep must be >= 0");
}

void AugmentConfig::validate() const {
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("AugmentConfig: noise_sigma < 0");
  if (scale_lo > scale_hi) throw std::invalid_argument("AugmentConfig: scale range inverted");
  if (mask_prob < 0.0 || mask_prob >= 1.0)
    throw std::invalid_argument("AugmentConfig: mask_prob must be in [0,1)");
}

SplitDataset generate(const DatasetSpec& spec) {
  spec.validate();
  const std::size_t c = spec.num_classes();
  const std::vector<std::size_t> counts = class_counts(spec);

  SplitDataset ds;
  ds.num_seen = spec.num_seen;
  ds.num_novel = spec.num_novel;
  ds.train_counts = counts;
  ds.class_means = place_means(spec);

  std::size_t n_labeled = 0, n_unlabeled = 0;
  std::vector<std::size_t> labeled_per_class(c, 0);
  for (std::size_t j = 0; j < c; ++j) {
    if (j < spec.num_seen) {
      auto k = static_cast<std::size_t>(
          std::llround(spec.labeled_fraction * static_cast<double>(counts[j])));
      k = std::clamp<std::size_t>(k, 1, counts[j]);
      labeled_per_class[j] = k;
      n_labeled += k;
      n_unlabeled += counts[j] - k;
    } else {
      n_unlabeled += counts[j];
    }
  }

  ds.labeled_x = Matrix(n_labeled, spec.dim);
  ds.labeled_class.reserve(n_labeled);
  ds.unlabeled_x = Matrix(n_unlabeled, spec.dim);
  ds.unlabeled_gt.reserve(n_unlabeled);

  std::size_t li = 0, ui = 0;
  std::vector<double> x(spec.dim);
  for (std::size_t j = 0; j < c; ++j) {
    RngStream rng(spec.seed, derive_stream({kTrainTag, j}));
    for (std::size_t s = 0; s < counts[j]; ++s) {
      for (std::size_t k = 0; k < spec.dim; ++k)
        x[k] = ds.class_means(j, k) + rng.normal();
      if (s < labeled_per_class[j]) {
        append_row(ds.labeled_x, li++, x);
        ds.labeled_class.push_back(static_cast<int>(j));
      } else {
        append_row(ds.unlabeled_x, ui++, x);
        ds.unlabeled_gt.push_back(static_cast<int>(j));
      }
    }
  }

  // Test split is i.i.d. with the training distribution: per-class counts
  // follow the same exponential decay, scaled so class 0 gets test_per_class.
  std::vector<std::size_t> test_counts(c);
  std::size_t n_test = 0;
  for (std::size_t j = 0; j < c; ++j) {
    double decay = 1.0;
    if (c > 1 && spec.imbalance_factor > 1.0)
      decay = std::pow(spec.imbalance_factor,
                       -static_cast<double>(j) / static_cast<double>(c - 1));
    test_counts[j] = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround(static_cast<double>(spec.test_per_class) * decay)));
    n_test += test_counts[j];
  }
  ds.test_x = Matrix(n_test, spec.dim);
  ds.test_gt.reserve(n_test);
  std::size_t ti = 0;
  for (std::size_t j = 0; j < c; ++j) {
    RngStream rng(spec.seed, derive_stream({kTestTag, j}));
    for (std::size_t s = 0; s < test_counts[j]; ++s) {
      for (std::size_t k = 0; k < spec.dim; ++k)
        x[k] = ds.class_means(j, k) + rng.normal();
      append_row(ds.test_x, ti++, x);
      ds.test_gt.push_back(static_cast<int>(j));
    }
  }
  return ds;
}

std::vector<double> augment(std::span<const double> x, const AugmentConfig& cfg,
                            RngStream& rng) {
  cfg.validate();
  const double s = rng.uniform(cfg.scale_lo, cfg.scale_hi);
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k)
    out[k] = s * x[k] + (cfg.noise_sigma > 0.0 ? cfg.noise_sigma * rng.normal() : 0.0);
  if (cfg.mask_prob > 0.0) {
    for (double& v : out)
      if (rng.next_double() < cfg.mask_prob) v = 0.0;
  }
  return out;
}

void mixup(Matrix& x, Matrix& y, std::vector<double>& u, double gamma, RngStream& rng) {
  if (!(gamma > 0.0)) throw std::invalid_argument("mixup: gamma must be > 0");
  const std::size_t n = x.rows();
  if (y.rows() != n || u.size() != n)
    throw std::invalid_argument("mixup: rows of x, y, u must align");
  if (n < 2) return;

  const Matrix x0 = x;
  const Matrix y0 = y;
  const std::vector<double> u0 = u;
  for (std::size_t i = 0; i < n; ++i) {
    const double lam = sample_beta(rng, gamma, gamma);
    const std::size_t p = rng.next_below(n);
    auto xi = x.row(i);
    const auto xp = x0.row(p);
    const auto xo = x0.row(i);
    for (std::size_t k = 0; k < xi.size(); ++k) xi[k] = lam * xo[k] + (1.0 - lam) * xp[k];
    auto yi = y.row(i);
    const auto yp = y0.row(p);
    const auto yo = y0.row(i);
    for (std::size_t k = 0; k < yi.size(); ++k) yi[k] = lam * yo[k] + (1.0 - lam) * yp[k];
    u[i] = lam * u0[i] + (1.0 - lam) * u0[p];
  }
}

SplitDataset make_ncd_split(const SplitDataset& data) {
  SplitDataset out = data;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < data.unlabeled_gt.size(); ++i)
    if (static_cast<std::size_t>(data.unlabeled_gt[i]) >= data.num_seen) ++kept;
  out.unlabeled_x = Matrix(kept, data.unlabeled_x.cols());
  out.unlabeled_gt.clear();
  out.unlabeled_gt.reserve(kept);
  std::size_t w = 0;
  for (std::size_t i = 0; i < data.unlabeled_gt.size(); ++i) {
    if (static_cast<std::size_t>(data.unlabeled_gt[i]) < data.num_seen) continue;
    auto dst = out.unlabeled_x.row(w++);
    const auto src = data.unlabeled_x.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
    out.unlabeled_gt.push_back(data.unlabeled_gt[i]);
  }
  return out;
}

double nearest_mean_accuracy(const Matrix& x, const std::vector<int>& gt,
                             const Matrix& means) {
  if (x.rows() != gt.size() || x.rows() == 0)
    throw std::invalid_argument("nearest_mean_accuracy: shape mismatch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto xi = x.row(i);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < means.rows(); ++j) {
      const double d = dist2(xi, means.row(j));
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (static_cast<int>(best) == gt[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(x.rows());
}

Matrix one_hot(const std::vector<int>& labels, std::size_t num_classes) {
  Matrix y(labels.size(), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes)
      throw std::invalid_argument("one_hot: label out of range");
    y(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return y;
}

namespace {

void format_double(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

void write_csv_rows(std::ostream& out, const Matrix& x, const std::vector<int>& cls,
                    const char* split) {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto r = x.row(i);
    for (double v : r) {
      format_double(out, v);
      out << ",";
    }
    out << cls[i] << "," << split << "\n";
  }
}

struct CsvRow {
  std::vector<double> features;
  int cls;
  std::string split;
};

}  // namespace

void export_csv(const SplitDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_csv: cannot open " + path);
  const std::size_t d = data.class_means.cols();
  for (std::size_t k = 0; k < d; ++k) out << "f" << k << ",";
  out << "class,split\n";
  std::vector<int> mean_cls(data.class_means.rows());
  for (std::size_t j = 0; j < mean_cls.size(); ++j) mean_cls[j] = static_cast<int>(j);
  write_csv_rows(out, data.labeled_x, data.labeled_class, "labeled");
  write_csv_rows(out, data.unlabeled_x, data.unlabeled_gt, "unlabeled");
  write_csv_rows(out, data.test_x, data.test_gt, "test");
  write_csv_rows(out, data.class_means, mean_cls, "mean");
  if (!out) throw std::runtime_error("export_csv: write failed for " + path);
}

SplitDataset import_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("import_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("import_csv: empty file");
  std::size_t d = 0;
  {
    std::stringstream header(line);
    std::string col;
    while (std::getline(header, col, ',')) {
      if (col.rfind('f', 0) == 0 && col.size() > 1) ++d;
    }
  }
  if (d == 0) throw std::runtime_error("import_csv: no feature columns in header");

  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    CsvRow row;
    row.features.resize(d);
    std::string cell;
    for (std::size_t k = 0; k < d; ++k) {
      if (!std::getline(ss, cell, ',')) throw std::runtime_error("import_csv: short row");
      row.features[k] = std::stod(cell);
    }
    if (!std::getline(ss, cell, ',')) throw std::runtime_error("import_csv: missing class");
    row.cls = std::stoi(cell);
    if (!std::getline(ss, row.split, ',')) throw std::runtime_error("import_csv: missing split");
    rows.push_back(std::move(row));
  }

  auto count_split = [&](const char* split) {
    std::size_t n = 0;
    for (const auto& r : rows)
      if (r.split == split) ++n;
    return n;
  };
  SplitDataset ds;
  ds.labeled_x = Matrix(count_split("labeled"), d);
  ds.unlabeled_x = Matrix(count_split("unlabeled"), d);
  ds.test_x = Matrix(count_split("test"), d);
  ds.class_means = Matrix(count_split("mean"), d);
  std::size_t li = 0, ui = 0, ti = 0, mi = 0;
  int max_labeled_cls = -1, max_cls = -1;
  for (const auto& r : rows) {
    max_cls = std::max(max_cls, r.cls);
    if (r.split == "labeled") {
      append_row(ds.labeled_x, li++, r.features);
      ds.labeled_class.push_back(r.cls);
      max_labeled_cls = std::max(max_labeled_cls, r.cls);
    } else if (r.split == "unlabeled") {
      append_row(ds.unlabeled_x, ui++, r.features);
      ds.unlabeled_gt.push_back(r.cls);
    } else if (r.split == "test") {
      append_row(ds.test_x, ti++, r.features);
      ds.test_gt.push_back(r.cls);
    } else if (r.split == "mean") {
      append_row(ds.class_means, static_cast<std::size_t>(r.cls), r.features);
      ++mi;
    } else {
      throw std::runtime_error("import_csv: unknown split '" + r.split + "'");
    }
  }
  if (mi != ds.class_means.rows()) throw std::runtime_error("import_csv: bad mean rows");
  ds.num_seen = static_cast<std::size_t>(max_labeled_cls + 1);
  const auto total = static_cast<std::size_t>(std::max(max_cls + 1, max_labeled_cls + 1));
  ds.num_novel = total - ds.num_seen;
  ds.train_counts.assign(total, 0);
  for (int cls : ds.labeled_class) ds.train_counts[static_cast<std::size_t>(cls)]++;
  for (int cls : ds.unlabeled_gt) ds.train_counts[static_cast<std::size_t>(cls)]++;
  return ds;
}

namespace {

constexpr std::uint32_t kBinaryMagic = 0x4F574453;  // "OWDS"
constexpr std::uint32_t kBinaryVersion = 1;

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  write_u64(out, m.rows());
  write_u64(out, m.cols());
  out.write(reinterpret_cast<const char*>(m.data().data()),
            static_cast<std::streamsize>(m.data().size() * sizeof(double)));
}

Matrix read_matrix(std::istream& in) {
  const std::uint64_t rows = read_u64(in);
  const std::uint64_t cols = read_u64(in);
  Matrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data().data()),
          static_cast<std::streamsize>(m.data().size() * sizeof(double)));
  return m;
}

void write_ints(std::ostream& out, const std::vector<int>& v) {
  write_u64(out, v.size());
  for (int x : v) {
    const std::int64_t w = x;
    out.write(reinterpret_cast<const char*>(&w), sizeof(w));
  }
}

std::vector<int> read_ints(std::istream& in) {
  std::vector<int> v(read_u64(in));
  for (int& x : v) {
    std::int64_t w = 0;
    in.read(reinterpret_cast<char*>(&w), sizeof(w));
    x = static_cast<int>(w);
  }
  return v;
}

}  // namespace

void export_binary(const SplitDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("export_binary: cannot open " + path);
  std::uint32_t magic = kBinaryMagic, version = kBinaryVersion;
  out.write(reinterpret_cast<const char*>(&magic), sizeof(magic));
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  write_u64(out, data.num_seen);
  write_u64(out, data.num_novel);
  write_matrix(out, data.labeled_x);
  write_ints(out, data.labeled_class);
  write_matrix(out, data.unlabeled_x);
  write_ints(out, data.unlabeled_gt);
  write_matrix(out, data.test_x);
  write_ints(out, data.test_gt);
  write_matrix(out, data.class_means);
  write_u64(out, data.train_counts.size());
  for (std::size_t c : data.train_counts) write_u64(out, c);
  if (!out) throw std::runtime_error("export_binary: write failed for " + path);
}

SplitDataset import_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("import_binary: cannot open " + path);
  std::uint32_t magic = 0, version = 0;
  in.read(reinterpret_cast<char*>(&magic), sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (magic != kBinaryMagic || version != kBinaryVersion)
    throw std::runtime_error("import_binary: unrecognized format in " + path);
  SplitDataset ds;
  ds.num_seen = read_u64(in);
  ds.num_novel = read_u64(in);
  ds.labeled_x = read_matrix(in);
  ds.labeled_class = read_ints(in);
  ds.unlabeled_x = read_matrix(in);
  ds.unlabeled_gt = read_ints(in);
  ds.test_x = read_matrix(in);
  ds.test_gt = read_ints(in);
  ds.class_means = read_matrix(in);
  ds.train_counts.resize(read_u64(in));
  for (std::size_t& c : ds.train_counts) c = read_u64(in);
  if (!in) throw std::runtime_error("import_binary: truncated file " + path);
  return ds;
}

}  // namespace owssl
