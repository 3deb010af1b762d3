#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "owssl/config.hpp"
#include "owssl/data.hpp"
#include "owssl/estimate.hpp"
#include "owssl/eval.hpp"
#include "owssl/log.hpp"
#include "owssl/model.hpp"
#include "owssl/train.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kSchemaVersion = 1;

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::string ckpt_path;
  long long seed = -1;
  bool ncd = false;
  bool print_config = false;
  std::string axis;
  std::vector<double> values;
};

owssl::ExperimentConfig effective_config(const CliOptions& opts) {
  owssl::ExperimentConfig cfg = opts.config_path.empty()
                                    ? owssl::default_config()
                                    : owssl::load_config_file(opts.config_path);
  if (opts.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opts.seed);
  if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
  if (opts.ncd) cfg.train.ncd_mode = true;
  cfg.resolve();
  cfg.validate();
  return cfg;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw std::runtime_error("cannot create output directory " + dir);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string curves_csv(const std::vector<owssl::EpochRecord>& history,
                       std::size_t num_classes) {
  std::ostringstream out;
  out << "epoch,lr,loss,seen_acc,novel_acc,all_acc";
  for (std::size_t j = 0; j < num_classes; ++j) out << ",prior_" << j;
  out << "\n";
  for (const auto& rec : history) {
    out << rec.epoch << "," << format_double(rec.lr) << "," << format_double(rec.loss)
        << "," << format_double(rec.seen_acc) << "," << format_double(rec.novel_acc)
        << "," << format_double(rec.all_acc);
    for (double p : rec.prior) out << "," << format_double(p);
    out << "\n";
  }
  return out.str();
}

ordered_json report_json(const owssl::EvalReport& report) {
  return ordered_json::parse(owssl::to_json(report));
}

void write_metrics(const owssl::ExperimentConfig& cfg, const owssl::EvalReport& report,
                   const std::string& path) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = cfg.seed;
  j["seen_acc"] = report.seen_acc;
  j["novel_acc"] = report.novel_acc;
  j["all_acc"] = report.all_acc;
  j["removed_count"] = report.removed_count;
  j["config"] = ordered_json::parse(owssl::serialize_config(cfg));
  write_file(path, j.dump(2) + "\n");
}

owssl::SplitDataset build_dataset(const owssl::ExperimentConfig& cfg) {
  owssl::SplitDataset data = owssl::generate(cfg.dataset);
  if (cfg.train.ncd_mode) data = owssl::make_ncd_split(data);
  return data;
}

int cmd_train(const CliOptions& opts) {
  const owssl::ExperimentConfig cfg = effective_config(opts);
  ensure_out_dir(cfg.output_dir);
  const owssl::SplitDataset data = build_dataset(cfg);
  owssl::log_info("training on " + std::to_string(data.unlabeled_x.rows()) +
                  " unlabeled / " + std::to_string(data.labeled_x.rows()) +
                  " labeled samples");
  const owssl::TrainResult result = owssl::train(data, cfg.train);

  const fs::path out(cfg.output_dir);
  write_metrics(cfg, result.final_report, (out / "metrics.json").string());
  write_file((out / "curves.csv").string(),
             curves_csv(result.history, result.final_prior.num_classes()));
  if (cfg.emit_confusion)
    write_file((out / "confusion.csv").string(), owssl::confusion_csv(result.final_report));
  owssl::save_checkpoint(result.params, (out / "params.ckpt").string());
  owssl::log_info("all_acc " + format_double(result.final_report.all_acc));
  return 0;
}

int cmd_evaluate(const CliOptions& opts) {
  const owssl::ExperimentConfig cfg = effective_config(opts);
  if (opts.ckpt_path.empty())
    throw std::invalid_argument("evaluate requires --ckpt PATH");
  ensure_out_dir(cfg.output_dir);
  const owssl::SplitDataset data = build_dataset(cfg);
  const owssl::ModelParams params = owssl::load_checkpoint(opts.ckpt_path);
  const std::vector<int> pred = owssl::predict_classes(params, data.test_x);
  const std::size_t head_novel = params.num_classes() - data.num_seen;
  const owssl::EvalReport report =
      owssl::open_world_report(pred, data.test_gt, data.num_seen, head_novel);
  const fs::path out(cfg.output_dir);
  write_metrics(cfg, report, (out / "metrics.json").string());
  if (cfg.emit_confusion)
    write_file((out / "confusion.csv").string(), owssl::confusion_csv(report));
  return 0;
}

int cmd_estimate(const CliOptions& opts) {
  const owssl::ExperimentConfig cfg = effective_config(opts);
  ensure_out_dir(cfg.output_dir);
  const owssl::SplitDataset data = build_dataset(cfg);

  // Feature matrix: labeled rows first, then unlabeled.
  const std::size_t nl = data.labeled_x.rows();
  const std::size_t nu = data.unlabeled_x.rows();
  owssl::Matrix x(nl + nu, data.labeled_x.cols());
  std::vector<std::size_t> labeled_idx(nl);
  for (std::size_t i = 0; i < nl; ++i) {
    labeled_idx[i] = i;
    std::copy(data.labeled_x.row(i).begin(), data.labeled_x.row(i).end(),
              x.row(i).begin());
  }
  for (std::size_t i = 0; i < nu; ++i)
    std::copy(data.unlabeled_x.row(i).begin(), data.unlabeled_x.row(i).end(),
              x.row(nl + i).begin());

  const owssl::EstimateResult result =
      owssl::estimate_class_count(x, labeled_idx, data.labeled_class, cfg.estimator);

  const fs::path out(cfg.output_dir);
  write_file((out / "per_k.csv").string(), owssl::score_table_csv(result));
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = cfg.seed;
  j["estimate"] = result.estimated_classes;
  j["ground_truth"] = data.num_classes();
  j["per_k_table"] = "per_k.csv";
  write_file((out / "estimate.json").string(), j.dump(2) + "\n");
  owssl::log_info("estimated classes: " + std::to_string(result.estimated_classes) +
                  " (ground truth " + std::to_string(data.num_classes()) + ")");
  return 0;
}

int cmd_sweep(const CliOptions& opts) {
  const owssl::ExperimentConfig base = effective_config(opts);
  if (opts.axis.empty() || opts.values.empty())
    throw std::invalid_argument("sweep requires --axis NAME and --values LIST");

  ensure_out_dir(base.output_dir);
  std::ostringstream csv;
  csv << "axis,value,seen_acc,novel_acc,all_acc,removed_count\n";

  for (double value : opts.values) {
    owssl::ExperimentConfig cfg = base;
    if (opts.axis == "novel_fraction") {
      const std::size_t total = cfg.dataset.num_classes();
      auto novel = static_cast<std::size_t>(
          std::llround(value * static_cast<double>(total)));
      novel = std::min(novel, total - 1);
      cfg.dataset.num_novel = novel;
      cfg.dataset.num_seen = total - novel;
    } else if (opts.axis == "temperature") {
      cfg.train.default_temperature = value;
      cfg.train.uncertainty.clip_lo = 0.0;  // re-derive from temperature
    } else if (opts.axis == "class_estimate_error") {
      const double novel = static_cast<double>(cfg.dataset.num_novel);
      cfg.train.head_novel_override =
          std::max<long>(1, std::llround(novel * (1.0 + value)));
    } else if (opts.axis == "imbalance_factor") {
      cfg.dataset.imbalance_factor = value;
    } else {
      throw std::invalid_argument("unknown sweep axis '" + opts.axis + "'");
    }
    cfg.resolve();
    cfg.validate();

    const owssl::SplitDataset data = build_dataset(cfg);
    const owssl::TrainResult result = owssl::train(data, cfg.train);
    const owssl::EvalReport& r = result.final_report;
    csv << opts.axis << "," << format_double(value) << "," << format_double(r.seen_acc)
        << "," << format_double(r.novel_acc) << "," << format_double(r.all_acc) << ","
        << r.removed_count << "\n";
    owssl::log_info(opts.axis + "=" + format_double(value) + " all_acc " +
                    format_double(r.all_acc));
  }
  write_file((fs::path(base.output_dir) / "sweep.csv").string(), csv.str());
  return 0;
}

int cmd_gen_data(const CliOptions& opts) {
  const owssl::ExperimentConfig cfg = effective_config(opts);
  ensure_out_dir(cfg.output_dir);
  const owssl::SplitDataset data = build_dataset(cfg);
  const fs::path out(cfg.output_dir);
  owssl::export_csv(data, (out / "dataset.csv").string());
  owssl::export_binary(data, (out / "dataset.bin").string());
  owssl::log_info("wrote " +
                  std::to_string(data.labeled_x.rows() + data.unlabeled_x.rows() +
                                 data.test_x.rows()) +
                  " samples to " + cfg.output_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-world semi-supervised learning engine on synthetic data"};
  app.require_subcommand(1);

  CliOptions opts;
  app.add_option("--config", opts.config_path, "Path to a JSON experiment config");
  app.add_option("--seed", opts.seed, "Override the config seed");
  app.add_option("--out", opts.out_dir, "Override the output directory");
  app.add_flag("--ncd", opts.ncd, "Novel-class-discovery mode");
  app.add_flag("--print-config", opts.print_config,
               "Print the effective config and exit");

  auto* train = app.add_subcommand("train", "Train and evaluate one experiment");
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint");
  evaluate->add_option("--ckpt", opts.ckpt_path, "Parameter checkpoint path");
  auto* estimate = app.add_subcommand("estimate", "Estimate the number of classes");
  auto* sweep = app.add_subcommand("sweep", "Train once per axis value");
  sweep->add_option("--axis", opts.axis,
                    "novel_fraction|temperature|class_estimate_error|imbalance_factor");
  sweep->add_option("--values", opts.values, "Axis values")->delimiter(',');
  auto* gen = app.add_subcommand("gen-data", "Generate and export a dataset");
  for (auto* sub : {train, evaluate, estimate, sweep, gen}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (opts.print_config) {
      std::cout << owssl::serialize_config(effective_config(opts));
      return 0;
    }
    if (train->parsed()) return cmd_train(opts);
    if (evaluate->parsed()) return cmd_evaluate(opts);
    if (estimate->parsed()) return cmd_estimate(opts);
    if (sweep->parsed()) return cmd_sweep(opts);
    if (gen->parsed()) return cmd_gen_data(opts);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
