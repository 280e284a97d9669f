#include "attntopo/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include "attntopo/attn_io.hpp"
#include "attntopo/classifier.hpp"
#include "attntopo/feature_csv.hpp"
#include "attntopo/features.hpp"
#include "attntopo/parallel.hpp"
#include "attntopo/persistence.hpp"
#include "attntopo/synth.hpp"

namespace attntopo {
namespace {

namespace fs = std::filesystem;

constexpr std::size_t kProgressEvery = 100;

struct PipelineConfig {
  std::string input;
  std::string output;
  std::string model_path;
  std::string features_out;
  std::uint64_t seed = 42;
  double train_fraction = 0.8;
  double lambda = 1e-3;
  std::size_t max_iters = 2000;
  double tol = 1e-6;
  double threshold = 0.5;
  bool balance_classes = false;
  bool drop_zero_persistence = false;
  std::string heads = "all";
  std::size_t threads = 1;
  bool consolidated = false;
  SynthOptions synth;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class RunLog {
 public:
  explicit RunLog(std::ostream& err) : err_(err) {}

  void line(const std::string& tag, const std::string& text) {
    std::lock_guard lock(mutex_);
    err_ << '[' << tag << "] " << text << '\n';
    err_.flush();
  }

  void config(const std::string& command, const PipelineConfig& c, bool with_training) {
    line("config", "command=" + command);
    line("config", "seed=" + std::to_string(c.seed));
    line("config", "threads=" + std::to_string(c.threads));
    line("config", "heads=" + c.heads);
    line("config", std::string("drop_zero_persistence=") + (c.drop_zero_persistence ? "1" : "0"));
    if (with_training) {
      line("config", "train_fraction=" + num(c.train_fraction));
      line("config", "lambda=" + num(c.lambda));
      line("config", "max_iters=" + std::to_string(c.max_iters));
      line("config", "tol=" + num(c.tol));
      line("config", "threshold=" + num(c.threshold));
      line("config", std::string("balance_classes=") + (c.balance_classes ? "1" : "0"));
    }
  }

  std::function<void(std::size_t)> progress(std::size_t total) {
    return [this, total](std::size_t done) {
      if (done % kProgressEvery == 0 || done == total) {
        line("progress", std::to_string(done) + "/" + std::to_string(total) + " samples");
      }
    };
  }

 private:
  std::ostream& err_;
  std::mutex mutex_;
};

FeaturizeOptions featurize_options(const PipelineConfig& c) {
  FeaturizeOptions o;
  o.heads = parse_head_selection(c.heads);
  o.drop_zero_persistence = c.drop_zero_persistence;
  o.threads = c.threads;
  return o;
}

std::vector<FeatureVector> featurize_file(const PipelineConfig& c, RunLog& log) {
  const auto samples = read_attn_file(c.input);
  log.line("ingest", std::to_string(samples.size()) + " samples from " + c.input);
  auto options = featurize_options(c);
  options.on_sample_done = log.progress(samples.size());
  return featurize_samples(samples, options);
}

void write_report(std::ostream& out, const EvalReport& r) {
  out << r.human_text() << r.machine_line() << '\n';
}

EvalReport train_and_report(const std::vector<FeatureVector>& rows, const PipelineConfig& c,
                            RunLog& log, std::ostream& out) {
  const auto labels = labels_of(rows);
  const FeatureMatrix all = FeatureMatrix::from_vectors(rows);
  const SplitIndices split = stratified_split(labels, c.train_fraction, c.seed);

  auto gather = [&](const std::vector<std::size_t>& idx, FeatureMatrix& x,
                    std::vector<std::uint8_t>& y) {
    x = FeatureMatrix(idx.size(), all.cols());
    y.clear();
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const auto src = all.row(idx[r]);
      std::copy(src.begin(), src.end(), x.row(r).begin());
      y.push_back(labels[idx[r]]);
    }
  };
  FeatureMatrix x_train, x_test;
  std::vector<std::uint8_t> y_train, y_test;
  gather(split.train, x_train, y_train);
  gather(split.test, x_test, y_test);
  log.line("split", "train=" + std::to_string(x_train.rows()) +
                        " test=" + std::to_string(x_test.rows()) +
                        " features=" + std::to_string(all.cols()));

  const StandardizationStats stats = fit_standardizer(x_train);
  std::size_t passthrough = 0;
  for (double s : stats.stds) passthrough += s == 0.0;
  log.line("standardize", "fitted on train split; " + std::to_string(passthrough) +
                              " constant feature(s) passed through unscaled");

  TrainOptions topt;
  topt.lambda = c.lambda;
  topt.max_iters = c.max_iters;
  topt.tol = c.tol;
  topt.balance_classes = c.balance_classes;
  TrainResult trained = train_logreg(apply_standardizer(stats, x_train), y_train, topt);
  trained.model.stats = stats;
  log.line("train", "iterations=" + std::to_string(trained.iterations) +
                        " final_loss=" + num(trained.final_loss) +
                        " converged=" + (trained.converged ? "1" : "0"));

  if (!c.model_path.empty()) {
    std::ofstream f(c.model_path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot create model file " + c.model_path);
    write_model(f, trained.model);
    if (!f) throw DataError("write failed on model file " + c.model_path);
    log.line("train", "model written to " + c.model_path);
  }

  if (x_test.rows() == 0) throw DataError("test split is empty; lower --train-fraction");
  const auto predicted = classify(predict(trained.model, x_test), c.threshold);
  const EvalReport report = evaluate(predicted, y_test);
  write_report(out, report);
  return report;
}

std::string diagram_file_name(std::size_t sample, std::size_t layer, std::size_t head, int dim) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%06zu_l%zu_h%zu_dim%d.txt", sample, layer, head, dim);
  return buf;
}

int cmd_diagrams(const PipelineConfig& c, RunLog& log) {
  log.config("diagrams", c, false);
  const auto samples = read_attn_file(c.input);
  log.line("ingest", std::to_string(samples.size()) + " samples from " + c.input);
  const HeadSelection requested = parse_head_selection(c.heads);
  fs::create_directories(c.output);

  std::ofstream consolidated;
  if (c.consolidated) {
    consolidated.open(fs::path(c.output) / "diagrams.txt", std::ios::binary | std::ios::trunc);
    if (!consolidated) throw DataError("cannot create " + (fs::path(c.output) / "diagrams.txt").string());
  }

  auto progress = log.progress(samples.size());
  std::atomic<std::size_t> done{0};
  // Samples are processed in order-independent parallel chunks and written
  // back in input order.
  std::vector<std::vector<std::pair<std::pair<std::size_t, std::size_t>, DiagramPair>>> results(
      samples.size());
  parallel_for(samples.size(), c.threads, [&](std::size_t i) {
    const Sample& s = samples[i];
    HeadSelection heads = requested;
    if (heads.empty()) {
      for (std::size_t l = 0; l < s.tensor.layers(); ++l) {
        for (std::size_t h = 0; h < s.tensor.heads(); ++h) heads.emplace_back(l, h);
      }
    }
    for (const auto& [l, h] : heads) {
      if (l >= s.tensor.layers() || h >= s.tensor.heads()) {
        throw DataError("sample " + s.id + ": head " + std::to_string(l) + ":" +
                        std::to_string(h) + " does not exist");
      }
      auto dgms = compute_diagrams(symmetrize(s.tensor.head(l, h), s.tensor.tokens()));
      if (c.drop_zero_persistence) {
        dgms.first = drop_zero_persistence(std::move(dgms.first));
        dgms.second = drop_zero_persistence(std::move(dgms.second));
      }
      results[i].push_back({{l, h}, std::move(dgms)});
    }
    progress(done.fetch_add(1) + 1);
  });

  std::size_t records = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (const auto& [lh, dgms] : results[i]) {
      for (const PersistenceDiagram* d : {&dgms.first, &dgms.second}) {
        if (c.consolidated) {
          consolidated << "# sample=" << samples[i].id << " label=" << int{samples[i].label}
                       << " layer=" << lh.first << " head=" << lh.second << " dim=" << int{d->dim}
                       << " pairs=" << d->size() << '\n';
          write_diagram(consolidated, *d);
        } else {
          const fs::path p = fs::path(c.output) / diagram_file_name(i, lh.first, lh.second, d->dim);
          std::ofstream f(p, std::ios::binary | std::ios::trunc);
          if (!f) throw DataError("cannot create " + p.string());
          write_diagram(f, *d);
        }
        ++records;
      }
    }
  }
  if (c.consolidated && !consolidated) throw DataError("write failed on consolidated diagram file");
  log.line("diagrams", std::to_string(records) + " diagram records written to " + c.output);
  return kExitOk;
}

int cmd_featurize(const PipelineConfig& c, RunLog& log, std::ostream& out) {
  log.config("featurize", c, false);
  const auto rows = featurize_file(c, log);
  if (c.output.empty() || c.output == "-") {
    write_feature_csv(out, rows);
  } else {
    write_feature_csv(fs::path(c.output), rows);
    log.line("featurize", std::to_string(rows.size()) + " rows written to " + c.output);
  }
  return kExitOk;
}

int cmd_train(const PipelineConfig& c, RunLog& log, std::ostream& out) {
  log.config("train", c, true);
  const auto rows = read_feature_csv(fs::path(c.input));
  log.line("ingest", std::to_string(rows.size()) + " feature rows from " + c.input);
  train_and_report(rows, c, log, out);
  return kExitOk;
}

int cmd_eval(const PipelineConfig& c, RunLog& log, std::ostream& out) {
  log.line("config", "command=eval");
  log.line("config", "threshold=" + num(c.threshold));
  std::ifstream f(c.model_path, std::ios::binary);
  if (!f) throw DataError("cannot open model file " + c.model_path);
  const LinearModel model = read_model(f);
  const auto rows = read_feature_csv(fs::path(c.input));
  log.line("ingest", std::to_string(rows.size()) + " feature rows from " + c.input);
  const auto predicted = classify(predict(model, FeatureMatrix::from_vectors(rows)), c.threshold);
  write_report(out, evaluate(predicted, labels_of(rows)));
  return kExitOk;
}

int cmd_pipeline(const PipelineConfig& c, RunLog& log, std::ostream& out) {
  log.config("pipeline", c, true);
  const auto rows = featurize_file(c, log);
  if (!c.features_out.empty()) {
    write_feature_csv(fs::path(c.features_out), rows);
    log.line("featurize", std::to_string(rows.size()) + " rows written to " + c.features_out);
  }
  train_and_report(rows, c, log, out);
  return kExitOk;
}

int cmd_synth(const PipelineConfig& c, RunLog& log) {
  log.line("config", "command=synth");
  log.line("config", "seed=" + std::to_string(c.synth.seed));
  log.line("config", "samples=" + std::to_string(c.synth.samples));
  log.line("config", "layers=" + std::to_string(c.synth.layers) +
                         " heads=" + std::to_string(c.synth.heads) +
                         " tokens=" + std::to_string(c.synth.tokens));
  const auto samples = generate_synthetic(c.synth);
  write_attn_file(samples, c.output);
  log.line("synth", std::to_string(samples.size()) + " samples written to " + c.output);
  return kExitOk;
}

int cmd_validate(const PipelineConfig& c, RunLog& log, std::ostream& out) {
  const auto samples = read_attn_file(c.input, AttnReadOptions{.validate_tensors = false});
  std::size_t total = 0;
  std::size_t bad_samples = 0;
  for (const Sample& s : samples) {
    const auto v = validate_tensor(s.tensor);
    write_violations(out, s.id, v);
    total += v.size();
    bad_samples += !v.empty();
  }
  log.line("validate", std::to_string(samples.size()) + " samples, " + std::to_string(bad_samples) +
                           " with violations, " + std::to_string(total) + " violations total");
  return total == 0 ? kExitOk : kExitData;
}

void add_feature_flags(CLI::App* cmd, PipelineConfig& c) {
  cmd->add_option("--heads", c.heads, "Heads to use as layer:head,... or 'all'");
  cmd->add_flag("--drop-zero-persistence", c.drop_zero_persistence,
                "Remove pairs with birth == death before computing features");
}

void add_training_flags(CLI::App* cmd, PipelineConfig& c) {
  cmd->add_option("--seed", c.seed, "Split seed");
  cmd->add_option("--train-fraction", c.train_fraction, "Training share per class")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--lambda", c.lambda, "L2 regularization strength")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--max-iters", c.max_iters, "Gradient descent iteration cap");
  cmd->add_option("--tol", c.tol, "Stop when the gradient max-norm falls below this")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--threshold", c.threshold, "Decision threshold on the probability")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_flag("--balance-classes", c.balance_classes, "Inverse class-frequency sample weights");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Persistent homology features of attention maps for vulnerability detection",
               "attntopo"};
  app.require_subcommand(1);
  PipelineConfig c;

  auto* diagrams = app.add_subcommand("diagrams", "Dump dim-0/1 persistence diagrams per head");
  diagrams->add_option("attn", c.input, "ATTN file")->required();
  diagrams->add_option("-o,--out", c.output, "Output directory")->required();
  diagrams->add_flag("--consolidated", c.consolidated, "Write one diagrams.txt instead of one file per diagram");
  add_feature_flags(diagrams, c);

  auto* featurize = app.add_subcommand("featurize", "Write the topological feature CSV");
  featurize->add_option("attn", c.input, "ATTN file")->required();
  featurize->add_option("-o,--out", c.output, "Output CSV (default stdout)");
  add_feature_flags(featurize, c);

  auto* train = app.add_subcommand("train", "Fit logistic regression on a feature CSV");
  train->add_option("csv", c.input, "Feature CSV")->required();
  train->add_option("-m,--model-out", c.model_path, "Where to write the model");
  add_training_flags(train, c);

  auto* eval = app.add_subcommand("eval", "Evaluate a saved model on a feature CSV");
  eval->add_option("model", c.model_path, "Model file")->required();
  eval->add_option("csv", c.input, "Feature CSV")->required();
  eval->add_option("--threshold", c.threshold, "Decision threshold")->check(CLI::Range(0.0, 1.0));

  auto* pipeline = app.add_subcommand("pipeline", "featurize + split + standardize + train + evaluate");
  pipeline->add_option("attn", c.input, "ATTN file")->required();
  pipeline->add_option("--features-out", c.features_out, "Also write the feature CSV here");
  pipeline->add_option("-m,--model-out", c.model_path, "Where to write the model");
  add_feature_flags(pipeline, c);
  add_training_flags(pipeline, c);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic two-class ATTN file");
  synth->add_option("-o,--out", c.output, "Output ATTN file")->required();
  synth->add_option("-n,--samples", c.synth.samples, "Sample count")->check(CLI::Range(2, 1000000));
  synth->add_option("--seed", c.synth.seed, "Generator seed");
  synth->add_option("--layers", c.synth.layers, "Layers")->check(CLI::Range(1, 64));
  synth->add_option("--heads", c.synth.heads, "Heads per layer")->check(CLI::Range(1, 64));
  synth->add_option("--tokens", c.synth.tokens, "Tokens per sample")->check(CLI::Range(4, 512));

  auto* validate = app.add_subcommand("validate", "Report attention rows that are not softmax output");
  validate->add_option("attn", c.input, "ATTN file")->required();

  // Commands without parallel work accept --threads too, so scripts can pass
  // it uniformly.
  for (CLI::App* cmd : {diagrams, featurize, train, eval, pipeline, synth, validate}) {
    cmd->add_option("--threads", c.threads, "Worker threads")->check(CLI::Range(1, 1024));
  }

  try {
    std::vector<const char*> argv{"attntopo"};
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  RunLog log(err);
  try {
    if (*diagrams) return cmd_diagrams(c, log);
    if (*featurize) return cmd_featurize(c, log, out);
    if (*train) return cmd_train(c, log, out);
    if (*eval) return cmd_eval(c, log, out);
    if (*pipeline) return cmd_pipeline(c, log, out);
    if (*synth) return cmd_synth(c, log);
    if (*validate) return cmd_validate(c, log, out);
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    // AttnFormatError, CsvError, DataError, invalid input and I/O failures.
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace attntopo
