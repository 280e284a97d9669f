// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fail. End-to-end checks drive the built command-line tool.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "attntopo/attn_io.hpp"
#include "attntopo/classifier.hpp"
#include "attntopo/features.hpp"
#include "attntopo/filtration.hpp"
#include "attntopo/oracle.hpp"
#include "attntopo/persistence.hpp"
#include "attntopo/synth.hpp"
#include "oracles.hpp"

using namespace attntopo;
using namespace attntopo::testing;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<PersistencePair> multiset(const DiagramPair& d) {
  auto out = d.first.pairs;
  out.insert(out.end(), d.second.pairs.begin(), d.second.pairs.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string g_run_tag = "all";

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("attntopo_acceptance_" + g_run_tag);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Runs the CLI; stdout goes to `stdout_file`, stderr is discarded.
int cli(const std::string& args, const std::string& stdout_file) {
  const std::string cmd = std::string("\"") + ATTNTOPO_CLI_PATH + "\" " + args + " > \"" +
                          (work_dir() / stdout_file).string() + "\" 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string path(const std::string& leaf) { return (work_dir() / leaf).string(); }

Outcome oracle_equivalence() {
  std::mt19937_64 rng(20240601);
  const auto start = Clock::now();
  std::size_t mismatches = 0, tied = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 7;
    auto m = random_matrix(rng, n);
    if (trial % 2 == 1 && m.edge_count() >= 2) {
      // Plant ties by copying some values onto other edges.
      auto upper = m.upper();
      const std::size_t copies = 1 + rng() % upper.size();
      for (std::size_t k = 0; k < copies; ++k) upper[rng() % upper.size()] = upper[rng() % upper.size()];
      if (trial % 4 == 3) {
        for (double& v : upper) v = std::round(v * 4.0) / 4.0;
      }
      m = DistanceMatrix(n, upper);
      ++tied;
    }
    if (multiset(compute_diagrams(m)) != multiset(oracle_reduction(build_filtration(m)))) ++mismatches;
  }
  const double t = seconds_since(start);
  return {mismatches == 0 && t < 10.0,
          std::to_string(mismatches) + " mismatches in 200 matrices (" + std::to_string(tied) +
              " with planted ties), " + fmt("%.3f s", t)};
}

Outcome mst_identity() {
  std::mt19937_64 rng(7);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 29;
    const auto m = random_matrix(rng, n, trial % 3 == 0 ? 16 : 0);
    const auto h0 = compute_h0(m);
    std::vector<double> deaths;
    for (std::size_t k = 0; k + 1 < h0.pairs.size(); ++k) deaths.push_back(h0.pairs[k].death);
    std::sort(deaths.begin(), deaths.end());
    const bool essential_ok = h0.size() == n && h0.pairs.back() == PersistencePair{0.0, 1.0, 0};
    if (!essential_ok || deaths != prim_mst_weights(m)) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches in 100 matrices"};
}

Outcome square_cycle() {
  DistanceMatrix m(4);
  m.set(0, 1, 0.1);
  m.set(1, 2, 0.1);
  m.set(2, 3, 0.1);
  m.set(0, 3, 0.1);
  m.set(0, 2, 0.9);
  m.set(1, 3, 0.9);
  const PersistencePair want{0.1, 0.9, 1};
  const auto h1 = compute_diagrams(m).second.pairs;
  const auto oracle = oracle_reduction(build_filtration(m)).second.pairs;
  const bool ours = std::count(h1.begin(), h1.end(), want) == 1;
  const bool theirs = std::count(oracle.begin(), oracle.end(), want) == 1;
  return {ours && theirs, std::string("pair (0.1, 0.9) ") + (ours ? "present" : "missing") +
                              ", oracle " + (theirs ? "agrees" : "disagrees")};
}

Outcome entropy_checks() {
  auto diagram = [](std::vector<double> lifespans) {
    PersistenceDiagram d;
    for (double l : lifespans) d.pairs.push_back({0.0, l, 0});
    return d;
  };
  const double single = persistence_entropy(diagram({1.0}));
  double worst_k = 0.0;
  for (std::size_t k = 1; k <= 64; ++k) {
    const double h = persistence_entropy(diagram(std::vector<double>(k, 0.37)));
    worst_k = std::max(worst_k, std::abs(h - std::log(static_cast<double>(k))));
  }
  const double split = persistence_entropy(diagram({0.75, 0.25}));
  const bool ok = single == 0.0 && worst_k <= 1e-12 && std::abs(split - 0.5623351) < 1e-6 &&
                  std::abs(split - entropy_by_identity({0.75, 0.25})) < 1e-12;
  return {ok, "single=" + fmt("%g", single) + " max|H-ln k|=" + fmt("%.2e", worst_k) +
                  " split=" + fmt("%.9f", split)};
}

Outcome gradient_check() {
  std::mt19937_64 rng(99);
  double worst = 0.0;
  for (int point = 0; point < 10; ++point) {
    const std::size_t rows = 30, cols = 5;
    FeatureMatrix x(rows, cols);
    std::vector<std::uint8_t> y(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) x(i, j) = 4.0 * uniform01(rng) - 2.0;
      y[i] = static_cast<std::uint8_t>(rng() % 2);
    }
    std::vector<double> w(cols);
    for (double& v : w) v = 2.0 * uniform01(rng) - 1.0;
    const double b = 2.0 * uniform01(rng) - 1.0;
    const double lambda = 0.01 * point;
    const auto g = logistic_objective(x, y, {}, lambda, w, b);
    const double h = 1e-6;
    double diff2 = 0.0, norm2 = 0.0;
    for (std::size_t j = 0; j <= cols; ++j) {
      auto wp = w, wm = w;
      double bp = b, bm = b;
      if (j < cols) {
        wp[j] += h;
        wm[j] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double fd =
          (logistic_objective(x, y, {}, lambda, wp, bp).loss - logistic_objective(x, y, {}, lambda, wm, bm).loss) /
          (2 * h);
      const double an = j < cols ? g.grad_weights[j] : g.grad_bias;
      diff2 += (fd - an) * (fd - an);
      norm2 += std::max(fd * fd, an * an);
    }
    worst = std::max(worst, std::sqrt(diff2 / norm2));
  }
  return {worst < 1e-5, "max relative error " + fmt("%.2e", worst) + " over 10 points"};
}

double report_value(const std::string& report, const std::string& key) {
  const auto pos = report.find(key + "=");
  if (pos == std::string::npos) return -1.0;
  return std::strtod(report.c_str() + pos + key.size() + 1, nullptr);
}

Outcome synthetic_end_to_end() {
  const auto start = Clock::now();
  if (cli("synth -o " + path("e2e.attn") + " -n 400 --layers 2 --heads 2 --tokens 30 --seed 11",
          "e2e_synth.out") != 0) {
    return {false, "synth failed"};
  }
  if (cli("pipeline " + path("e2e.attn") + " --threads 1", "e2e_report.txt") != 0) {
    return {false, "pipeline failed"};
  }
  const double t = seconds_since(start);
  const std::string report = slurp(work_dir() / "e2e_report.txt");
  const double f1 = report_value(report, "f1");
  const double acc = report_value(report, "accuracy");
  return {f1 >= 0.95 && acc >= 0.95 && t < 120.0,
          "f1=" + fmt("%.4f", f1) + " accuracy=" + fmt("%.4f", acc) + " in " + fmt("%.1f s", t)};
}

Outcome determinism() {
  if (cli("synth -o " + path("d.attn") + " -n 120 --layers 2 --heads 3 --tokens 24 --seed 5", "d0.out") != 0 ||
      cli("synth -o " + path("d_again.attn") + " -n 120 --layers 2 --heads 3 --tokens 24 --seed 5 --threads 4", "d1.out") != 0) {
    return {false, "synth failed"};
  }
  std::vector<std::string> differing;
  auto same = [&](const std::string& what, const std::string& a, const std::string& b) {
    if (slurp(work_dir() / a) != slurp(work_dir() / b) || !fs::exists(work_dir() / a)) differing.push_back(what);
  };
  same("synth", "d.attn", "d_again.attn");

  std::size_t runs = 0;
  for (const char* threads : {"1", "1", "4"}) {
    const std::string tag = std::string("t") + threads + "_" + std::to_string(runs++);
    const std::string t = std::string(" --threads ") + threads;
    cli("featurize " + path("d.attn") + " -o " + path(tag + ".csv") + t, tag + "_feat.out");
    cli("featurize " + path("d.attn") + t, tag + "_feat_stdout.csv");
    cli("diagrams " + path("d.attn") + " -o " + path(tag + "_dg") + " --consolidated" + t, tag + "_dg.out");
    cli("diagrams " + path("d.attn") + " -o " + path(tag + "_dgs") + " --heads 1:2" + t, tag + "_dgs.out");
    cli("train " + path("d_ref.csv") + " -m " + path(tag + ".model") + t, tag + "_train.txt");
    cli("eval " + path("d_ref.model") + " " + path("d_ref.csv"), tag + "_eval.txt");
    cli("pipeline " + path("d.attn") + " --features-out " + path(tag + "_pf.csv") + " -m " +
            path(tag + "_p.model") + t,
        tag + "_pipe.txt");
    cli("validate " + path("d.attn"), tag + "_val.txt");
    if (runs == 1) {
      fs::copy_file(work_dir() / (tag + ".csv"), work_dir() / "d_ref.csv");
      cli("train " + path("d_ref.csv") + " -m " + path("d_ref.model"), "d_ref_train.txt");
      cli("train " + path("d_ref.csv") + " -m " + path(tag + ".model") + t, tag + "_train.txt");
      cli("eval " + path("d_ref.model") + " " + path("d_ref.csv"), tag + "_eval.txt");
    }
  }
  const std::vector<std::string> tags{"t1_0", "t1_1", "t4_2"};
  std::size_t diagram_files = 0;
  for (std::size_t k = 1; k < tags.size(); ++k) {
    const std::string& a = tags[0];
    const std::string& b = tags[k];
    same("featurize csv", a + ".csv", b + ".csv");
    same("featurize stdout", a + "_feat_stdout.csv", b + "_feat_stdout.csv");
    same("featurize stdout vs file", a + ".csv", b + "_feat_stdout.csv");
    same("diagrams consolidated", a + "_dg/diagrams.txt", b + "_dg/diagrams.txt");
    for (const auto& e : fs::directory_iterator(work_dir() / (a + "_dgs"))) {
      const std::string leaf = e.path().filename().string();
      same("diagrams " + leaf, a + "_dgs/" + leaf, b + "_dgs/" + leaf);
      ++diagram_files;
    }
    same("train report", a + "_train.txt", b + "_train.txt");
    same("train model", a + ".model", b + ".model");
    same("eval report", a + "_eval.txt", b + "_eval.txt");
    same("pipeline report", a + "_pipe.txt", b + "_pipe.txt");
    same("pipeline features", a + "_pf.csv", b + "_pf.csv");
    same("pipeline model", a + "_p.model", b + "_p.model");
    same("validate", a + "_val.txt", b + "_val.txt");
  }
  if (diagram_files == 0) differing.push_back("no per-head diagram files");
  std::string detail = "7 commands, 2 reruns at --threads 1 and one at --threads 4";
  if (!differing.empty()) {
    detail = "differs: ";
    for (const auto& d : differing) detail += d + "; ";
  }
  return {differing.empty(), detail};
}

Outcome scale() {
  SynthOptions o;
  o.samples = 2;
  o.layers = 12;
  o.heads = 12;
  o.tokens = 150;
  o.seed = 3;
  const auto samples = generate_synthetic(o);
  const auto start = Clock::now();
  const auto fv = featurize_sample(samples[1]);
  const double t = seconds_since(start);
  const bool finite = std::all_of(fv.values.begin(), fv.values.end(), [](double v) { return std::isfinite(v); });
  return {fv.values.size() == 1440 && finite && t < 60.0,
          std::to_string(fv.values.size()) + " features, " + (finite ? "all finite" : "non-finite values") +
              ", " + fmt("%.1f s single-threaded", t)};
}

}  // namespace

// With a criterion key as argument only that check runs; otherwise all do.
int main(int argc, char** argv) {
  struct Criterion {
    std::string key;
    std::string name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> all{
      {"oracle", "oracle equivalence", oracle_equivalence},
      {"mst", "MST identity", mst_identity},
      {"square", "square cycle", square_cycle},
      {"entropy", "entropy", entropy_checks},
      {"gradient", "gradient check", gradient_check},
      {"e2e", "synthetic end-to-end", synthetic_end_to_end},
      {"determinism", "determinism", determinism},
      {"scale", "scale", scale},
  };
  std::vector<Criterion> criteria;
  for (const auto& c : all) {
    if (argc < 2 || c.key == argv[1]) criteria.push_back(c);
  }
  if (argc >= 2) g_run_tag = argv[1];
  if (criteria.empty()) {
    std::fprintf(stderr, "unknown criterion '%s'\n", argv[1]);
    return 2;
  }
  int failures = 0;
  for (const auto& [key, name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(work_dir());
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
