#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "attntopo/classifier.hpp"

namespace attntopo {
namespace {

constexpr const char* kModelHeader = "ATTN-TOPO-MODEL v1";

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format17(values[i]);
  }
  return out;
}

double parse_number(const std::string& key, const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw DataError("model file: " + key + " holds '" + text + "', not a finite number");
  }
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  if (text.empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(key, item));
  if (text.back() == ',') throw DataError("model file: trailing comma in " + key);
  return out;
}

}  // namespace

void write_model(std::ostream& out, const LinearModel& model) {
  out << kModelHeader << '\n'
      << "lambda=" << format17(model.lambda) << '\n'
      << "bias=" << format17(model.bias) << '\n'
      << "weights=" << join(model.weights) << '\n'
      << "means=" << join(model.stats.means) << '\n'
      << "stds=" << join(model.stats.stds) << '\n';
}

LinearModel read_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kModelHeader) {
    throw DataError(std::string("model file: first line must be '") + kModelHeader + "'");
  }
  std::map<std::string, std::string> fields;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("model file: line '" + line + "' has no '='");
    const std::string key = line.substr(0, eq);
    if (!fields.emplace(key, line.substr(eq + 1)).second) {
      throw DataError("model file: duplicate key " + key);
    }
  }
  for (const char* key : {"lambda", "bias", "weights", "means", "stds"}) {
    if (!fields.count(key)) throw DataError(std::string("model file: missing key ") + key);
  }
  LinearModel m;
  m.lambda = parse_number("lambda", fields["lambda"]);
  m.bias = parse_number("bias", fields["bias"]);
  m.weights = parse_list("weights", fields["weights"]);
  m.stats.means = parse_list("means", fields["means"]);
  m.stats.stds = parse_list("stds", fields["stds"]);
  if (m.weights.empty()) throw DataError("model file: empty weight vector");
  if (m.stats.means.size() != m.weights.size() || m.stats.stds.size() != m.weights.size()) {
    throw DataError("model file: weights, means and stds differ in length");
  }
  if (m.lambda < 0.0) throw DataError("model file: negative lambda");
  for (double s : m.stats.stds) {
    if (s < 0.0) throw DataError("model file: negative standard deviation");
  }
  return m;
}

}  // namespace attntopo
