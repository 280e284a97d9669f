#include "attntopo/feature_csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace attntopo {
namespace {

std::string quote_if_needed(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string q = "\"";
  for (char c : field) {
    if (c == '"') q += '"';
    q += c;
  }
  q += '"';
  return q;
}

// Splits one record; quoted fields may contain commas and doubled quotes but
// not line breaks.
std::vector<std::string> split_record(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty() && !was_quoted) {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur += c;
    }
  }
  if (quoted) throw CsvError(line_no, "unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace

void write_feature_csv(std::ostream& out, std::span<const FeatureVector> rows) {
  const std::size_t width = rows.empty() ? 0 : rows.front().values.size();
  out << "sample_id,label";
  char buf[32];
  for (std::size_t i = 0; i < width; ++i) {
    std::snprintf(buf, sizeof buf, ",f%04zu", i);
    out << buf;
  }
  out << '\n';
  for (const FeatureVector& fv : rows) {
    if (fv.values.size() != width) {
      throw std::invalid_argument("feature vector of sample " + fv.sample_id +
                                  " has a different length");
    }
    out << quote_if_needed(fv.sample_id) << ',' << static_cast<int>(fv.label);
    for (double v : fv.values) {
      std::snprintf(buf, sizeof buf, ",%.9g", v);
      out << buf;
    }
    out << '\n';
  }
}

void write_feature_csv(const std::filesystem::path& path, std::span<const FeatureVector> rows) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot create " + path.string());
  write_feature_csv(f, rows);
  if (!f) throw std::runtime_error("write failed on " + path.string());
}

std::vector<FeatureVector> read_feature_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw CsvError(line_no, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_record(line, line_no);
  if (header.size() < 2 || header[0] != "sample_id" || header[1] != "label") {
    throw CsvError(line_no, "header must start with sample_id,label");
  }
  const std::size_t width = header.size() - 2;

  std::vector<FeatureVector> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_record(line, line_no);
    if (fields.size() != header.size()) {
      throw CsvError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
    }
    FeatureVector fv;
    fv.sample_id = fields[0];
    if (fields[1] != "0" && fields[1] != "1") {
      throw CsvError(line_no, "label '" + fields[1] + "' is not 0 or 1");
    }
    fv.label = static_cast<std::uint8_t>(fields[1][0] - '0');
    fv.values.resize(width);
    for (std::size_t i = 0; i < width; ++i) {
      const std::string& field = fields[i + 2];
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (field.empty() || end != field.c_str() + field.size() || !std::isfinite(v)) {
        throw CsvError(line_no, "column " + header[i + 2] + ": '" + field +
                                    "' is not a finite number");
      }
      fv.values[i] = v;
    }
    rows.push_back(std::move(fv));
  }
  return rows;
}

std::vector<FeatureVector> read_feature_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return read_feature_csv(f);
}

}  // namespace attntopo
