#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "attntopo/errors.hpp"
#include "attntopo/features.hpp"

namespace attntopo {

class CsvError : public DataError {
 public:
  CsvError(std::size_t line, const std::string& what)
      : DataError("feature csv line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Header `sample_id,label,f0000,...`, one row per vector, %.9g floats, LF.
/// All vectors must share one length.
void write_feature_csv(std::ostream& out, std::span<const FeatureVector> rows);
void write_feature_csv(const std::filesystem::path& path, std::span<const FeatureVector> rows);

std::vector<FeatureVector> read_feature_csv(std::istream& in);
std::vector<FeatureVector> read_feature_csv(const std::filesystem::path& path);

}  // namespace attntopo
