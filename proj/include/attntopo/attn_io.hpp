#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "attntopo/attention.hpp"
#include "attntopo/errors.hpp"

namespace attntopo {

// ATTN container, little-endian:
//   header  "ATTN" | version u32 (=1) | sample count u64
//   sample  id length u16 | id bytes | label u8 | L u16 | H u16 | m u16 |
//           L*H matrices (layer-major, head-minor), each m*m float32 row-major
inline constexpr std::uint32_t kAttnVersion = 1;
inline constexpr std::size_t kAttnHeaderBytes = 16;

class AttnFormatError : public DataError {
 public:
  enum class Kind { kIo, kMalformedHeader, kVersionMismatch, kTruncated, kInvalidSample, kTrailingBytes };

  AttnFormatError(Kind kind, std::uint64_t offset, std::string sample_id, const std::string& what);

  Kind kind() const noexcept { return kind_; }
  std::uint64_t offset() const noexcept { return offset_; }
  const std::string& sample_id() const noexcept { return sample_id_; }

 private:
  Kind kind_;
  std::uint64_t offset_;
  std::string sample_id_;
};

const char* to_string(AttnFormatError::Kind kind);

struct AttnReadOptions {
  // When false, tensors are only checked structurally; `validate` uses this to
  // report every violation instead of stopping at the first bad sample.
  bool validate_tensors = true;
};

std::vector<Sample> decode_attn(std::span<const std::uint8_t> bytes,
                                const AttnReadOptions& options = {});
std::vector<Sample> read_attn_file(const std::filesystem::path& path,
                                   const AttnReadOptions& options = {});

/// Throws std::invalid_argument if any sample violates its invariants.
std::vector<std::uint8_t> encode_attn(std::span<const Sample> samples);
void write_attn_file(std::span<const Sample> samples, const std::filesystem::path& path);

/// Encoded size of one sample record.
std::size_t attn_sample_bytes(const Sample& s);

}  // namespace attntopo
