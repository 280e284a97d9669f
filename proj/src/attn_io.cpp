#include "attntopo/attn_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace attntopo {
namespace {

constexpr char kMagic[4] = {'A', 'T', 'T', 'N'};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  bool take(std::size_t n, std::span<const std::uint8_t>& out) {
    if (remaining() < n) return false;
    out = bytes_.subspan(pos_, n);
    pos_ += n;
    return true;
  }

  template <typename T>
  bool read_le(T& out) {
    std::span<const std::uint8_t> raw;
    if (!take(sizeof(T), raw)) return false;
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{raw[i]} << (8 * i);
    out = static_cast<T>(v);
    return true;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  const auto u = static_cast<std::uint64_t>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

std::string sample_label(std::size_t index) { return "#" + std::to_string(index); }

void check_sample(const Sample& s, std::size_t index) {
  const std::string who = s.id.empty() ? sample_label(index) : s.id;
  if (s.id.empty() || s.id.size() > kMaxSampleIdBytes) {
    throw std::invalid_argument("sample " + who + ": id must be 1.." +
                                std::to_string(kMaxSampleIdBytes) + " bytes");
  }
  if (s.label > 1) {
    throw std::invalid_argument("sample " + who + ": label " + std::to_string(s.label) +
                                " is not 0 or 1");
  }
  const auto& t = s.tensor;
  if (t.layers() == 0 || t.heads() == 0 || t.tokens() == 0 || t.layers() > 0xffff ||
      t.heads() > 0xffff || t.tokens() > kMaxTokens) {
    throw std::invalid_argument("sample " + who + ": tensor shape not encodable");
  }
  const auto violations = validate_tensor(t);
  if (!violations.empty()) {
    const auto& v = violations.front();
    throw std::invalid_argument("sample " + who + ": " + std::to_string(violations.size()) +
                                " violation(s), first at layer " + std::to_string(v.layer) +
                                " head " + std::to_string(v.head) + " row " +
                                std::to_string(v.row) + ": " + v.detail());
  }
}

}  // namespace

AttnFormatError::AttnFormatError(Kind kind, std::uint64_t offset, std::string sample_id,
                                 const std::string& what)
    : DataError(std::string(to_string(kind)) + " at byte " + std::to_string(offset) +
                         (sample_id.empty() ? "" : " (sample " + sample_id + ")") + ": " + what),
      kind_(kind),
      offset_(offset),
      sample_id_(std::move(sample_id)) {}

const char* to_string(AttnFormatError::Kind kind) {
  switch (kind) {
    case AttnFormatError::Kind::kIo: return "io error";
    case AttnFormatError::Kind::kMalformedHeader: return "malformed header";
    case AttnFormatError::Kind::kVersionMismatch: return "version mismatch";
    case AttnFormatError::Kind::kTruncated: return "truncated payload";
    case AttnFormatError::Kind::kInvalidSample: return "invalid sample";
    case AttnFormatError::Kind::kTrailingBytes: return "trailing bytes";
  }
  return "unknown";
}

std::size_t attn_sample_bytes(const Sample& s) {
  const auto& t = s.tensor;
  return 2 + s.id.size() + 1 + 6 + t.layers() * t.heads() * t.matrix_size() * 4;
}

std::vector<Sample> decode_attn(std::span<const std::uint8_t> bytes,
                                const AttnReadOptions& options) {
  using Kind = AttnFormatError::Kind;
  Reader in(bytes);

  std::span<const std::uint8_t> magic;
  if (!in.take(4, magic) || std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw AttnFormatError(Kind::kMalformedHeader, 0, "", "missing ATTN magic");
  }
  std::uint32_t version = 0;
  if (!in.read_le(version)) {
    throw AttnFormatError(Kind::kMalformedHeader, in.offset(), "", "header ends before version");
  }
  if (version != kAttnVersion) {
    throw AttnFormatError(Kind::kVersionMismatch, 4, "",
                          "version " + std::to_string(version) + ", expected " +
                              std::to_string(kAttnVersion));
  }
  std::uint64_t count = 0;
  if (!in.read_le(count)) {
    throw AttnFormatError(Kind::kMalformedHeader, in.offset(), "",
                          "header ends before sample count");
  }

  std::vector<Sample> samples;
  // Minimum record is 10 bytes plus one float; never trust `count` for sizing.
  samples.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, in.remaining() / 14)));
  for (std::uint64_t index = 0; index < count; ++index) {
    const std::size_t start = in.offset();
    std::string who = sample_label(index);
    auto truncated = [&](const char* what) {
      return AttnFormatError(Kind::kTruncated, in.offset(), who, what);
    };

    std::uint16_t id_len = 0;
    if (!in.read_le(id_len)) throw truncated("record ends before id length");
    std::span<const std::uint8_t> id_bytes;
    if (!in.take(id_len, id_bytes)) throw truncated("record ends inside id");
    Sample s;
    s.id.assign(id_bytes.begin(), id_bytes.end());
    if (!s.id.empty()) who = s.id;
    if (s.id.empty() || s.id.size() > kMaxSampleIdBytes) {
      throw AttnFormatError(Kind::kInvalidSample, start, who,
                            "id length " + std::to_string(id_len) + " outside [1, " +
                                std::to_string(kMaxSampleIdBytes) + "]");
    }

    std::uint8_t label = 0;
    std::uint16_t layers = 0, heads = 0, tokens = 0;
    const std::size_t label_offset = in.offset();
    if (!in.read_le(label)) throw truncated("record ends before label");
    if (label > 1) {
      throw AttnFormatError(Kind::kInvalidSample, label_offset, who,
                            "label " + std::to_string(label) + " is not 0 or 1");
    }
    const std::size_t shape_offset = in.offset();
    if (!in.read_le(layers) || !in.read_le(heads) || !in.read_le(tokens)) {
      throw truncated("record ends inside tensor shape");
    }
    if (layers == 0 || heads == 0 || tokens == 0 || tokens > kMaxTokens) {
      throw AttnFormatError(Kind::kInvalidSample, shape_offset, who,
                            "tensor shape " + std::to_string(layers) + "x" +
                                std::to_string(heads) + "x" + std::to_string(tokens) +
                                " not allowed");
    }

    const std::size_t floats = std::size_t{layers} * heads * tokens * tokens;
    const std::size_t payload_offset = in.offset();
    std::span<const std::uint8_t> payload;
    if (!in.take(floats * 4, payload)) {
      throw AttnFormatError(Kind::kTruncated, payload_offset, who,
                            "matrix payload needs " + std::to_string(floats * 4) +
                                " bytes, " + std::to_string(in.remaining()) + " remain");
    }
    std::vector<float> weights(floats);
    for (std::size_t i = 0; i < floats; ++i) {
      const std::uint8_t* b = payload.data() + 4 * i;
      const std::uint32_t bits = std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 |
                                 std::uint32_t{b[2]} << 16 | std::uint32_t{b[3]} << 24;
      weights[i] = std::bit_cast<float>(bits);
    }
    s.label = label;
    s.tensor = AttentionTensor(layers, heads, tokens, std::move(weights));

    if (options.validate_tensors) {
      const auto violations = validate_tensor(s.tensor);
      if (!violations.empty()) {
        const auto& v = violations.front();
        throw AttnFormatError(
            Kind::kInvalidSample, payload_offset, who,
            std::to_string(violations.size()) + " tensor violation(s), first at layer " +
                std::to_string(v.layer) + " head " + std::to_string(v.head) + " row " +
                std::to_string(v.row) + ": " + v.detail());
      }
    }
    samples.push_back(std::move(s));
  }
  if (in.remaining() != 0) {
    throw AttnFormatError(Kind::kTrailingBytes, in.offset(), "",
                          std::to_string(in.remaining()) + " bytes after last sample");
  }
  return samples;
}

std::vector<Sample> read_attn_file(const std::filesystem::path& path,
                                   const AttnReadOptions& options) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw AttnFormatError(AttnFormatError::Kind::kIo, 0, "", "cannot open " + path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  if (f.bad()) {
    throw AttnFormatError(AttnFormatError::Kind::kIo, bytes.size(), "",
                          "read failed on " + path.string());
  }
  return decode_attn(bytes, options);
}

std::vector<std::uint8_t> encode_attn(std::span<const Sample> samples) {
  std::size_t total = kAttnHeaderBytes;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    check_sample(samples[i], i);
    total += attn_sample_bytes(samples[i]);
  }
  std::vector<std::uint8_t> out;
  out.reserve(total);
  out.insert(out.end(), kMagic, kMagic + 4);
  put_le<std::uint32_t>(out, kAttnVersion);
  put_le<std::uint64_t>(out, samples.size());
  for (const Sample& s : samples) {
    put_le<std::uint16_t>(out, s.id.size());
    out.insert(out.end(), s.id.begin(), s.id.end());
    put_le<std::uint8_t>(out, s.label);
    put_le<std::uint16_t>(out, s.tensor.layers());
    put_le<std::uint16_t>(out, s.tensor.heads());
    put_le<std::uint16_t>(out, s.tensor.tokens());
    for (float w : s.tensor.weights()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(w));
  }
  return out;
}

void write_attn_file(std::span<const Sample> samples, const std::filesystem::path& path) {
  const auto bytes = encode_attn(samples);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw AttnFormatError(AttnFormatError::Kind::kIo, 0, "", "cannot create " + path.string());
  }
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) {
    throw AttnFormatError(AttnFormatError::Kind::kIo, 0, "", "write failed on " + path.string());
  }
}

}  // namespace attntopo
