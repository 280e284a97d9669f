#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "attntopo/attention.hpp"
#include "attntopo/attn_io.hpp"
#include "attntopo/synth.hpp"
#include "oracles.hpp"

using namespace attntopo;
using attntopo::testing::uniform01;

namespace {

// Random row-stochastic tensor; rows are normalized in double then rounded.
AttentionTensor random_tensor(std::mt19937_64& rng, std::size_t layers, std::size_t heads,
                              std::size_t tokens) {
  AttentionTensor t(layers, heads, tokens);
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t h = 0; h < heads; ++h) {
      auto w = t.head(l, h);
      for (std::size_t r = 0; r < tokens; ++r) {
        std::vector<double> row(tokens);
        double sum = 0.0;
        for (double& x : row) sum += (x = uniform01(rng) + 1e-3);
        for (std::size_t c = 0; c < tokens; ++c) w[r * tokens + c] = static_cast<float>(row[c] / sum);
      }
    }
  }
  return t;
}

std::vector<Sample> random_samples(std::mt19937_64& rng, std::size_t count) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t len = 1 + rng() % 12;
    std::string id;
    for (std::size_t k = 0; k < len; ++k) id.push_back(static_cast<char>('a' + rng() % 26));
    out.push_back({id, static_cast<std::uint8_t>(rng() % 2),
                   random_tensor(rng, 1 + rng() % 3, 1 + rng() % 3, 1 + rng() % 7)});
  }
  return out;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("attntopo_ingest_" + name);
}

}  // namespace

TEST_SUITE("symmetrize") {
  TEST_CASE("takes the stronger direction") {
    const std::vector<float> w{0.7f, 0.3f, 0.4f, 0.6f};
    const auto d = symmetrize(w, 2);
    CHECK(d(0, 1) == 1.0 - static_cast<double>(0.4f));
  }

  TEST_CASE("symmetric input maps to one minus the weight") {
    const std::vector<float> w{0.5f, 0.25f, 0.25f, 0.25f, 0.5f, 0.25f, 0.25f, 0.25f, 0.5f};
    const auto d = symmetrize(w, 3);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = i + 1; j < 3; ++j) CHECK(d(i, j) == 0.75);
    }
  }

  TEST_CASE("identity attention puts every pair at distance one") {
    const std::vector<float> w{1, 0, 0, 0, 1, 0, 0, 0, 1};
    const auto d = symmetrize(w, 3);
    CHECK(d(0, 1) == 1.0);
    CHECK(d(0, 2) == 1.0);
    CHECK(d(1, 2) == 1.0);
  }

  TEST_CASE("out of range weights") {
    CHECK_THROWS_AS(symmetrize(std::vector<float>{0.0f, 1.2f, 0.0f, 1.0f}, 2), std::invalid_argument);
    CHECK_THROWS_AS(symmetrize(std::vector<float>{0.0f, NAN, 0.0f, 1.0f}, 2), std::invalid_argument);
    const auto d = symmetrize(std::vector<float>{0.0f, 1.0000001f, 0.0f, 1.0f}, 2);
    CHECK(d(0, 1) == 0.0);
  }

  TEST_CASE("transposing the input changes nothing") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t m = 1 + rng() % 20;
      const auto t = random_tensor(rng, 1, 1, m);
      std::vector<float> w(t.head(0, 0).begin(), t.head(0, 0).end());
      std::vector<float> wt(w.size());
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) wt[j * m + i] = w[i * m + j];
      }
      CHECK(symmetrize(w, m).upper() == symmetrize(wt, m).upper());
    }
  }

  TEST_CASE("distance is zero exactly when some direction has weight one") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t m = 2 + rng() % 6;
      std::vector<float> w(m * m);
      for (float& x : w) x = rng() % 4 == 0 ? 1.0f : static_cast<float>(uniform01(rng));
      const auto d = symmetrize(w, m);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
          CHECK(d(i, j) >= 0.0);
          CHECK(d(i, j) <= 1.0);
          CHECK((d(i, j) == 0.0) == (std::max(w[i * m + j], w[j * m + i]) == 1.0f));
        }
      }
    }
  }
}

TEST_SUITE("validate_tensor") {
  TEST_CASE("valid softmax rows") {
    std::mt19937_64 rng(1);
    CHECK(validate_tensor(random_tensor(rng, 2, 3, 9)).empty());
  }

  TEST_CASE("short row sum names the row") {
    std::mt19937_64 rng(1);
    auto t = random_tensor(rng, 2, 2, 4);
    auto w = t.head(1, 0);
    w[2 * 4 + 0] = 0.4f;
    w[2 * 4 + 1] = 0.2f;
    w[2 * 4 + 2] = 0.2f;
    w[2 * 4 + 3] = 0.1f;
    const auto v = validate_tensor(t);
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == Violation::Kind::kRowSum);
    CHECK(v[0].layer == 1);
    CHECK(v[0].head == 0);
    CHECK(v[0].row == 2);
    CHECK(v[0].observed == doctest::Approx(0.9).epsilon(1e-6));
  }

  TEST_CASE("value above one is a range violation") {
    std::mt19937_64 rng(1);
    auto t = random_tensor(rng, 1, 1, 3);
    t.head(0, 0)[4] = 1.2f;
    const auto v = validate_tensor(t);
    REQUIRE(!v.empty());
    CHECK(v[0].kind == Violation::Kind::kRange);
    CHECK(v[0].row == 1);
    CHECK(v[0].column == 1);
  }

  TEST_CASE("report lines are tab separated") {
    std::mt19937_64 rng(1);
    auto t = random_tensor(rng, 1, 2, 3);
    t.head(0, 1)[0] = -0.5f;
    std::ostringstream out;
    write_violations(out, "s1", validate_tensor(t));
    CHECK(out.str().rfind("s1\t0\t1\t0\t", 0) == 0);
  }
}

TEST_SUITE("ATTN files") {
  TEST_CASE("zero samples") {
    const auto bytes = encode_attn({});
    CHECK(bytes.size() == kAttnHeaderBytes);
    CHECK(decode_attn(bytes).empty());
  }

  TEST_CASE("exact size of a single 2x2 sample") {
    Sample s{"ab", 1, AttentionTensor(1, 1, 2, {0.5f, 0.5f, 0.25f, 0.75f})};
    const auto bytes = encode_attn(std::vector<Sample>{s});
    CHECK(bytes.size() == 16 + (2 + 2 + 1 + 6) + 16);
    CHECK(bytes.size() == kAttnHeaderBytes + attn_sample_bytes(s));
    CHECK(std::memcmp(bytes.data(), "ATTN\x01\0\0\0\x01\0\0\0\0\0\0\0", 16) == 0);
  }

  TEST_CASE("encoding is deterministic") {
    std::mt19937_64 rng(2);
    const auto samples = random_samples(rng, 5);
    CHECK(encode_attn(samples) == encode_attn(samples));
  }

  TEST_CASE("label 2 is rejected before writing") {
    const auto path = temp_file("label2.attn");
    std::filesystem::remove(path);
    Sample s{"x", 2, AttentionTensor(1, 1, 1, {1.0f})};
    CHECK_THROWS_AS(write_attn_file(std::vector<Sample>{s}, path), std::invalid_argument);
    CHECK(!std::filesystem::exists(path));
  }

  TEST_CASE("invalid tensors are rejected before writing") {
    Sample s{"x", 0, AttentionTensor(1, 1, 2, {0.5f, 0.1f, 0.5f, 0.5f})};
    CHECK_THROWS_AS(encode_attn(std::vector<Sample>{s}), std::invalid_argument);
  }

  TEST_CASE("file round trip is bit-exact") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
      const auto samples = random_samples(rng, rng() % 6);
      const auto path = temp_file("roundtrip.attn");
      write_attn_file(samples, path);
      CHECK(read_attn_file(path) == samples);
      std::filesystem::remove(path);
    }
  }

  TEST_CASE("truncation inside a matrix names the sample") {
    std::mt19937_64 rng(5);
    auto samples = random_samples(rng, 3);
    samples[1].id = "victim";
    const auto bytes = encode_attn(samples);
    const std::size_t second_payload = kAttnHeaderBytes + attn_sample_bytes(samples[0]) + 2 + 6 + 1 + 6;
    const std::size_t cut = second_payload + 5;
    try {
      decode_attn(std::span(bytes).first(cut));
      FAIL("expected a truncation error");
    } catch (const AttnFormatError& e) {
      CHECK(e.kind() == AttnFormatError::Kind::kTruncated);
      CHECK(e.sample_id() == "victim");
      CHECK(e.offset() == second_payload);
      CHECK(std::string(e.what()).find("victim") != std::string::npos);
    }
  }

  TEST_CASE("header errors are distinct") {
    auto bytes = encode_attn({});
    auto kind_of = [](std::span<const std::uint8_t> b) {
      try {
        decode_attn(b);
      } catch (const AttnFormatError& e) {
        return e.kind();
      }
      FAIL("expected an error");
      return AttnFormatError::Kind::kIo;
    };
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK(kind_of(bad_magic) == AttnFormatError::Kind::kMalformedHeader);
    auto bad_version = bytes;
    bad_version[4] = 2;
    CHECK(kind_of(bad_version) == AttnFormatError::Kind::kVersionMismatch);
    CHECK(kind_of(std::span(bytes).first(10)) == AttnFormatError::Kind::kMalformedHeader);
    auto extra = bytes;
    extra.push_back(0);
    CHECK(kind_of(extra) == AttnFormatError::Kind::kTrailingBytes);
    auto too_many = bytes;
    too_many[8] = 1;
    CHECK(kind_of(too_many) == AttnFormatError::Kind::kTruncated);
  }

  TEST_CASE("bad label and invalid tensor in a file") {
    Sample s{"x", 1, AttentionTensor(1, 1, 2, {0.5f, 0.5f, 0.5f, 0.5f})};
    auto bytes = encode_attn(std::vector<Sample>{s});
    auto bad_label = bytes;
    bad_label[kAttnHeaderBytes + 3] = 2;
    CHECK_THROWS_AS(decode_attn(bad_label), AttnFormatError);
    auto bad_row = bytes;
    const float wrong = 0.9f;
    std::memcpy(bad_row.data() + bytes.size() - 4, &wrong, 4);
    try {
      decode_attn(bad_row);
      FAIL("expected a validation error");
    } catch (const AttnFormatError& e) {
      CHECK(e.kind() == AttnFormatError::Kind::kInvalidSample);
      CHECK(e.sample_id() == "x");
    }
    AttnReadOptions lax;
    lax.validate_tensors = false;
    CHECK(decode_attn(bad_row, lax).size() == 1);
  }

  TEST_CASE("missing file is an io error") {
    try {
      read_attn_file(temp_file("does_not_exist.attn"));
      FAIL("expected an error");
    } catch (const AttnFormatError& e) {
      CHECK(e.kind() == AttnFormatError::Kind::kIo);
    }
  }

  TEST_CASE("corrupted bytes never crash the reader") {
    std::mt19937_64 rng(77);
    const auto base = encode_attn(random_samples(rng, 4));
    std::size_t rejected = 0;
    for (int trial = 0; trial < 3000; ++trial) {
      auto bytes = base;
      switch (trial % 4) {
        case 0: bytes.resize(rng() % (bytes.size() + 1)); break;
        case 1:
          for (int k = 0; k < 3; ++k) bytes[rng() % bytes.size()] = static_cast<std::uint8_t>(rng());
          break;
        case 2:
          // Flip bytes inside the header and first record metadata.
          bytes[rng() % std::min<std::size_t>(bytes.size(), 40)] ^= static_cast<std::uint8_t>(1 + rng() % 255);
          break;
        default:
          bytes.resize(rng() % 64);
          for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
          if (bytes.size() >= 8 && rng() % 2) std::memcpy(bytes.data(), "ATTN\x01\0\0\0", 8);
          break;
      }
      try {
        decode_attn(bytes);
      } catch (const AttnFormatError&) {
        ++rejected;
      }
    }
    CHECK(rejected > 2000);
  }

  TEST_CASE("synthetic data validates and is seed-stable") {
    SynthOptions opt;
    opt.samples = 8;
    opt.seed = 3;
    const auto a = generate_synthetic(opt);
    for (const auto& s : a) CHECK(validate_tensor(s.tensor).empty());
    CHECK(encode_attn(a) == encode_attn(generate_synthetic(opt)));
    opt.seed = 4;
    CHECK(encode_attn(a) != encode_attn(generate_synthetic(opt)));
  }
}
