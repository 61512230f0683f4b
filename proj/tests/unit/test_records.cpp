#include <random>
#include <sstream>

#include "doctest.h"
#include "records.hpp"
#include "support.hpp"

using namespace ck;
using namespace ck::records;

namespace {

std::uint32_t crc_bitwise(std::string_view s) {
  std::uint32_t c = 0xFFFFFFFFu;
  for (unsigned char b : s) {
    c ^= b;
    for (int k = 0; k < 8; ++k) c = (c >> 1) ^ (0x82F63B78u & (0u - (c & 1u)));
  }
  return ~c;
}

std::uint32_t mask_oracle(std::uint32_t c) { return ((c >> 15) | (c << 17)) + 0xA282EAD8u; }

std::string le(std::uint64_t v, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  return s;
}

std::string frame_oracle(std::string_view payload) {
  const std::string len = le(payload.size(), 8);
  return len + le(mask_oracle(crc_bitwise(len)), 4) + std::string(payload) +
         le(mask_oracle(crc_bitwise(payload)), 4);
}

ErrorCode read_error(const std::string& bytes, std::string* msg = nullptr) {
  std::istringstream in(bytes);
  try {
    read_records(in);
  } catch (const Error& e) {
    if (msg) *msg = e.what();
    return e.code();
  }
  return ErrorCode{};
}

}  // namespace

TEST_SUITE("records") {

TEST_CASE("crc32c check value and bitwise oracle") {
  CHECK(crc32c(std::string_view("123456789")) == 0xE3069283u);
  CHECK(crc32c(std::string_view("")) == 0u);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 500; ++t) {
    std::string s(rng() % 300, '\0');
    for (auto& c : s) c = static_cast<char>(rng());
    REQUIRE(crc32c(s) == crc_bitwise(s));
    const std::size_t cut = s.empty() ? 0 : rng() % s.size();
    REQUIRE(crc32c(std::string_view(s).substr(cut), crc32c(std::string_view(s).substr(0, cut))) == crc_bitwise(s));
    const auto c = static_cast<std::uint32_t>(rng());
    REQUIRE(mask_crc(c) == mask_oracle(c));
    REQUIRE(unmask_crc(mask_crc(c)) == c);
  }
}

TEST_CASE("frame layout") {
  CHECK(frame("").size() == kFrameOverhead);
  CHECK(frame("") == frame_oracle(""));
  CHECK(frame("hello") == frame_oracle("hello"));
  std::istringstream in(frame("") + frame("abc"));
  const auto all = read_all_frames(in);
  REQUIRE(all.size() == 2);
  CHECK(all[0].empty());
  CHECK(all[1] == "abc");
}

TEST_CASE("records round trip byte for byte") {
  std::mt19937_64 rng(9);
  std::vector<ExampleRecord> recs;
  for (int i = 0; i < 12; ++i) recs.push_back(test::random_record(rng));
  std::ostringstream out;
  write_records(out, recs);
  const std::string bytes = out.str();
  std::istringstream in(bytes);
  const auto back = read_records(in);
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back[i] == recs[i]);
    back[i].validate();
  }
  std::ostringstream again;
  write_records(again, back);
  CHECK(again.str() == bytes);
}

TEST_CASE("corruption names the failing record") {
  std::mt19937_64 rng(4);
  std::vector<ExampleRecord> recs{test::random_record(rng), test::random_record(rng), test::random_record(rng)};
  std::ostringstream out;
  write_records(out, recs);
  std::string bytes = out.str();
  const std::size_t first = encode_example(recs[0]).size() + kFrameOverhead;
  std::string msg;

  std::string bad = bytes;
  bad[first + 40] ^= 0x01;  // inside record 1 payload
  CHECK(read_error(bad, &msg) == ErrorCode::kCorruptRecord);
  CHECK(msg.find("record 1") != std::string::npos);

  bad = bytes;
  bad[first + 3] ^= 0x80;  // record 1 length field
  CHECK(read_error(bad, &msg) == ErrorCode::kCorruptRecord);
  CHECK(msg.find("record 1") != std::string::npos);

  CHECK(read_error(bytes.substr(0, bytes.size() - 1), &msg) == ErrorCode::kTruncated);
  CHECK(msg.find("record 2") != std::string::npos);
  CHECK(read_error(bytes.substr(0, first + 5)) == ErrorCode::kTruncated);

  // A small frame: every byte and every flip pattern is caught.
  const std::string f = frame("contrail");
  for (std::size_t i = 0; i < f.size(); ++i)
    for (int x = 1; x < 256; ++x) {
      std::string g = f;
      g[i] = static_cast<char>(g[i] ^ x);
      std::istringstream s(g);
      FrameReader r(s);
      bool caught = false;
      try {
        while (r.next()) {
        }
      } catch (const Error& e) {
        caught = e.code() == ErrorCode::kCorruptRecord || e.code() == ErrorCode::kTruncated;
      }
      REQUIRE(caught);
    }
}

TEST_CASE("unknown keys and wire order survive") {
  std::mt19937_64 rng(6);
  ExampleRecord rec = test::random_record(rng);
  rec.unknown = {{"zz_flag", encode_feature(Feature::of_ints({1, 2, 3}))},
                 {"aa_note", encode_feature(Feature::of_bytes("hi"))}};
  auto entries = decode_entries(encode_example(rec));
  std::reverse(entries.begin(), entries.end());
  const std::string payload = encode_entries(entries);
  const ExampleRecord back = decode_example(payload);
  REQUIRE(back.unknown.size() == 2);
  CHECK(back.unknown[0].key == "aa_note");
  CHECK(decode_feature(back.unknown[1].raw).ints == std::vector<std::int64_t>{1, 2, 3});
  CHECK(encode_example(back) == payload);
}

TEST_CASE("feature codec") {
  const Feature f = decode_feature(encode_feature(Feature::of_floats({1.5f, -2.0f})));
  CHECK(f.kind == Feature::Kind::kFloat);
  CHECK(f.floats == std::vector<float>{1.5f, -2.0f});
  const Feature i = decode_feature(encode_feature(Feature::of_ints({-1, 0, 1LL << 40})));
  CHECK(i.ints == std::vector<std::int64_t>{-1, 0, 1LL << 40});
  CHECK_THROWS_AS(decode_entries("\x0a\x05zz"), Error);
}

TEST_CASE("record validation") {
  std::mt19937_64 rng(8);
  ExampleRecord rec = test::random_record(rng);
  rec.sequence.clear();
  CHECK_NOTHROW(rec.validate());
  rec.sequence = {1, 2, 3, 4, 5, rec.timestamp, rec.timestamp + 1, rec.timestamp + 2};
  rec.sequence[0] = 0;
  if (rec.sequence[4] >= rec.timestamp) rec.sequence[4] = rec.timestamp - 1;
  CHECK_NOTHROW(rec.validate());
  rec.sequence[5] = rec.timestamp + 1;
  CHECK_THROWS_AS(rec.validate(), Error);
  rec.sequence.pop_back();
  CHECK_THROWS_AS(rec.validate(), Error);
  rec.sequence.clear();
  rec.labeler_masks.clear();
  CHECK_THROWS_AS(rec.validate(), Error);
}

}  // TEST_SUITE
