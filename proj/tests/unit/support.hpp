#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <random>

#include "common.hpp"
#include "records.hpp"

namespace ck::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("ck_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline ProbabilityMask random_prob(std::mt19937_64& rng, int w, int h, int levels = 0) {
  ProbabilityMask m(w, h);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::uniform_int_distribution<int> q(0, levels > 0 ? levels : 1);
  for (std::size_t i = 0; i < m.size(); ++i)
    m[i] = levels > 0 ? static_cast<float>(q(rng)) / static_cast<float>(levels) : u(rng);
  return m;
}

inline BinaryMask random_mask(std::mt19937_64& rng, int w, int h, double p = 0.3) {
  BinaryMask m(w, h);
  std::bernoulli_distribution b(p);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = b(rng) ? 1 : 0;
  return m;
}

/// Fast 64-bit stream for bulk pixel content (splitmix64).
struct BulkBits {
  std::uint64_t state;
  std::uint64_t operator()() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
};

/// Random but valid record. Pixel content comes from a bulk stream seeded by
/// `rng`, so generating thousands of full-size records stays cheap.
inline records::ExampleRecord random_record(std::mt19937_64& rng) {
  using namespace records;
  ExampleRecord rec;
  BulkBits bulk{rng()};
  auto fill_mask = [&](BinaryMask& m) {
    // Bit k of every byte of one draw gives eight 0/1 pixels, for k = 0..7.
    for (std::size_t i = 0; i < m.size(); i += 64) {
      const std::uint64_t bits = bulk();
      for (int k = 0; k < 8; ++k) {
        const std::uint64_t px = (bits >> k) & 0x0101010101010101ull;
        std::memcpy(&m[i + 8 * k], &px, 8);
      }
    }
  };
  const int n_channels = static_cast<int>(rng() % 5 == 0);
  for (int c = 0; c < n_channels; ++c) {
    Grid<float> g(kMaskSide, kMaskSide);
    // Two 24-bit uniforms per draw over [190, 320) K.
    const auto v = g.values();
    for (std::size_t i = 0; i < v.size(); i += 2) {
      const std::uint64_t bits = bulk();
      v[i] = 190.0f + 130.0f * std::ldexp(static_cast<float>(bits & 0xffffff), -24);
      v[i + 1] = 190.0f + 130.0f * std::ldexp(static_cast<float>((bits >> 32) & 0xffffff), -24);
    }
    rec.channels.emplace(std::to_string(11 + c), std::move(g));
  }
  const int n_labelers = 1 + static_cast<int>(rng() % 4);
  for (int k = 0; k < n_labelers; ++k) {
    BinaryMask m(kMaskSide, kMaskSide);
    fill_mask(m);
    rec.labeler_masks.push_back(std::move(m));
  }
  rec.aggregated_mask = BinaryMask(kMaskSide, kMaskSide);
  fill_mask(rec.aggregated_mask);
  rec.timestamp = 1546300800 + static_cast<std::int64_t>(rng() % 100000000);
  std::uniform_real_distribution<float> lat(20.0f, 50.0f), lon(-130.0f, -60.0f);
  rec.center_lat = lat(rng);
  rec.center_lon = lon(rng);
  if (rng() % 2) {
    for (int f = 0; f < 8; ++f) rec.sequence.push_back(rec.timestamp + (f - 5) * 600);
  }
  if (rng() % 3 == 0) {
    std::string junk(rng() % 40, '\0');
    for (auto& ch : junk) ch = static_cast<char>(rng());
    rec.unknown.push_back({"extra_" + std::to_string(rng() % 1000), encode_feature(Feature::of_bytes(junk))});
  }
  return rec;
}

}  // namespace ck::test
