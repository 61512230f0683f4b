#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "common.hpp"
#include "ingest.hpp"

namespace ck::io {

// Standalone raster sidecar: 32-byte header (magic "BTG1", u32 width,
// u32 height, u32 channel id, f64 corner lat, f64 corner lon), then row-major
// float32 values and row-major u8 missing flags. Little-endian throughout.
// Pixel spacing is not part of the format and reads back as zero.
inline constexpr std::size_t kRasterHeaderBytes = 32;

void write_raster(std::ostream& out, const BTGrid& g);
BTGrid read_raster(std::istream& in);
void save_raster(const std::filesystem::path& path, const BTGrid& g);
BTGrid load_raster(const std::filesystem::path& path);

BTGrid from_mask(const BinaryMask& m);
BinaryMask to_mask(const BTGrid& g);  // value >= 0.5 -> 1; missing -> 0

// 8-bit PNG output.
std::string encode_png_rgb(int width, int height, const std::uint8_t* rgb);
std::string encode_png_gray(int width, int height, const std::uint8_t* gray);
void save_png(const std::filesystem::path& path, const ingest::AshImage& img);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view data);

}  // namespace ck::io
