#include "raster_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace ck::io {
namespace {

template <typename T>
void put(std::string& s, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  s.append(b, sizeof(T));
}

template <typename T>
T get(const char* p) {
  char b[sizeof(T)];
  std::memcpy(b, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

void png_append(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), len);
}

std::string encode_png(int width, int height, int color_type, int channels, const std::uint8_t* px) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorCode::kIo, "png: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  std::string out;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "png: encoding failed");
  }
  png_set_write_fn(png, &out, png_append, nullptr);
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < height; ++r)
    png_write_row(png, const_cast<png_bytep>(px + static_cast<std::size_t>(r) * width * channels));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace

void write_raster(std::ostream& out, const BTGrid& g) {
  std::string s;
  s.reserve(kRasterHeaderBytes + g.grid.size() * 5);
  s.append("BTG1", 4);
  put<std::uint32_t>(s, static_cast<std::uint32_t>(g.width()));
  put<std::uint32_t>(s, static_cast<std::uint32_t>(g.height()));
  put<std::uint32_t>(s, g.channel_id);
  put<double>(s, g.geo.corner_lat);
  put<double>(s, g.geo.corner_lon);
  for (float v : g.grid.values()) put<float>(s, v);
  for (auto m : g.grid.missing_flags()) s.push_back(static_cast<char>(m ? 1 : 0));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!out) throw Error(ErrorCode::kIo, "write_raster: stream write failed");
}

BTGrid read_raster(std::istream& in) {
  char head[kRasterHeaderBytes];
  in.read(head, sizeof head);
  if (in.gcount() != static_cast<std::streamsize>(sizeof head))
    throw Error(ErrorCode::kTruncated, "raster: truncated header");
  if (std::memcmp(head, "BTG1", 4) != 0) throw Error(ErrorCode::kInvalidArgument, "raster: bad magic");
  const auto w = get<std::uint32_t>(head + 4);
  const auto h = get<std::uint32_t>(head + 8);
  if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16))
    throw Error(ErrorCode::kInvalidArgument, "raster: implausible dimensions");
  BTGrid g;
  g.grid = Grid<float>(static_cast<int>(w), static_cast<int>(h));
  g.channel_id = get<std::uint32_t>(head + 12);
  g.geo.corner_lat = get<double>(head + 16);
  g.geo.corner_lon = get<double>(head + 24);
  std::vector<char> body(g.grid.size() * 5);
  in.read(body.data(), static_cast<std::streamsize>(body.size()));
  if (in.gcount() != static_cast<std::streamsize>(body.size()))
    throw Error(ErrorCode::kTruncated, "raster: truncated body");
  for (std::size_t i = 0; i < g.grid.size(); ++i) g.grid[i] = get<float>(body.data() + 4 * i);
  const char* flags = body.data() + 4 * g.grid.size();
  for (std::size_t i = 0; i < g.grid.size(); ++i) g.grid.set_missing(i, flags[i] != 0);
  return g;
}

void save_raster(const std::filesystem::path& path, const BTGrid& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  write_raster(out, g);
}

BTGrid load_raster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return read_raster(in);
}

BTGrid from_mask(const BinaryMask& m) {
  BTGrid g{Grid<float>(m.width(), m.height()), 0, {}};
  for (std::size_t i = 0; i < m.size(); ++i) g.grid[i] = m[i] ? 1.0f : 0.0f;
  return g;
}

BinaryMask to_mask(const BTGrid& g) {
  BinaryMask m(g.width(), g.height());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = (!g.grid.missing(i) && g.grid[i] >= 0.5f) ? 1 : 0;
  return m;
}

std::string encode_png_rgb(int width, int height, const std::uint8_t* rgb) {
  return encode_png(width, height, PNG_COLOR_TYPE_RGB, 3, rgb);
}

std::string encode_png_gray(int width, int height, const std::uint8_t* gray) {
  return encode_png(width, height, PNG_COLOR_TYPE_GRAY, 1, gray);
}

void save_png(const std::filesystem::path& path, const ingest::AshImage& img) {
  write_file(path, encode_png_rgb(img.width, img.height, img.rgb.data()));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace ck::io
