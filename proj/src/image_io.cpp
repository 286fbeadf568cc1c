#include "msgpm/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>

#include "msgpm/error.hpp"

namespace msgpm {
namespace {

static_assert(std::endian::native == std::endian::little,
              "flow interchange assumes a little-endian host");

const char* kModule = "imgcore";

std::uint8_t quantize(double v) {
  return std::uint8_t(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T get(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

bool is_png(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct MemorySource {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t count) {
  auto* src = static_cast<MemorySource*>(png_get_io_ptr(png));
  if (src->offset + count > src->bytes.size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, src->bytes.data() + src->offset, count);
  src->offset += count;
}

Image decode_png(std::span<const std::uint8_t> bytes, const std::string& name) {
  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!r.png) throw IoError(kModule, "cannot allocate PNG reader for " + name);
  r.info = png_create_info_struct(r.png);
  if (!r.info) throw IoError(kModule, "cannot allocate PNG info for " + name);

  MemorySource src{bytes, 0};
  std::vector<std::uint8_t> buffer;
  png_uint_32 width = 0, height = 0;
  int channels = 0;
  bool gray = false;

  if (setjmp(png_jmpbuf(r.png))) throw FormatError(kModule, "corrupt PNG data in " + name);

  png_set_read_fn(r.png, &src, read_from_memory);
  png_read_info(r.png, r.info);
  width = png_get_image_width(r.png, r.info);
  height = png_get_image_height(r.png, r.info);
  const int depth = png_get_bit_depth(r.png, r.info);
  const int color = png_get_color_type(r.png, r.info);
  if (depth == 16) throw FormatError(kModule, "16-bit PNG is not supported: " + name);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(r.png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(r.png);
  png_set_strip_16(r.png);
  gray = color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA;
  if (gray && png_get_valid(r.png, r.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(r.png);
  png_read_update_info(r.png, r.info);
  channels = png_get_channels(r.png, r.info);
  if (channels == 2 || channels == 4) {
    // tRNS expansion can re-add alpha; keep the color planes only.
    png_set_strip_alpha(r.png);
    png_read_update_info(r.png, r.info);
    channels = png_get_channels(r.png, r.info);
  }
  if (channels != 1 && channels != 3)
    throw FormatError(kModule, "unsupported PNG channel layout in " + name);

  buffer.resize(std::size_t(width) * height * channels);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + std::size_t(y) * width * channels;
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);

  std::vector<double> data(buffer.size());
  std::transform(buffer.begin(), buffer.end(), data.begin(), [](std::uint8_t v) { return v / 255.0; });
  return Image(int(width), int(height), channels, std::move(data));
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
bool next_token(std::span<const std::uint8_t> bytes, std::size_t& pos, std::string& token) {
  token.clear();
  while (pos < bytes.size()) {
    const char c = char(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) token.push_back(char(bytes[pos++]));
  return !token.empty();
}

Image decode_pnm(std::span<const std::uint8_t> bytes, const std::string& name) {
  std::size_t pos = 0;
  std::string magic, w, h, maxval;
  if (!next_token(bytes, pos, magic) || (magic != "P6" && magic != "P5"))
    throw FormatError(kModule, "unsupported image format: " + name);
  if (!next_token(bytes, pos, w) || !next_token(bytes, pos, h) || !next_token(bytes, pos, maxval))
    throw FormatError(kModule, "corrupt PNM header in " + name);
  int width = 0, height = 0, maxv = 0;
  try {
    width = std::stoi(w);
    height = std::stoi(h);
    maxv = std::stoi(maxval);
  } catch (const std::exception&) {
    throw FormatError(kModule, "corrupt PNM header in " + name);
  }
  if (width <= 0 || height <= 0 || maxv <= 0) throw FormatError(kModule, "corrupt PNM header in " + name);
  if (maxv != 255) throw FormatError(kModule, "only 8-bit PNM (maxval 255) is supported: " + name);
  ++pos;  // single whitespace byte after maxval
  const int channels = magic == "P6" ? 3 : 1;
  const std::size_t n = std::size_t(width) * height * channels;
  if (pos + n > bytes.size()) throw IoError(kModule, "truncated PNM payload in " + name);
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = bytes[pos + i] / 255.0;
  return Image(width, height, channels, std::move(data));
}

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* file = nullptr;
  ~PngWriter() {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    if (file) std::fclose(file);
  }
};

void write_png_bytes(const std::vector<std::uint8_t>& pixels, int width, int height, int channels,
                     const std::filesystem::path& path) {
  PngWriter w;
  w.file = std::fopen(path.c_str(), "wb");
  if (!w.file) throw IoError(kModule, "cannot open for writing: " + path.string());
  w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  w.info = w.png ? png_create_info_struct(w.png) : nullptr;
  if (!w.png || !w.info) throw IoError(kModule, "cannot allocate PNG writer");
  if (setjmp(png_jmpbuf(w.png))) throw IoError(kModule, "failed writing PNG: " + path.string());
  png_init_io(w.png, w.file);
  const int color = channels == 1 ? PNG_COLOR_TYPE_GRAY : channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_RGBA;
  png_set_IHDR(w.png, w.info, png_uint_32(width), png_uint_32(height), 8, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  for (int y = 0; y < height; ++y)
    png_write_row(w.png, const_cast<png_bytep>(pixels.data() + std::size_t(y) * width * channels));
  png_write_end(w.png, nullptr);
}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    throw IoError(kModule, "no such file: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(kModule, "cannot open: " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(kModule, "cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw IoError(kModule, "failed writing: " + path.string());
}

Image load_image(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  if (is_png(bytes)) return decode_png(bytes, path.string());
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pnm(bytes, path.string());
  throw FormatError(kModule, "unsupported image format: " + path.string());
}

void save_png(const Image& image, const std::filesystem::path& path) {
  std::vector<std::uint8_t> pixels(image.data().size());
  std::transform(image.data().begin(), image.data().end(), pixels.begin(), quantize);
  write_png_bytes(pixels, image.width(), image.height(), image.channels(), path);
}

void save_ppm(const Image& image, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  const std::string header = std::string(image.channels() == 3 ? "P6" : "P5") + "\n" +
                             std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  bytes.assign(header.begin(), header.end());
  for (double v : image.data()) bytes.push_back(quantize(v));
  write_file_bytes(path, bytes);
}

void save_mask_png(const OcclusionMask& mask, const std::filesystem::path& path) {
  std::vector<std::uint8_t> pixels(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) pixels[i] = mask.occluded(i) ? 255 : 0;
  write_png_bytes(pixels, mask.width(), mask.height(), 1, path);
}

void save_id_png(std::span<const std::int32_t> ids, int width, int height, const std::filesystem::path& path) {
  std::vector<std::uint8_t> pixels(ids.size() * 4);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto v = std::uint32_t(ids[i]);
    pixels[4 * i + 0] = std::uint8_t(v >> 24);
    pixels[4 * i + 1] = std::uint8_t(v >> 16);
    pixels[4 * i + 2] = std::uint8_t(v >> 8);
    pixels[4 * i + 3] = std::uint8_t(v);
  }
  write_png_bytes(pixels, width, height, 4, path);
}

std::vector<std::uint8_t> encode_flo(const FlowField& flow) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + flow.size() * 8);
  out.insert(out.end(), {'P', 'I', 'E', 'H'});
  put<std::int32_t>(out, flow.width());
  put<std::int32_t>(out, flow.height());
  for (std::size_t i = 0; i < flow.size(); ++i) {
    const Vec2 v = flow.valid(i) ? flow.at(i) : Vec2{FlowField::kSentinel, FlowField::kSentinel};
    put<float>(out, float(v.x));
    put<float>(out, float(v.y));
  }
  return out;
}

FlowField decode_flo(std::span<const std::uint8_t> bytes, const std::string& name) {
  if (bytes.size() < 12) throw IoError(kModule, "truncated .flo header in " + name);
  if (std::memcmp(bytes.data(), "PIEH", 4) != 0) throw FormatError(kModule, "bad .flo magic in " + name);
  const auto width = get<std::int32_t>(bytes, 4);
  const auto height = get<std::int32_t>(bytes, 8);
  if (width <= 0 || height <= 0 || width > (1 << 16) || height > (1 << 16))
    throw FormatError(kModule, "bad .flo dimensions in " + name);
  const std::size_t n = std::size_t(width) * height;
  if (bytes.size() < 12 + n * 8) throw IoError(kModule, "truncated .flo payload in " + name);
  if (bytes.size() > 12 + n * 8) throw FormatError(kModule, ".flo payload longer than its dimensions in " + name);
  FlowField flow(width, height);
  for (std::size_t i = 0; i < n; ++i) {
    const float u = get<float>(bytes, 12 + 8 * i);
    const float v = get<float>(bytes, 16 + 8 * i);
    if (std::isfinite(u) && std::isfinite(v) && std::abs(u) <= 1e9f && std::abs(v) <= 1e9f)
      flow.set(i, Vec2{u, v});
  }
  return flow;
}

FlowField read_flo(const std::filesystem::path& path) {
  return decode_flo(read_file_bytes(path), path.string());
}

void write_flo(const FlowField& flow, const std::filesystem::path& path) {
  write_file_bytes(path, encode_flo(flow));
}

void write_float_raster(std::span<const double> values, int width, int height,
                        const std::filesystem::path& path) {
  if (values.size() != std::size_t(width) * height)
    throw InvalidArgument(kModule, "raster length does not match dimensions");
  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'P', 'I', 'E', 'C'});
  put<std::int32_t>(out, width);
  put<std::int32_t>(out, height);
  for (double v : values) put<float>(out, float(v));
  write_file_bytes(path, out);
}

std::vector<double> read_float_raster(const std::filesystem::path& path, int& width, int& height) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() < 12) throw IoError(kModule, "truncated raster header in " + path.string());
  if (std::memcmp(bytes.data(), "PIEC", 4) != 0) throw FormatError(kModule, "bad raster magic in " + path.string());
  width = get<std::int32_t>(bytes, 4);
  height = get<std::int32_t>(bytes, 8);
  if (width <= 0 || height <= 0) throw FormatError(kModule, "bad raster dimensions in " + path.string());
  const std::size_t n = std::size_t(width) * height;
  if (bytes.size() != 12 + 4 * n) throw IoError(kModule, "raster payload size mismatch in " + path.string());
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = get<float>(bytes, 12 + 4 * i);
  return values;
}

}  // namespace msgpm
