#include "wirepipe/io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

namespace wirepipe {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return f;
}

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
  return path.parent_path() / (path.filename().string() + ".tmp");
}

}  // namespace

ImageBuf read_png(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("failed to decode PNG " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  if (png_get_bit_depth(png, info) == 16 && std::endian::native == std::endian::little)
    png_set_swap(png);
  png_read_update_info(png, info);

  const int h = static_cast<int>(png_get_image_height(png, info));
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int depth = png_get_bit_depth(png, info);
  const int ch = png_get_channels(png, info);
  if (ch != 1 && ch != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("unsupported PNG channel count in " + path.string());
  }

  const std::size_t row_bytes = png_get_rowbytes(png, info);
  std::vector<std::uint8_t> raster(row_bytes * static_cast<std::size_t>(h));
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = raster.data() + row_bytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  ImageBuf out(h, w, ch);
  for (int y = 0; y < h; ++y) {
    if (depth == 16) {
      const auto* r = reinterpret_cast<const std::uint16_t*>(raster.data() + row_bytes * y);
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < ch; ++c) out.at(y, x, c) = r[x * ch + c] / 65535.0f;
    } else {
      const std::uint8_t* r = raster.data() + row_bytes * y;
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < ch; ++c) out.at(y, x, c) = r[x * ch + c] / 255.0f;
    }
  }
  return out;
}

void write_png(const std::filesystem::path& path, const ImageBuf& img, int bit_depth) {
  if (img.channels() != 1 && img.channels() != 3)
    throw std::invalid_argument("write_png: image must have 1 or 3 channels");
  if (bit_depth != 8 && bit_depth != 16)
    throw std::invalid_argument("write_png: bit depth must be 8 or 16");
  validate01(img, "write_png");

  const std::filesystem::path tmp = temp_sibling(path);
  {
    FilePtr f = open_file(tmp, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
      png_destroy_write_struct(&png, &info);
      throw std::runtime_error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw std::runtime_error("failed to encode PNG " + tmp.string());
    }
    png_init_io(png, f.get());

    const int h = img.height(), w = img.width(), ch = img.channels();
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth,
                 ch == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);

    const float scale = bit_depth == 16 ? 65535.0f : 255.0f;
    std::vector<std::uint8_t> row8;
    std::vector<std::uint16_t> row16;
    for (int y = 0; y < h; ++y) {
      if (bit_depth == 16) {
        row16.assign(static_cast<std::size_t>(w) * ch, 0);
        for (int x = 0; x < w; ++x)
          for (int c = 0; c < ch; ++c)
            row16[static_cast<std::size_t>(x) * ch + c] =
                static_cast<std::uint16_t>(std::lround(img.at(y, x, c) * scale));
        png_write_row(png, reinterpret_cast<png_bytep>(row16.data()));
      } else {
        row8.assign(static_cast<std::size_t>(w) * ch, 0);
        for (int x = 0; x < w; ++x)
          for (int c = 0; c < ch; ++c)
            row8[static_cast<std::size_t>(x) * ch + c] =
                static_cast<std::uint8_t>(std::lround(img.at(y, x, c) * scale));
        png_write_row(png, row8.data());
      }
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }
  std::filesystem::rename(tmp, path);
}

MaskBuf read_mask_png(const std::filesystem::path& path) {
  const ImageBuf img = read_png(path);
  const int h = img.height(), w = img.width();
  MaskBuf out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.set(y, x, img.at(y, x, 0) >= 0.5f ? 1 : 0);
  return out;
}

void write_mask_png(const std::filesystem::path& path, const MaskBuf& mask) {
  ImageBuf img(mask.height(), mask.width(), 1);
  img.plane(0) = mask.data().cast<float>();
  write_png(path, img, 8);
}

ImageBuf read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  if ((magic != "Pf" && magic != "PF") || w < 1 || h < 1 || scale == 0.0 || !in)
    throw std::runtime_error("bad PFM header in " + path.string());
  if (scale > 0.0) throw std::runtime_error("big-endian PFM unsupported: " + path.string());
  in.get();  // single whitespace after the header
  const int ch = magic == "PF" ? 3 : 1;
  std::vector<float> row(static_cast<std::size_t>(w) * ch);
  ImageBuf out(h, w, ch);
  for (int y = h - 1; y >= 0; --y) {  // bottom-up
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
    if (!in) throw std::runtime_error("truncated PFM " + path.string());
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) out.at(y, x, c) = row[static_cast<std::size_t>(x) * ch + c];
  }
  return out;
}

void write_pfm(const std::filesystem::path& path, const ImageBuf& img) {
  if (img.channels() != 1 && img.channels() != 3)
    throw std::invalid_argument("write_pfm: image must have 1 or 3 channels");
  const int h = img.height(), w = img.width(), ch = img.channels();
  std::ostringstream buf;
  buf << (ch == 3 ? "PF" : "Pf") << "\n" << w << " " << h << "\n" << "-1.0" << "\n";
  std::vector<float> row(static_cast<std::size_t>(w) * ch);
  for (int y = h - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) row[static_cast<std::size_t>(x) * ch + c] = img.at(y, x, c);
    buf.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
  }
  const std::string bytes = buf.str();
  atomic_write_bytes(path, bytes.data(), bytes.size());
}

void write_prob_pfm(const std::filesystem::path& path, const ProbMap& probs) {
  if (probs.classes() != 2) throw std::invalid_argument("write_prob_pfm: expected 2 classes");
  ImageBuf wire(probs.height(), probs.width(), 1);
  wire.plane(0) = probs.plane(kWireClass);
  write_pfm(path, wire);
}

ProbMap read_prob_pfm(const std::filesystem::path& path) {
  const ImageBuf wire = read_pfm(path);
  if (wire.channels() != 1) throw std::runtime_error("probability PFM must be single-channel");
  ProbMap out(wire.height(), wire.width(), 2);
  out.plane(kWireClass) = wire.plane(0).min(1.0f).max(0.0f);
  out.plane(kBackgroundClass) = 1.0f - out.plane(kWireClass);
  return out;
}

void atomic_write_bytes(const std::filesystem::path& path, const void* data, std::size_t size) {
  const std::filesystem::path tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace wirepipe
