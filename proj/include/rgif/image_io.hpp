#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <png.h>

#include "rgif/image.hpp"

namespace rgif {

namespace detail {

inline bool host_little_endian() {
  const std::uint16_t probe = 1;
  return *reinterpret_cast<const std::uint8_t*>(&probe) == 1;
}

// Skips whitespace and '#' comment lines in netpbm headers.
inline int pnm_next_token(std::istream& in, std::string& tok) {
  tok.clear();
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
    } else if (!std::isspace(c)) {
      break;
    }
  }
  if (c == EOF) return -1;
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  return 0;
}

inline long pnm_int(std::istream& in, const char* what) {
  std::string tok;
  if (pnm_next_token(in, tok) != 0)
    throw FormatError(std::string("truncated header: missing ") + what);
  try {
    return std::stol(tok);
  } catch (const std::exception&) {
    throw FormatError(std::string("bad header field: ") + what);
  }
}

inline Image load_pnm(std::istream& in, const std::string& magic) {
  const bool ascii = (magic == "P2" || magic == "P3");
  const int channels = (magic == "P3" || magic == "P6") ? 3 : 1;
  const long w = pnm_int(in, "width");
  const long h = pnm_int(in, "height");
  const long maxval = pnm_int(in, "maxval");
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
    throw FormatError("invalid PNM dimensions or maxval");
  Image img(static_cast<int>(w), static_cast<int>(h), channels);
  img.value_range = {0.0, static_cast<double>(maxval)};
  const std::size_t n = img.size();
  if (ascii) {
    for (std::size_t i = 0; i < n; ++i)
      img.data[i] = static_cast<double>(pnm_int(in, "sample"));
  } else {
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(n * bytes);
    if (!in.read(reinterpret_cast<char*>(raw.data()),
                 static_cast<std::streamsize>(raw.size())))
      throw FormatError("truncated PNM pixel data");
    if (bytes == 1) {
      for (std::size_t i = 0; i < n; ++i) img.data[i] = raw[i];
    } else {
      // 16-bit netpbm samples are big-endian.
      for (std::size_t i = 0; i < n; ++i)
        img.data[i] = static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]);
    }
  }
  return img;
}

inline Image load_pfm(std::istream& in, const std::string& magic) {
  const int channels = (magic == "PF") ? 3 : 1;
  const long w = pnm_int(in, "width");
  const long h = pnm_int(in, "height");
  std::string scale_tok;
  if (pnm_next_token(in, scale_tok) != 0)
    throw FormatError("truncated PFM header");
  const double scale = std::stod(scale_tok);
  if (w <= 0 || h <= 0 || scale == 0.0)
    throw FormatError("invalid PFM header");
  const bool file_little = scale < 0.0;
  Image img(static_cast<int>(w), static_cast<int>(h), channels);
  const std::size_t row_samples = static_cast<std::size_t>(w) * channels;
  std::vector<unsigned char> raw(row_samples * 4);
  // PFM rows are stored bottom-to-top.
  for (long y = h - 1; y >= 0; --y) {
    if (!in.read(reinterpret_cast<char*>(raw.data()),
                 static_cast<std::streamsize>(raw.size())))
      throw FormatError("truncated PFM pixel data");
    for (std::size_t i = 0; i < row_samples; ++i) {
      unsigned char b[4] = {raw[4 * i], raw[4 * i + 1], raw[4 * i + 2],
                            raw[4 * i + 3]};
      if (file_little != host_little_endian()) {
        std::swap(b[0], b[3]);
        std::swap(b[1], b[2]);
      }
      float v;
      std::memcpy(&v, b, 4);
      img.data[static_cast<std::size_t>(y) * row_samples + i] = v;
    }
  }
  double lo = img.data[0], hi = img.data[0];
  for (double v : img.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  img.value_range = {lo, hi};
  return img;
}

struct PngReadCtx {
  std::FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadCtx() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

struct PngWriteCtx {
  std::FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriteCtx() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

inline Image load_png(const std::string& path) {
  PngReadCtx ctx;
  ctx.fp = std::fopen(path.c_str(), "rb");
  if (!ctx.fp) throw IoError("cannot open " + path);
  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                   nullptr);
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.png || !ctx.info) throw IoError("libpng init failed");
  if (setjmp(png_jmpbuf(ctx.png)))
    throw FormatError("corrupt PNG: " + path);
  png_init_io(ctx.png, ctx.fp);
  png_read_info(ctx.png, ctx.info);

  png_uint_32 w, h;
  int bit_depth, color_type;
  png_get_IHDR(ctx.png, ctx.info, &w, &h, &bit_depth, &color_type, nullptr,
               nullptr, nullptr);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(ctx.png);
  png_set_strip_alpha(ctx.png);
  if (bit_depth == 16 && host_little_endian()) png_set_swap(ctx.png);
  png_read_update_info(ctx.png, ctx.info);
  png_get_IHDR(ctx.png, ctx.info, &w, &h, &bit_depth, &color_type, nullptr,
               nullptr, nullptr);
  const int channels = png_get_channels(ctx.png, ctx.info);
  if (channels != 1 && channels != 3)
    throw FormatError("unsupported PNG channel layout");

  Image img(static_cast<int>(w), static_cast<int>(h), channels);
  img.value_range = {0.0, bit_depth == 16 ? 65535.0 : 255.0};
  const std::size_t row_bytes = png_get_rowbytes(ctx.png, ctx.info);
  std::vector<unsigned char> row(row_bytes);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(ctx.png, row.data(), nullptr);
    const std::size_t row_samples = static_cast<std::size_t>(w) * channels;
    if (bit_depth == 16) {
      const auto* p = reinterpret_cast<const std::uint16_t*>(row.data());
      for (std::size_t i = 0; i < row_samples; ++i)
        img.data[y * row_samples + i] = p[i];
    } else {
      for (std::size_t i = 0; i < row_samples; ++i)
        img.data[y * row_samples + i] = row[i];
    }
  }
  png_read_end(ctx.png, nullptr);
  return img;
}

inline void save_png(const Image& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3)
    throw FormatError("PNG output supports 1 or 3 channels");
  const bool wide = img.value_range.second > 255.5;
  const int bit_depth = wide ? 16 : 8;
  const double maxval = wide ? 65535.0 : 255.0;

  PngWriteCtx ctx;
  ctx.fp = std::fopen(path.c_str(), "wb");
  if (!ctx.fp) throw IoError("cannot write " + path);
  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                    nullptr);
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.png || !ctx.info) throw IoError("libpng init failed");
  if (setjmp(png_jmpbuf(ctx.png))) throw IoError("PNG write failed: " + path);
  png_init_io(ctx.png, ctx.fp);
  png_set_IHDR(ctx.png, ctx.info, img.width, img.height, bit_depth,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);
  if (bit_depth == 16 && host_little_endian()) png_set_swap(ctx.png);

  const std::size_t row_samples =
      static_cast<std::size_t>(img.width) * img.channels;
  std::vector<unsigned char> row(row_samples * (wide ? 2 : 1));
  for (int y = 0; y < img.height; ++y) {
    for (std::size_t i = 0; i < row_samples; ++i) {
      double v = std::round(img.data[y * row_samples + i]);
      v = std::clamp(v, 0.0, maxval);
      if (wide)
        reinterpret_cast<std::uint16_t*>(row.data())[i] =
            static_cast<std::uint16_t>(v);
      else
        row[i] = static_cast<unsigned char>(v);
    }
    png_write_row(ctx.png, row.data());
  }
  png_write_end(ctx.png, nullptr);
}

inline void save_pnm(const Image& img, const std::string& path, bool color) {
  if (color && img.channels != 3)
    throw FormatError("PPM output requires 3 channels");
  if (!color && img.channels != 1)
    throw FormatError("PGM output requires 1 channel");
  const bool wide = img.value_range.second > 255.5;
  const long maxval = wide ? 65535 : 255;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << (color ? "P6" : "P5") << "\n"
      << img.width << " " << img.height << "\n"
      << maxval << "\n";
  std::vector<unsigned char> raw;
  raw.reserve(img.size() * (wide ? 2 : 1));
  for (double s : img.data) {
    long v = std::lround(std::clamp(s, 0.0, static_cast<double>(maxval)));
    if (wide) {
      raw.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
      raw.push_back(static_cast<unsigned char>(v & 0xff));
    } else {
      raw.push_back(static_cast<unsigned char>(v));
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("write failed: " + path);
}

inline void save_pfm(const Image& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3)
    throw FormatError("PFM output supports 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << (img.channels == 3 ? "PF" : "Pf") << "\n"
      << img.width << " " << img.height << "\n"
      << (host_little_endian() ? "-1.0" : "1.0") << "\n";
  const std::size_t row_samples =
      static_cast<std::size_t>(img.width) * img.channels;
  std::vector<float> row(row_samples);
  for (int y = img.height - 1; y >= 0; --y) {
    for (std::size_t i = 0; i < row_samples; ++i)
      row[i] = static_cast<float>(img.data[y * row_samples + i]);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * 4));
  }
  if (!out) throw IoError("write failed: " + path);
}

inline std::string lower_ext(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  for (char& c : ext) c = static_cast<char>(std::tolower(c));
  return ext;
}

}  // namespace detail

/// Loads PGM/PPM (P2/P3/P5/P6), PFM (Pf/PF) or PNG, sniffed by magic bytes.
inline Image load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  unsigned char sig[8] = {0};
  in.read(reinterpret_cast<char*>(sig), 8);
  if (in.gcount() < 2) throw FormatError("file too short: " + path);
  in.seekg(0);
  if (!png_sig_cmp(sig, 0, static_cast<std::size_t>(in.gcount()))) {
    in.close();
    return detail::load_png(path);
  }
  std::string magic(2, '\0');
  magic[0] = static_cast<char>(sig[0]);
  magic[1] = static_cast<char>(sig[1]);
  in.ignore(2);
  Image img;
  if (magic == "P2" || magic == "P3" || magic == "P5" || magic == "P6")
    img = detail::load_pnm(in, magic);
  else if (magic == "Pf" || magic == "PF")
    img = detail::load_pfm(in, magic);
  else
    throw FormatError("unsupported image format: " + path);
  if (!img.all_finite())
    throw FormatError("non-finite samples in " + path);
  return img;
}

/// Saves by extension: .pgm/.ppm (binary, 8/16-bit by value_range),
/// .png (8/16-bit), .pfm (32-bit float).
inline void save_image(const Image& img, const std::string& path) {
  const std::string ext = detail::lower_ext(path);
  if (ext == "pgm")
    detail::save_pnm(img, path, /*color=*/false);
  else if (ext == "ppm")
    detail::save_pnm(img, path, /*color=*/true);
  else if (ext == "png")
    detail::save_png(img, path);
  else if (ext == "pfm")
    detail::save_pfm(img, path);
  else
    throw FormatError("unsupported output extension: " + path);
}

}  // namespace rgif
