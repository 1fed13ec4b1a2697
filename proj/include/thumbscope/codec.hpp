#pragma once

// JPEG / PNG decoding and encoding on top of libjpeg and libpng.

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "thumbscope/error.hpp"
#include "thumbscope/image.hpp"

namespace thumbscope {

enum class ImageFormat { Unknown, Jpeg, Png };

inline ImageFormat sniff_format(std::span<const std::uint8_t> bytes) noexcept {
  static constexpr std::uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), png_sig, 8) == 0) return ImageFormat::Png;
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF)
    return ImageFormat::Jpeg;
  return ImageFormat::Unknown;
}

namespace detail {

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

extern "C" inline void thumbscope_jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Warnings (premature EOF, corrupt entropy data) are fatal: libjpeg would
// otherwise pad a truncated stream with gray.
extern "C" inline void thumbscope_jpeg_emit_message(j_common_ptr cinfo, int level) {
  if (level < 0) thumbscope_jpeg_error_exit(cinfo);
}

// Returns an empty string on success, otherwise the libjpeg message. Kept free
// of non-trivial locals so longjmp does not skip destructors.
inline const char* decode_jpeg_raw(const std::uint8_t* data, std::size_t size, std::uint8_t** out,
                                   int* width, int* height, std::size_t* consumed,
                                   JpegErrorMgr* err) {
  jpeg_decompress_struct cinfo;
  cinfo.err = jpeg_std_error(&err->pub);
  err->pub.error_exit = thumbscope_jpeg_error_exit;
  err->pub.emit_message = thumbscope_jpeg_emit_message;
  err->message[0] = '\0';
  *out = nullptr;
  if (setjmp(err->jump)) {
    *consumed = cinfo.src ? size - cinfo.src->bytes_in_buffer : 0;
    std::free(*out);
    *out = nullptr;
    jpeg_destroy_decompress(&cinfo);
    return err->message;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, const_cast<unsigned char*>(data), static_cast<unsigned long>(size));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  *width = static_cast<int>(cinfo.output_width);
  *height = static_cast<int>(cinfo.output_height);
  const std::size_t stride = static_cast<std::size_t>(*width) * 3;
  *out = static_cast<std::uint8_t*>(std::malloc(stride * *height));
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = *out + stride * cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  *consumed = size - cinfo.src->bytes_in_buffer;
  jpeg_destroy_decompress(&cinfo);
  return nullptr;
}

inline ImageBuffer decode_jpeg(std::span<const std::uint8_t> bytes) {
  JpegErrorMgr err;
  std::uint8_t* raw = nullptr;
  int w = 0, h = 0;
  std::size_t consumed = 0;
  if (const char* msg = decode_jpeg_raw(bytes.data(), bytes.size(), &raw, &w, &h, &consumed, &err))
    throw DecodeError(std::string("jpeg: ") + msg, consumed);
  std::vector<std::uint8_t> px(raw, raw + static_cast<std::size_t>(w) * h * 3);
  std::free(raw);
  return ImageBuffer(w, h, std::move(px));
}

struct PngReadState {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
  char message[256] = {};
};

extern "C" inline void thumbscope_png_read(png_structp png, png_bytep out, png_size_t n) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->offset + n > st->bytes.size()) {
    std::snprintf(st->message, sizeof st->message, "unexpected end of stream");
    png_longjmp(png, 1);
  }
  std::memcpy(out, st->bytes.data() + st->offset, n);
  st->offset += n;
}

extern "C" inline void thumbscope_png_error(png_structp png, png_const_charp msg) {
  auto* st = static_cast<PngReadState*>(png_get_error_ptr(png));
  std::snprintf(st->message, sizeof st->message, "%s", msg);
  png_longjmp(png, 1);
}

extern "C" inline void thumbscope_png_warning(png_structp, png_const_charp) {}

inline const char* decode_png_raw(PngReadState* st, std::uint8_t** out, int* width, int* height) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, st, thumbscope_png_error,
                                           thumbscope_png_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  *out = nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    return "libpng allocation failed";
  }
  png_bytep* rows = nullptr;
  if (setjmp(png_jmpbuf(png))) {
    std::free(rows);
    std::free(*out);
    *out = nullptr;
    png_destroy_read_struct(&png, &info, nullptr);
    return st->message;
  }
  png_set_read_fn(png, st, thumbscope_png_read);
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  *width = static_cast<int>(png_get_image_width(png, info));
  *height = static_cast<int>(png_get_image_height(png, info));
  const std::size_t stride = png_get_rowbytes(png, info);
  if (stride != static_cast<std::size_t>(*width) * 3) png_error(png, "unexpected row layout");
  *out = static_cast<std::uint8_t*>(std::malloc(stride * *height));
  rows = static_cast<png_bytep*>(std::malloc(sizeof(png_bytep) * *height));
  for (int y = 0; y < *height; ++y) rows[y] = *out + stride * y;
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  std::free(rows);
  png_destroy_read_struct(&png, &info, nullptr);
  return nullptr;
}

inline ImageBuffer decode_png(std::span<const std::uint8_t> bytes) {
  PngReadState st{bytes};
  std::uint8_t* raw = nullptr;
  int w = 0, h = 0;
  if (const char* msg = decode_png_raw(&st, &raw, &w, &h))
    throw DecodeError(std::string("png: ") + msg, st.offset);
  std::vector<std::uint8_t> px(raw, raw + static_cast<std::size_t>(w) * h * 3);
  std::free(raw);
  return ImageBuffer(w, h, std::move(px));
}

}  // namespace detail

// Decodes a JPEG or PNG stream into an sRGB buffer.
inline ImageBuffer decode(std::span<const std::uint8_t> bytes) {
  switch (sniff_format(bytes)) {
    case ImageFormat::Jpeg:
      return detail::decode_jpeg(bytes);
    case ImageFormat::Png:
      return detail::decode_png(bytes);
    default:
      throw DecodeError("unsupported image format (expected JPEG or PNG)", 0);
  }
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline ImageBuffer load_image(const std::filesystem::path& path) { return decode(read_file_bytes(path)); }

inline std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.bytes().data(), 0, nullptr))
    throw Error(std::string("png encode failed: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.bytes().data(), 0, nullptr))
    throw Error(std::string("png encode failed: ") + image.message);
  out.resize(size);
  return out;
}

inline std::vector<std::uint8_t> encode_jpeg(const ImageBuffer& img, int quality = 90) {
  jpeg_compress_struct cinfo;
  jpeg_error_mgr jerr;
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  unsigned char* buf = nullptr;
  unsigned long size = 0;
  jpeg_mem_dest(&cinfo, &buf, &size);
  cinfo.image_width = static_cast<JDIMENSION>(img.width());
  cinfo.image_height = static_cast<JDIMENSION>(img.height());
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  const std::size_t stride = static_cast<std::size_t>(img.width()) * 3;
  auto* base = const_cast<std::uint8_t*>(img.bytes().data());
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = base + stride * cinfo.next_scanline;
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::vector<std::uint8_t> out(buf, buf + size);
  jpeg_destroy_compress(&cinfo);
  std::free(buf);
  return out;
}

}  // namespace thumbscope
