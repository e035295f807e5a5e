#include "semmap/image_io.h"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

#include "semmap/error.h"

namespace semmap {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct DecodedPng {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> pixels;  // rows packed, 16-bit little-endian
};

// Returns an error message, empty on success. Keeps setjmp in a frame that
// owns no objects with destructors between setjmp and the libpng calls.
std::string DecodePng(std::FILE* fp, DecodedPng* out) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return "png_create_read_struct failed";
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return "png_create_info_struct failed";
  }
  std::vector<png_bytep>* rows = new std::vector<png_bytep>();
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    delete rows;
    return "corrupt PNG data";
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (bit_depth == 16) png_set_swap(png);
  png_read_update_info(png, info);

  out->width = png_get_image_width(png, info);
  out->height = png_get_image_height(png, info);
  out->channels = png_get_channels(png, info);
  out->bit_depth = png_get_bit_depth(png, info);
  const png_size_t row_bytes = png_get_rowbytes(png, info);
  out->pixels.resize(row_bytes * out->height);
  rows->resize(out->height);
  for (png_uint_32 y = 0; y < out->height; ++y) {
    (*rows)[y] = out->pixels.data() + y * row_bytes;
  }
  png_read_image(png, rows->data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  delete rows;
  return {};
}

DecodedPng Decode(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error(ErrorCode::kUnreadableImage, "cannot open " + path);
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(ErrorCode::kUnreadableImage, path + ": not a PNG file");
  }
  std::rewind(fp.get());
  DecodedPng out;
  const std::string err = DecodePng(fp.get(), &out);
  if (!err.empty()) throw Error(ErrorCode::kUnreadableImage, path + ": " + err);
  return out;
}

std::string EncodePng(std::FILE* fp, int width, int height, int color_type,
                      int bit_depth, const std::uint8_t* data,
                      std::size_t row_bytes) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return "png_create_write_struct failed";
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return "png_create_info_struct failed";
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return "PNG encoding failed";
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, width, height, bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(data + y * row_bytes));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return {};
}

void Encode(const std::string& path, int width, int height, int color_type,
            int bit_depth, const std::uint8_t* data, std::size_t row_bytes) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kIoError, path + ": empty image");
  }
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(ErrorCode::kIoError, "cannot write " + path);
  const std::string err =
      EncodePng(fp.get(), width, height, color_type, bit_depth, data, row_bytes);
  if (!err.empty()) throw Error(ErrorCode::kIoError, path + ": " + err);
}

}  // namespace

RgbImage ReadRgbPng(const std::string& path) {
  const DecodedPng png = Decode(path);
  if (png.bit_depth != 8) {
    throw Error(ErrorCode::kUnreadableImage,
                path + ": expected 8-bit color channels");
  }
  RgbImage img;
  img.width = static_cast<int>(png.width);
  img.height = static_cast<int>(png.height);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  img.data.resize(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = png.pixels.data() + i * png.channels;
    if (png.channels >= 3) {
      img.data[3 * i] = p[0];
      img.data[3 * i + 1] = p[1];
      img.data[3 * i + 2] = p[2];
    } else {
      img.data[3 * i] = img.data[3 * i + 1] = img.data[3 * i + 2] = p[0];
    }
  }
  return img;
}

DepthImage ReadDepthPng(const std::string& path) {
  const DecodedPng png = Decode(path);
  if (png.channels != 1) {
    throw Error(ErrorCode::kUnreadableImage,
                path + ": depth image must have a single channel");
  }
  DepthImage img;
  img.width = static_cast<int>(png.width);
  img.height = static_cast<int>(png.height);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  img.data.resize(n);
  if (png.bit_depth == 16) {
    std::memcpy(img.data.data(), png.pixels.data(), 2 * n);
  } else {
    for (std::size_t i = 0; i < n; ++i) img.data[i] = png.pixels[i];
  }
  return img;
}

void WriteRgbPng(const std::string& path, const RgbImage& image) {
  if (image.data.size() != 3 * static_cast<std::size_t>(image.width) * image.height) {
    throw Error(ErrorCode::kIoError, path + ": buffer size mismatch");
  }
  Encode(path, image.width, image.height, PNG_COLOR_TYPE_RGB, 8,
         image.data.data(), 3 * static_cast<std::size_t>(image.width));
}

void WriteDepthPng(const std::string& path, const DepthImage& image) {
  if (image.data.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw Error(ErrorCode::kIoError, path + ": buffer size mismatch");
  }
  Encode(path, image.width, image.height, PNG_COLOR_TYPE_GRAY, 16,
         reinterpret_cast<const std::uint8_t*>(image.data.data()),
         2 * static_cast<std::size_t>(image.width));
}

}  // namespace semmap
