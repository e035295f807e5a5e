#ifndef SEMMAP_IMAGE_IO_H_
#define SEMMAP_IMAGE_IO_H_

#include <cstdint>
#include <string>
#include <vector>

namespace semmap {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // interleaved RGB, row-major
};

struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> data;  // row-major raw units
};

// PNG codecs. Readers accept gray, gray+alpha, RGB, RGBA and palette input
// for color; depth must be single-channel 16-bit (8-bit gray is widened).
// Failures throw kUnreadableImage (read) or kIoError (write).
RgbImage ReadRgbPng(const std::string& path);
DepthImage ReadDepthPng(const std::string& path);
void WriteRgbPng(const std::string& path, const RgbImage& image);
void WriteDepthPng(const std::string& path, const DepthImage& image);

}  // namespace semmap

#endif  // SEMMAP_IMAGE_IO_H_
