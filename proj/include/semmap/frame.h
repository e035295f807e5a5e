#ifndef SEMMAP_FRAME_H_
#define SEMMAP_FRAME_H_

#include <cstdint>
#include <span>
#include <vector>

#include "semmap/semantic.h"

namespace semmap {

// One slot of a per-pixel top-k label list; label == kNoLabel marks an
// empty slot.
struct LabelSlot {
  LabelId label = kNoLabel;
  float prob = 0.0f;
  friend bool operator==(const LabelSlot&, const LabelSlot&) = default;
};

// Row-major raster of k slots per pixel.
struct LabelRaster {
  int width = 0;
  int height = 0;
  int k = 0;
  std::vector<LabelSlot> slots;

  bool empty() const { return width == 0 && height == 0; }
  std::span<const LabelSlot> Pixel(int x, int y) const {
    const std::size_t base =
        (static_cast<std::size_t>(y) * width + x) * static_cast<std::size_t>(k);
    return {slots.data() + base, static_cast<std::size_t>(k)};
  }
  std::span<LabelSlot> Pixel(int x, int y) {
    const std::size_t base =
        (static_cast<std::size_t>(y) * width + x) * static_cast<std::size_t>(k);
    return {slots.data() + base, static_cast<std::size_t>(k)};
  }

  friend bool operator==(const LabelRaster&, const LabelRaster&) = default;
};

// Distribution of one raster pixel; empty slots are skipped.
SemanticDistribution PixelDistribution(const LabelRaster& raster, int x,
                                       int y);

// Depth + color + optional per-pixel labels, one timestamp.
struct LabeledFrame {
  double timestamp = 0.0;
  int width = 0;
  int height = 0;
  // Interleaved 8-bit RGB, row-major. May be empty (geometry-only input).
  std::vector<std::uint8_t> color;
  // Raw depth units, row-major; 0 = invalid.
  std::vector<std::uint16_t> depth;
  // Empty raster = no semantics for this frame.
  LabelRaster labels;

  std::uint16_t DepthAt(int x, int y) const {
    return depth[static_cast<std::size_t>(y) * width + x];
  }
  // Packed 0xRRGGBB; 0 when the frame carries no color.
  std::uint32_t ColorAt(int x, int y) const;
};

}  // namespace semmap

#endif  // SEMMAP_FRAME_H_
