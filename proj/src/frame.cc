#include "semmap/frame.h"

#include <vector>

namespace semmap {

SemanticDistribution PixelDistribution(const LabelRaster& raster, int x,
                                       int y) {
  std::vector<LabelProb> scores;
  for (const LabelSlot& s : raster.Pixel(x, y)) {
    if (s.label == kNoLabel) continue;
    scores.push_back({s.label, static_cast<double>(s.prob)});
  }
  return SemanticDistribution::FromPixel(scores);
}

std::uint32_t LabeledFrame::ColorAt(int x, int y) const {
  if (color.empty()) return 0;
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  return (std::uint32_t{color[i]} << 16) | (std::uint32_t{color[i + 1]} << 8) |
         std::uint32_t{color[i + 2]};
}

}  // namespace semmap
