#include <algorithm>
#include <filesystem>

#include "byte_io.h"
#include "semmap/error.h"
#include "semmap/ingest.h"

namespace semmap {

namespace fs = std::filesystem;

namespace {
constexpr std::string_view kSlabMagic = "S3MSLAB1";
constexpr std::size_t kSlotBytes = 6;
}  // namespace

std::vector<std::uint8_t> EncodeSlab(const LabelRaster& raster) {
  if (raster.k < 0 || raster.k > 255) {
    throw Error(ErrorCode::kInvalidArgument, "slab k must fit in a byte");
  }
  const std::size_t n = static_cast<std::size_t>(raster.width) *
                        raster.height * static_cast<std::size_t>(raster.k);
  if (raster.slots.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "slab slot count mismatch");
  }
  internal::ByteWriter w;
  w.Bytes(kSlabMagic);
  w.U32(static_cast<std::uint32_t>(raster.width));
  w.U32(static_cast<std::uint32_t>(raster.height));
  w.U8(static_cast<std::uint8_t>(raster.k));
  for (const LabelSlot& s : raster.slots) {
    w.U16(s.label);
    w.F32(s.prob);
  }
  return std::move(w.buffer());
}

LabelRaster DecodeSlab(std::span<const std::uint8_t> bytes,
                       const std::string& origin) {
  internal::ByteReader r(bytes, ErrorCode::kTruncatedFile, origin);
  if (bytes.size() < kSlabMagic.size() + 9) {
    throw Error(ErrorCode::kBadHeader, origin + ": header too short");
  }
  if (r.Bytes(kSlabMagic.size()) != kSlabMagic) {
    throw Error(ErrorCode::kBadHeader, origin + ": bad magic");
  }
  LabelRaster raster;
  const std::uint32_t width = r.U32();
  const std::uint32_t height = r.U32();
  raster.k = r.U8();
  if (width > (1u << 20) || height > (1u << 20)) {
    throw Error(ErrorCode::kBadHeader, origin + ": implausible dimensions");
  }
  raster.width = static_cast<int>(width);
  raster.height = static_cast<int>(height);
  const std::size_t n = std::size_t{width} * height * raster.k;
  if (r.remaining() < n * kSlotBytes) {
    throw Error(ErrorCode::kTruncatedFile,
                origin + ": expected " + std::to_string(n * kSlotBytes) +
                    " payload bytes, found " + std::to_string(r.remaining()));
  }
  if (r.remaining() > n * kSlotBytes) {
    throw Error(ErrorCode::kBadHeader, origin + ": trailing bytes");
  }
  raster.slots.resize(n);
  for (LabelSlot& s : raster.slots) {
    s.label = r.U16();
    s.prob = r.F32();
  }
  for (int y = 0; y < raster.height; ++y) {
    for (int x = 0; x < raster.width; ++x) {
      double sum = 0.0;
      for (const LabelSlot& s : raster.Pixel(x, y)) {
        if (s.label == kNoLabel) continue;
        if (!(s.prob >= 0.0f && s.prob <= 1.0f)) sum = 2.0;
        sum += s.prob;
      }
      if (sum > 1.0 + 1e-6) {
        throw Error(ErrorCode::kProbabilityOverflow,
                    origin + ": pixel (" + std::to_string(x) + ", " +
                        std::to_string(y) + ") probabilities invalid");
      }
    }
  }
  return raster;
}

LabelRaster ReadSlab(const std::string& path) {
  return DecodeSlab(internal::ReadFileBytes(path), path);
}

void WriteSlab(const std::string& path, const LabelRaster& raster) {
  internal::WriteFileBytes(path, EncodeSlab(raster));
}

std::vector<LabelMapFile> IndexLabelMaps(const std::string& directory) {
  std::error_code ec;
  if (!fs::is_directory(directory, ec)) {
    throw Error(ErrorCode::kIoError, "not a directory: " + directory);
  }
  std::vector<LabelMapFile> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".slab") {
      continue;
    }
    const std::string stem = entry.path().stem().string();
    LabelMapFile f;
    try {
      std::size_t used = 0;
      f.timestamp = std::stod(stem, &used);
      if (used != stem.size()) throw std::invalid_argument(stem);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError,
                  entry.path().string() + ": file name is not a timestamp");
    }
    f.path = entry.path().string();
    files.push_back(std::move(f));
  }
  std::sort(files.begin(), files.end(),
            [](const LabelMapFile& a, const LabelMapFile& b) {
              return a.timestamp < b.timestamp;
            });
  return files;
}

std::map<double, LabelRaster> LoadLabelMaps(const std::string& directory) {
  std::map<double, LabelRaster> maps;
  for (const auto& f : IndexLabelMaps(directory)) {
    maps.emplace(f.timestamp, ReadSlab(f.path));
  }
  return maps;
}

}  // namespace semmap
