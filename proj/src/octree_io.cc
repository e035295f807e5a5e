#include "semmap/octree_io.h"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "byte_io.h"
#include "semmap/error.h"

namespace semmap {

namespace internal {

std::vector<std::uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void WriteFileBytes(const std::string& path,
                    std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

}  // namespace internal

namespace {

constexpr std::string_view kMagic("S3MMAP1\0", 8);
constexpr Rgb kUnlabeledColor{128, 128, 128};

}  // namespace

class OctreeCodec {
 public:
  using Node = SemanticOctree::Node;

  static void WriteNode(const Node& node, internal::ByteWriter& w) {
    if (node.is_leaf()) {
      w.U8(0);
      const VoxelState& s = node.state;
      w.F32(static_cast<float>(s.log_odds));
      const auto& entries = s.semantics.entries();
      if (entries.size() > 255) {
        throw Error(ErrorCode::kInvalidArgument,
                    "leaf holds more than 255 labels");
      }
      w.U8(static_cast<std::uint8_t>(entries.size()));
      for (const LabelProb& e : entries) {
        w.U16(e.label);
        w.F32(static_cast<float>(e.prob));
      }
      w.U32(s.hit_count);
      return;
    }
    std::uint8_t mask = 0;
    for (int i = 0; i < 8; ++i) {
      if ((*node.children)[i]) mask |= static_cast<std::uint8_t>(1u << i);
    }
    if (mask == 0) {
      throw Error(ErrorCode::kInvalidArgument, "inner node without children");
    }
    w.U8(mask);
    for (const auto& child : *node.children) {
      if (child) WriteNode(*child, w);
    }
  }

  static std::unique_ptr<Node> ReadNode(internal::ByteReader& r, int depth,
                                        const SemanticOctree& map,
                                        float l_min, float l_max) {
    const std::uint8_t mask = r.U8();
    auto node = std::make_unique<Node>();
    auto corrupt = [&](const std::string& why) {
      return Error(ErrorCode::kCorruptNode,
                   why + " (node at offset " + std::to_string(r.position()) +
                       ", depth " + std::to_string(depth) + ")");
    };
    if (mask == 0) {
      const float l = r.F32();
      if (!std::isfinite(l) || l < l_min || l > l_max) {
        throw corrupt("log-odds outside clamping bounds");
      }
      node->state.log_odds = l;
      const std::uint8_t count = r.U8();
      std::vector<LabelProb> entries;
      entries.reserve(count);
      double sum = 0.0;
      for (int i = 0; i < count; ++i) {
        const std::uint16_t label = r.U16();
        const float p = r.F32();
        if (label == kNoLabel ||
            (!map.labels().empty() && label >= map.labels().size())) {
          throw corrupt("label id " + std::to_string(label) + " out of range");
        }
        if (!(p >= 0.0f && p <= 1.0f)) throw corrupt("probability out of range");
        if (!entries.empty() && entries.back().label >= label) {
          throw corrupt("labels not strictly ascending");
        }
        entries.push_back({label, static_cast<double>(p)});
        sum += p;
      }
      if (sum > 1.0 + 1e-5) throw corrupt("probabilities sum above one");
      node->state.semantics =
          SemanticDistribution::FromSortedUnchecked(std::move(entries));
      node->state.hit_count = r.U32();
      return node;
    }
    if (depth >= map.config().max_depth) {
      throw corrupt("inner node below maximum depth");
    }
    node->children = std::make_unique<std::array<std::unique_ptr<Node>, 8>>();
    for (int i = 0; i < 8; ++i) {
      if (mask & (1u << i)) {
        (*node->children)[i] = ReadNode(r, depth + 1, map, l_min, l_max);
      }
    }
    return node;
  }

  static std::vector<std::uint8_t> Serialize(const SemanticOctree& map) {
    internal::ByteWriter w;
    const MapConfig& c = map.config();
    w.Bytes(kMagic);
    w.U32(kMapFormatVersion);
    w.F64(c.resolution);
    for (int a = 0; a < 3; ++a) w.F64(c.origin[a]);
    w.U8(static_cast<std::uint8_t>(c.max_depth));
    w.F32(static_cast<float>(c.l_min));
    w.F32(static_cast<float>(c.l_max));
    const LabelTable& labels = map.labels();
    w.U32(static_cast<std::uint32_t>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const std::string& name = labels.names()[i];
      if (name.size() > 0xFFFF) {
        throw Error(ErrorCode::kInvalidArgument, "label name too long");
      }
      w.U16(static_cast<std::uint16_t>(name.size()));
      w.Bytes(name);
      w.U8(labels.colors()[i].r);
      w.U8(labels.colors()[i].g);
      w.U8(labels.colors()[i].b);
    }
    if (!map.root_) {
      w.U8(0);
    } else {
      w.U8(1);
      WriteNode(*map.root_, w);
    }
    return std::move(w.buffer());
  }

  static SemanticOctree Deserialize(std::span<const std::uint8_t> bytes,
                                    const MapConfig& defaults) {
    internal::ByteReader r(bytes, ErrorCode::kTruncatedStream, "map stream");
    if (bytes.size() < kMagic.size() || r.Bytes(kMagic.size()) != kMagic) {
      throw Error(ErrorCode::kBadMagic, "not a semantic octree map stream");
    }
    const std::uint32_t version = r.U32();
    if (version != kMapFormatVersion) {
      throw Error(ErrorCode::kUnsupportedVersion,
                  "map format version " + std::to_string(version));
    }
    MapConfig cfg = defaults;
    cfg.resolution = r.F64();
    for (int a = 0; a < 3; ++a) cfg.origin[a] = r.F64();
    cfg.max_depth = r.U8();
    const float l_min = r.F32();
    const float l_max = r.F32();
    cfg.l_min = l_min;
    cfg.l_max = l_max;
    try {
      cfg.Validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::kCorruptNode,
                  std::string("invalid map header: ") + e.what());
    }

    LabelTable labels;
    const std::uint32_t label_count = r.U32();
    for (std::uint32_t i = 0; i < label_count; ++i) {
      const std::uint16_t len = r.U16();
      std::string name(r.Bytes(len));
      Rgb color;
      color.r = r.U8();
      color.g = r.U8();
      color.b = r.U8();
      try {
        labels.Add(name, color);
      } catch (const Error& e) {
        throw Error(ErrorCode::kCorruptNode,
                    std::string("invalid label table: ") + e.what());
      }
    }

    SemanticOctree map(cfg, std::move(labels));
    const std::uint8_t root_marker = r.U8();
    if (root_marker == 1) {
      map.root_ = ReadNode(r, 0, map, l_min, l_max);
    } else if (root_marker != 0) {
      throw Error(ErrorCode::kCorruptNode, "bad root marker");
    }
    if (r.remaining() != 0) {
      throw Error(ErrorCode::kCorruptNode,
                  std::to_string(r.remaining()) + " trailing bytes");
    }
    return map;
  }
};

std::vector<std::uint8_t> SerializeMap(const SemanticOctree& map) {
  return OctreeCodec::Serialize(map);
}

SemanticOctree DeserializeMap(std::span<const std::uint8_t> bytes,
                              const MapConfig& defaults) {
  return OctreeCodec::Deserialize(bytes, defaults);
}

std::size_t SaveMap(const SemanticOctree& map, const std::string& path) {
  const auto bytes = SerializeMap(map);
  internal::WriteFileBytes(path, bytes);
  return bytes.size();
}

SemanticOctree LoadMap(const std::string& path, const MapConfig& defaults) {
  const auto bytes = internal::ReadFileBytes(path);
  try {
    return DeserializeMap(bytes, defaults);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

std::size_t WritePly(const SemanticOctree& map, std::ostream& out,
                     std::optional<double> threshold) {
  const double limit = threshold.value_or(map.config().occupancy_threshold);
  std::vector<LeafView> occupied;
  map.ForEachLeaf([&](const LeafView& v) {
    if (InverseLogOdds(v.state->log_odds) > limit) occupied.push_back(v);
  });

  out << "ply\n"
      << "format ascii 1.0\n"
      << "element vertex " << occupied.size() << "\n"
      << "property float x\n"
      << "property float y\n"
      << "property float z\n"
      << "property uchar red\n"
      << "property uchar green\n"
      << "property uchar blue\n"
      << "property int label\n"
      << "property float confidence\n"
      << "end_header\n";
  out << std::setprecision(9);
  for (const LeafView& v : occupied) {
    const Vec3 c = map.CellCenter(v.key, v.depth);
    const auto best = ArgmaxLabel(v.state->semantics);
    Rgb color = kUnlabeledColor;
    int label = -1;
    double confidence = 0.0;
    if (best) {
      label = best->label;
      confidence = best->prob;
      if (best->label < map.labels().size()) {
        color = map.labels().color(best->label);
      }
    }
    out << c.x() << ' ' << c.y() << ' ' << c.z() << ' ' << int(color.r) << ' '
        << int(color.g) << ' ' << int(color.b) << ' ' << label << ' '
        << static_cast<float>(confidence) << '\n';
  }
  return occupied.size();
}

std::size_t ExportPly(const SemanticOctree& map, const std::string& path,
                      std::optional<double> threshold) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  const std::size_t n = WritePly(map, out, threshold);
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path);
  return n;
}

}  // namespace semmap
