#ifndef SEMMAP_OCTREE_IO_H_
#define SEMMAP_OCTREE_IO_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semmap/octree.h"

namespace semmap {

// ".s3m" map file, little-endian:
//   magic "S3MMAP1\0", u32 version (1), f64 resolution, 3 x f64 origin,
//   u8 max_depth, f32 l_min, f32 l_max,
//   u32 label count, then per label: u16 byte length, UTF-8 name, 3 x u8 RGB,
//   u8 root marker (0 = empty tree, 1 = root record follows),
//   pre-order node records: u8 child_mask (bit i => child i present,
//   0 => leaf). Leaves carry f32 log_odds, u8 entry count,
//   entries as (u16 label, f32 prob), u32 hit_count.
inline constexpr std::uint32_t kMapFormatVersion = 1;

std::vector<std::uint8_t> SerializeMap(const SemanticOctree& map);

// Fields absent from the file (p_hit, p_miss, thresholds, fusion) come from
// `defaults`. Throws kBadMagic, kUnsupportedVersion, kTruncatedStream or
// kCorruptNode.
SemanticOctree DeserializeMap(std::span<const std::uint8_t> bytes,
                              const MapConfig& defaults = {});

// Returns bytes written.
std::size_t SaveMap(const SemanticOctree& map, const std::string& path);
SemanticOctree LoadMap(const std::string& path,
                       const MapConfig& defaults = {});

// ASCII PLY with "x y z red green blue label confidence", one vertex per
// leaf whose occupancy exceeds the threshold (the map's own by default).
// Unlabeled leaves get label -1, gray, confidence 0. Returns vertex count.
std::size_t WritePly(const SemanticOctree& map, std::ostream& out,
                     std::optional<double> threshold = {});
std::size_t ExportPly(const SemanticOctree& map, const std::string& path,
                      std::optional<double> threshold = {});

}  // namespace semmap

#endif  // SEMMAP_OCTREE_IO_H_
