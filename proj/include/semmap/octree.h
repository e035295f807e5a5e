#ifndef SEMMAP_OCTREE_H_
#define SEMMAP_OCTREE_H_

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "semmap/frame.h"
#include "semmap/geom.h"
#include "semmap/semantic.h"

namespace semmap {

struct MapConfig {
  // Leaf edge length in meters.
  double resolution = 0.1;
  // Levels below the root; the tree spans resolution * 2^max_depth.
  int max_depth = 16;
  // Center of the root cube.
  Vec3 origin = Vec3::Zero();
  double p_hit = 0.7;
  double p_miss = 0.4;
  double l_min = -2.0;
  double l_max = 3.5;
  double occupancy_threshold = 0.5 + 1e-9;
  // Sensor range cutoff in meters; <= 0 disables it.
  double max_range = 0.0;
  bool carve_free_space = false;
  FusionConfig fusion;

  void Validate() const;
};

// ln(p / (1 - p)); throws kProbabilityOutOfRange outside (0, 1).
double LogOdds(double p);
double InverseLogOdds(double l);

enum class Observation { kHit, kMiss };

struct VoxelState {
  double log_odds = 0.0;
  SemanticDistribution semantics;
  std::uint32_t hit_count = 0;

  friend bool operator==(const VoxelState&, const VoxelState&) = default;
};

// L' = clamp(L + log_odds(p_hit | p_miss), l_min, l_max). Semantics are left
// untouched; hit_count grows on hits.
VoxelState UpdateVoxel(const VoxelState& v, Observation obs,
                       const MapConfig& cfg);

// Integer cell indices at max depth.
struct VoxelKey {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint32_t z = 0;
  friend bool operator==(const VoxelKey&, const VoxelKey&) = default;
  friend auto operator<=>(const VoxelKey&, const VoxelKey&) = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    return (std::size_t{k.x} * 73856093u) ^ (std::size_t{k.y} * 19349663u) ^
           (std::size_t{k.z} * 83492791u);
  }
};

struct InsertStats {
  std::size_t inserted = 0;
  std::size_t skipped_zero_depth = 0;
  std::size_t out_of_range = 0;
  std::size_t out_of_bounds = 0;
  std::size_t freed_voxels = 0;
  // Fusions rejected with AllZeroProduct; the voxel keeps its semantics.
  std::size_t semantic_conflicts = 0;

  InsertStats& operator+=(const InsertStats& o);
};

// A frame turned into world-frame points; produced independently of the map
// so several frames can be prepared concurrently.
struct PreparedFrame {
  Vec3 sensor_origin = Vec3::Zero();
  std::vector<SemanticPoint> points;
  std::size_t skipped_zero_depth = 0;
  std::size_t out_of_range = 0;
};

// Back-projects every stride-th pixel (row-major) with valid depth and
// attaches its color and label distribution. Throws kDimensionMismatch when
// the frame or its label raster disagree with the intrinsics.
PreparedFrame PrepareFrame(const Pose& sensor_pose, const LabeledFrame& frame,
                           const CameraIntrinsics& k, int stride,
                           double max_range);

struct LeafView {
  VoxelKey key;  // min corner of the cell, in max-depth units
  int depth = 0;
  const VoxelState* state = nullptr;
};

// Probabilistic occupancy octree whose leaves carry label distributions.
// Not thread-safe for writes; concurrent const access is fine.
class SemanticOctree {
 public:
  explicit SemanticOctree(MapConfig config = {}, LabelTable labels = {});
  SemanticOctree(SemanticOctree&&) noexcept;
  SemanticOctree& operator=(SemanticOctree&&) noexcept;
  ~SemanticOctree();

  const MapConfig& config() const { return config_; }
  const LabelTable& labels() const { return labels_; }
  void set_labels(LabelTable labels) { labels_ = std::move(labels); }

  std::optional<VoxelKey> KeyFor(const Vec3& position) const;
  Vec3 CellCenter(const VoxelKey& key, int depth) const;
  double CellSize(int depth) const;

  // Applies one hit/miss to the leaf containing `position`. Returns false
  // (and changes nothing) outside the addressable volume.
  bool UpdateOccupancy(const Vec3& position, Observation obs);
  void UpdateOccupancy(const VoxelKey& key, Observation obs);

  enum class PointOutcome { kInserted, kOutOfBounds, kOutOfRange };
  // Hit update plus semantic fusion. With a sensor origin and a positive
  // max_range, points farther than max_range are dropped.
  PointOutcome InsertPoint(const SemanticPoint& point,
                           const std::optional<Vec3>& sensor_origin = {});

  // Integrates a prepared frame: optional free-space carving along each
  // sensor ray (endpoint voxel excluded, hits win within the frame), then
  // hit updates in point order.
  InsertStats Integrate(const PreparedFrame& frame);
  InsertStats InsertFrame(const Pose& sensor_pose, const LabeledFrame& frame,
                          const CameraIntrinsics& k, int stride);

  const VoxelState* Find(const Vec3& position) const;
  const VoxelState* Find(const VoxelKey& key) const;
  // Prior 0.5 for unobserved space.
  double OccupancyAt(const Vec3& position) const;
  std::optional<LabelProb> LabelAt(const Vec3& position) const;

  // Collapses inner nodes whose eight children are leaves with equal
  // log-odds and semantics. The merged leaf keeps the largest hit_count.
  void Prune();

  // Pre-order, children 0..7.
  void ForEachLeaf(const std::function<void(const LeafView&)>& fn) const;
  std::vector<LeafView> Leaves() const;
  std::size_t LeafCount() const;
  std::size_t NodeCount() const;
  bool empty() const { return root_ == nullptr; }

  // Counters accumulated by InsertPoint.
  const InsertStats& totals() const { return totals_; }

  // Cells crossed by the segment from `from` to `to`, excluding the cell
  // holding `to`; cells outside the map are omitted.
  std::vector<VoxelKey> RayKeys(const Vec3& from, const Vec3& to) const;

  struct Node;

 private:
  friend class OctreeCodec;

  Node* LeafFor(const VoxelKey& key);
  static int ChildIndex(const VoxelKey& key, int level, int max_depth);

  MapConfig config_;
  LabelTable labels_;
  std::unique_ptr<Node> root_;
  InsertStats totals_;
};

struct SemanticOctree::Node {
  std::unique_ptr<std::array<std::unique_ptr<Node>, 8>> children;
  VoxelState state;

  bool is_leaf() const { return children == nullptr; }
};

}  // namespace semmap

#endif  // SEMMAP_OCTREE_H_
