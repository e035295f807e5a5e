#include "semmap/octree.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

#include "semmap/error.h"

namespace semmap {

void MapConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, what);
  };
  if (!(resolution > 0.0)) fail("resolution must be positive");
  if (max_depth < 1 || max_depth > 16) fail("max_depth must lie in [1, 16]");
  if (!origin.allFinite()) fail("origin must be finite");
  if (!(p_hit > 0.5 && p_hit < 1.0)) fail("p_hit must lie in (0.5, 1)");
  if (!(p_miss > 0.0 && p_miss < 0.5)) fail("p_miss must lie in (0, 0.5)");
  if (!(l_min < 0.0 && l_max > 0.0)) fail("need l_min < 0 < l_max");
  if (!(occupancy_threshold >= 0.5 && occupancy_threshold < 1.0)) {
    fail("occupancy_threshold must lie in [0.5, 1)");
  }
  fusion.Validate();
}

double LogOdds(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::kProbabilityOutOfRange,
                "log-odds of " + std::to_string(p));
  }
  return std::log(p / (1.0 - p));
}

double InverseLogOdds(double l) { return 1.0 / (1.0 + std::exp(-l)); }

VoxelState UpdateVoxel(const VoxelState& v, Observation obs,
                       const MapConfig& cfg) {
  VoxelState out = v;
  const double delta =
      LogOdds(obs == Observation::kHit ? cfg.p_hit : cfg.p_miss);
  out.log_odds = std::clamp(v.log_odds + delta, cfg.l_min, cfg.l_max);
  if (obs == Observation::kHit) ++out.hit_count;
  return out;
}

InsertStats& InsertStats::operator+=(const InsertStats& o) {
  inserted += o.inserted;
  skipped_zero_depth += o.skipped_zero_depth;
  out_of_range += o.out_of_range;
  out_of_bounds += o.out_of_bounds;
  freed_voxels += o.freed_voxels;
  semantic_conflicts += o.semantic_conflicts;
  return *this;
}

PreparedFrame PrepareFrame(const Pose& sensor_pose, const LabeledFrame& frame,
                           const CameraIntrinsics& k, int stride,
                           double max_range) {
  if (frame.width != k.width || frame.height != k.height) {
    throw Error(ErrorCode::kDimensionMismatch,
                "frame is " + std::to_string(frame.width) + "x" +
                    std::to_string(frame.height) + ", intrinsics expect " +
                    std::to_string(k.width) + "x" + std::to_string(k.height));
  }
  const std::size_t pixels =
      static_cast<std::size_t>(frame.width) * frame.height;
  if (frame.depth.size() != pixels ||
      (!frame.color.empty() && frame.color.size() != 3 * pixels)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "raster sizes disagree with frame dimensions");
  }
  const bool labeled = !frame.labels.empty();
  if (labeled &&
      (frame.labels.width != frame.width ||
       frame.labels.height != frame.height ||
       frame.labels.slots.size() != pixels * frame.labels.k)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "label raster is " + std::to_string(frame.labels.width) + "x" +
                    std::to_string(frame.labels.height));
  }
  if (stride < 1) {
    throw Error(ErrorCode::kInvalidArgument, "stride must be >= 1");
  }

  PreparedFrame out;
  out.sensor_origin = sensor_pose.translation();
  for (int v = 0; v < frame.height; v += stride) {
    for (int u = 0; u < frame.width; u += stride) {
      const std::uint16_t raw = frame.DepthAt(u, v);
      if (raw == 0) {
        ++out.skipped_zero_depth;
        continue;
      }
      const Vec3 p_cam = BackProject(k, Vec2(u, v), raw);
      if (max_range > 0.0 && p_cam.norm() > max_range) {
        ++out.out_of_range;
        continue;
      }
      SemanticPoint point;
      point.position = sensor_pose * p_cam;
      point.color = frame.ColorAt(u, v);
      if (labeled) point.semantics = PixelDistribution(frame.labels, u, v);
      out.points.push_back(std::move(point));
    }
  }
  return out;
}

SemanticOctree::SemanticOctree(MapConfig config, LabelTable labels)
    : config_(std::move(config)), labels_(std::move(labels)) {
  config_.Validate();
}

SemanticOctree::SemanticOctree(SemanticOctree&&) noexcept = default;
SemanticOctree& SemanticOctree::operator=(SemanticOctree&&) noexcept = default;
SemanticOctree::~SemanticOctree() = default;

double SemanticOctree::CellSize(int depth) const {
  return std::ldexp(config_.resolution, config_.max_depth - depth);
}

std::optional<VoxelKey> SemanticOctree::KeyFor(const Vec3& position) const {
  if (!position.allFinite()) return std::nullopt;
  const double half = std::ldexp(1.0, config_.max_depth - 1);
  const double size = 2.0 * half;
  std::array<std::uint32_t, 3> idx{};
  for (int a = 0; a < 3; ++a) {
    const double g =
        std::floor((position[a] - config_.origin[a]) / config_.resolution) +
        half;
    if (!(g >= 0.0 && g < size)) return std::nullopt;
    idx[a] = static_cast<std::uint32_t>(g);
  }
  return VoxelKey{idx[0], idx[1], idx[2]};
}

Vec3 SemanticOctree::CellCenter(const VoxelKey& key, int depth) const {
  const double half = std::ldexp(1.0, config_.max_depth - 1);
  const double cell = std::ldexp(1.0, config_.max_depth - depth);
  const Vec3 corner(key.x - half, key.y - half, key.z - half);
  return config_.origin +
         config_.resolution * (corner + Vec3::Constant(0.5 * cell));
}

int SemanticOctree::ChildIndex(const VoxelKey& key, int level, int max_depth) {
  const int shift = max_depth - 1 - level;
  return static_cast<int>(((key.x >> shift) & 1u) |
                          (((key.y >> shift) & 1u) << 1) |
                          (((key.z >> shift) & 1u) << 2));
}

namespace {

using Node = SemanticOctree::Node;

void Expand(Node* node) {
  node->children = std::make_unique<std::array<std::unique_ptr<Node>, 8>>();
  for (auto& child : *node->children) {
    child = std::make_unique<Node>();
    child->state = node->state;
  }
  node->state = VoxelState{};
}

std::unique_ptr<Node> MakeInner() {
  auto n = std::make_unique<Node>();
  n->children = std::make_unique<std::array<std::unique_ptr<Node>, 8>>();
  return n;
}

}  // namespace

SemanticOctree::Node* SemanticOctree::LeafFor(const VoxelKey& key) {
  if (!root_) root_ = MakeInner();
  Node* node = root_.get();
  for (int level = 0; level < config_.max_depth; ++level) {
    if (node->is_leaf()) Expand(node);
    auto& slot = (*node->children)[ChildIndex(key, level, config_.max_depth)];
    if (!slot) {
      slot = level + 1 == config_.max_depth ? std::make_unique<Node>()
                                            : MakeInner();
    }
    node = slot.get();
  }
  return node;
}

bool SemanticOctree::UpdateOccupancy(const Vec3& position, Observation obs) {
  const auto key = KeyFor(position);
  if (!key) return false;
  UpdateOccupancy(*key, obs);
  return true;
}

void SemanticOctree::UpdateOccupancy(const VoxelKey& key, Observation obs) {
  Node* leaf = LeafFor(key);
  leaf->state = UpdateVoxel(leaf->state, obs, config_);
}

SemanticOctree::PointOutcome SemanticOctree::InsertPoint(
    const SemanticPoint& point, const std::optional<Vec3>& sensor_origin) {
  if (sensor_origin && config_.max_range > 0.0 &&
      (point.position - *sensor_origin).norm() > config_.max_range) {
    ++totals_.out_of_range;
    return PointOutcome::kOutOfRange;
  }
  const auto key = KeyFor(point.position);
  if (!key) {
    ++totals_.out_of_bounds;
    return PointOutcome::kOutOfBounds;
  }
  Node* leaf = LeafFor(*key);
  leaf->state = UpdateVoxel(leaf->state, Observation::kHit, config_);
  ++totals_.inserted;

  SemanticDistribution& current = leaf->state.semantics;
  if (point.semantics.empty()) return PointOutcome::kInserted;
  if (current.empty()) {
    current = point.semantics;
    return PointOutcome::kInserted;
  }
  try {
    current = Fuse(current, point.semantics, config_.fusion);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kAllZeroProduct) throw;
    ++totals_.semantic_conflicts;
  }
  return PointOutcome::kInserted;
}

std::vector<VoxelKey> SemanticOctree::RayKeys(const Vec3& from,
                                              const Vec3& to) const {
  std::vector<VoxelKey> keys;
  if (!from.allFinite() || !to.allFinite()) return keys;
  const double half = std::ldexp(1.0, config_.max_depth - 1);
  const double size = 2.0 * half;
  const Vec3 g0 = (from - config_.origin) / config_.resolution +
                  Vec3::Constant(half);
  const Vec3 g1 = (to - config_.origin) / config_.resolution +
                  Vec3::Constant(half);

  std::array<long long, 3> cell{}, end{}, step{};
  std::array<double, 3> t_max{}, t_delta{};
  const Vec3 dir = g1 - g0;
  long long budget = 1;
  for (int a = 0; a < 3; ++a) {
    cell[a] = static_cast<long long>(std::floor(g0[a]));
    end[a] = static_cast<long long>(std::floor(g1[a]));
    budget += std::llabs(end[a] - cell[a]);
    if (dir[a] > 0.0) {
      step[a] = 1;
      t_max[a] = (static_cast<double>(cell[a] + 1) - g0[a]) / dir[a];
      t_delta[a] = 1.0 / dir[a];
    } else if (dir[a] < 0.0) {
      step[a] = -1;
      t_max[a] = (static_cast<double>(cell[a]) - g0[a]) / dir[a];
      t_delta[a] = -1.0 / dir[a];
    } else {
      step[a] = 0;
      t_max[a] = std::numeric_limits<double>::infinity();
      t_delta[a] = std::numeric_limits<double>::infinity();
    }
  }

  auto emit = [&](const std::array<long long, 3>& c) {
    for (int a = 0; a < 3; ++a) {
      if (c[a] < 0 || c[a] >= static_cast<long long>(size)) return;
    }
    keys.push_back({static_cast<std::uint32_t>(c[0]),
                    static_cast<std::uint32_t>(c[1]),
                    static_cast<std::uint32_t>(c[2])});
  };

  for (long long i = 0; i < budget && cell != end; ++i) {
    emit(cell);
    int axis = 0;
    if (t_max[1] < t_max[axis]) axis = 1;
    if (t_max[2] < t_max[axis]) axis = 2;
    if (t_max[axis] > 1.0) break;
    cell[axis] += step[axis];
    t_max[axis] += t_delta[axis];
  }
  return keys;
}

InsertStats SemanticOctree::Integrate(const PreparedFrame& frame) {
  const InsertStats before = totals_;
  InsertStats stats;
  stats.skipped_zero_depth = frame.skipped_zero_depth;
  stats.out_of_range = frame.out_of_range;

  if (config_.carve_free_space) {
    std::unordered_set<VoxelKey, VoxelKeyHash> hit_keys;
    for (const auto& p : frame.points) {
      if (config_.max_range > 0.0 &&
          (p.position - frame.sensor_origin).norm() > config_.max_range) {
        continue;
      }
      if (auto k = KeyFor(p.position)) hit_keys.insert(*k);
    }
    std::unordered_set<VoxelKey, VoxelKeyHash> seen;
    std::vector<VoxelKey> free_keys;
    for (const auto& p : frame.points) {
      for (const VoxelKey& k : RayKeys(frame.sensor_origin, p.position)) {
        if (hit_keys.count(k) || !seen.insert(k).second) continue;
        free_keys.push_back(k);
      }
    }
    for (const VoxelKey& k : free_keys) UpdateOccupancy(k, Observation::kMiss);
    stats.freed_voxels = free_keys.size();
  }

  for (const auto& p : frame.points) InsertPoint(p, frame.sensor_origin);

  stats.inserted = totals_.inserted - before.inserted;
  stats.out_of_range += totals_.out_of_range - before.out_of_range;
  stats.out_of_bounds = totals_.out_of_bounds - before.out_of_bounds;
  stats.semantic_conflicts =
      totals_.semantic_conflicts - before.semantic_conflicts;
  return stats;
}

InsertStats SemanticOctree::InsertFrame(const Pose& sensor_pose,
                                        const LabeledFrame& frame,
                                        const CameraIntrinsics& k,
                                        int stride) {
  return Integrate(
      PrepareFrame(sensor_pose, frame, k, stride, config_.max_range));
}

const VoxelState* SemanticOctree::Find(const VoxelKey& key) const {
  const Node* node = root_.get();
  for (int level = 0; node != nullptr; ++level) {
    if (node->is_leaf()) return &node->state;
    if (level == config_.max_depth) return nullptr;
    node = (*node->children)[ChildIndex(key, level, config_.max_depth)].get();
  }
  return nullptr;
}

const VoxelState* SemanticOctree::Find(const Vec3& position) const {
  const auto key = KeyFor(position);
  return key ? Find(*key) : nullptr;
}

double SemanticOctree::OccupancyAt(const Vec3& position) const {
  const VoxelState* s = Find(position);
  return s ? InverseLogOdds(s->log_odds) : 0.5;
}

std::optional<LabelProb> SemanticOctree::LabelAt(const Vec3& position) const {
  const VoxelState* s = Find(position);
  return s ? ArgmaxLabel(s->semantics) : std::nullopt;
}

namespace {

void PruneNode(Node* node) {
  if (node->is_leaf()) return;
  bool collapsible = true;
  for (auto& child : *node->children) {
    if (!child) {
      collapsible = false;
      continue;
    }
    PruneNode(child.get());
    if (!child->is_leaf()) collapsible = false;
  }
  if (!collapsible) return;
  const VoxelState& first = (*node->children)[0]->state;
  std::uint32_t hits = first.hit_count;
  for (const auto& child : *node->children) {
    if (child->state.log_odds != first.log_odds ||
        child->state.semantics != first.semantics) {
      return;
    }
    hits = std::max(hits, child->state.hit_count);
  }
  node->state = first;
  node->state.hit_count = hits;
  node->children.reset();
}

void VisitLeaves(const Node* node, const VoxelKey& key, int depth,
                 int max_depth,
                 const std::function<void(const LeafView&)>& fn) {
  if (node->is_leaf()) {
    fn(LeafView{key, depth, &node->state});
    return;
  }
  const int shift = max_depth - 1 - depth;
  for (int i = 0; i < 8; ++i) {
    const auto& child = (*node->children)[i];
    if (!child) continue;
    VoxelKey k = key;
    k.x |= static_cast<std::uint32_t>(i & 1) << shift;
    k.y |= static_cast<std::uint32_t>((i >> 1) & 1) << shift;
    k.z |= static_cast<std::uint32_t>((i >> 2) & 1) << shift;
    VisitLeaves(child.get(), k, depth + 1, max_depth, fn);
  }
}

std::size_t CountNodes(const Node* node) {
  if (!node) return 0;
  std::size_t n = 1;
  if (!node->is_leaf()) {
    for (const auto& c : *node->children) n += CountNodes(c.get());
  }
  return n;
}

}  // namespace

void SemanticOctree::Prune() {
  if (root_) PruneNode(root_.get());
}

void SemanticOctree::ForEachLeaf(
    const std::function<void(const LeafView&)>& fn) const {
  if (root_) VisitLeaves(root_.get(), VoxelKey{}, 0, config_.max_depth, fn);
}

std::vector<LeafView> SemanticOctree::Leaves() const {
  std::vector<LeafView> out;
  ForEachLeaf([&](const LeafView& v) { out.push_back(v); });
  return out;
}

std::size_t SemanticOctree::LeafCount() const {
  std::size_t n = 0;
  ForEachLeaf([&](const LeafView&) { ++n; });
  return n;
}

std::size_t SemanticOctree::NodeCount() const { return CountNodes(root_.get()); }

}  // namespace semmap
