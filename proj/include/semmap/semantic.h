#ifndef SEMMAP_SEMANTIC_H_
#define SEMMAP_SEMANTIC_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semmap/geom.h"

namespace semmap {

using LabelId = std::uint16_t;
// Reserved: marks an empty slot in label rasters.
inline constexpr LabelId kNoLabel = 0xFFFF;

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Class names and display colors indexed by LabelId.
class LabelTable {
 public:
  LabelTable() = default;

  // Returns the new id. Throws kInvalidArgument on a duplicate or empty name.
  LabelId Add(const std::string& name, Rgb color);
  std::optional<LabelId> Find(const std::string& name) const;

  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  const std::string& name(LabelId id) const { return names_.at(id); }
  const Rgb& color(LabelId id) const { return colors_.at(id); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Rgb>& colors() const { return colors_; }

  // Text form: one "id name r g b" line per class, ids ascending from 0.
  // '#' starts a comment line.
  static LabelTable Load(const std::string& path);
  static LabelTable Parse(const std::string& text, const std::string& origin);
  void Save(const std::string& path) const;

  friend bool operator==(const LabelTable&, const LabelTable&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<Rgb> colors_;
};

struct LabelProb {
  LabelId label = 0;
  double prob = 0.0;
  friend bool operator==(const LabelProb&, const LabelProb&) = default;
};

// Sparse label distribution. Entries are sorted by ascending label id with
// unique labels; probabilities lie in [0, 1] and sum to at most one. The
// missing mass is the probability of classes not listed.
class SemanticDistribution {
 public:
  SemanticDistribution() = default;

  // Builds from arbitrary order; throws kDuplicateLabel,
  // kProbabilityOutOfRange (an entry outside [0, 1]) or
  // kProbabilityOverflow (sum > 1 + 1e-6). A sum in (1, 1 + 1e-6] is
  // rescaled to exactly one.
  static SemanticDistribution FromPixel(std::span<const LabelProb> scores);
  // Trusts the caller: entries must already satisfy the invariants.
  static SemanticDistribution FromSortedUnchecked(std::vector<LabelProb> e);

  const std::vector<LabelProb>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  std::optional<double> ProbOf(LabelId label) const;
  bool SameLabelSet(const SemanticDistribution& other) const;
  double Sum() const;
  bool IsValid(double tol = 1e-9) const;

  friend bool operator==(const SemanticDistribution&,
                         const SemanticDistribution&) = default;

 private:
  std::vector<LabelProb> entries_;
};

// One observed point: position (world frame), packed 0xRRGGBB color and
// label distribution.
struct SemanticPoint {
  Vec3 position = Vec3::Zero();
  std::uint32_t color = 0;
  SemanticDistribution semantics;
};

struct FusionConfig {
  // Share of the residual mass handed to a label one side has not seen.
  double alpha = 0.5;
  std::size_t k_max = 5;
  // When set, equal label sets are multiplied and normalized instead of
  // returning the first operand unchanged.
  bool bayes_on_equal_sets = false;

  void Validate() const;
};

// 1 - sum(prob), clamped to [0, 1].
double ResidualMass(const SemanticDistribution& d);

// Label-set fusion of two observations. Equal label sets return q1 (unless
// bayes_on_equal_sets). Otherwise each side is padded with the labels only
// the other side has, in ascending id order, each at alpha times that
// side's current residual mass; the label-aligned products are normalized
// and the result is cut to the k_max most probable entries.
// Throws kAllZeroProduct when every product vanishes.
SemanticDistribution Fuse(const SemanticDistribution& q1,
                          const SemanticDistribution& q2,
                          const FusionConfig& cfg);

// Same as Fuse but without the k_max cut; used for invariant checks.
SemanticDistribution FuseUntruncated(const SemanticDistribution& q1,
                                     const SemanticDistribution& q2,
                                     const FusionConfig& cfg);

// Highest probability entry, lower id on ties.
std::optional<LabelProb> ArgmaxLabel(const SemanticDistribution& d);

}  // namespace semmap

#endif  // SEMMAP_SEMANTIC_H_
