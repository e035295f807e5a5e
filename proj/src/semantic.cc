#include "semmap/semantic.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "semmap/error.h"

namespace semmap {

LabelId LabelTable::Add(const std::string& name, Rgb color) {
  if (name.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty class name");
  }
  // Names are whitespace-delimited in the text form.
  if (name.find_first_of(" \t\r\n#") != std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument,
                "class name '" + name + "' contains whitespace or '#'");
  }
  if (Find(name)) {
    throw Error(ErrorCode::kInvalidArgument,
                "duplicate class name '" + name + "'");
  }
  if (names_.size() >= kNoLabel) {
    throw Error(ErrorCode::kInvalidArgument, "label table is full");
  }
  names_.push_back(name);
  colors_.push_back(color);
  return static_cast<LabelId>(names_.size() - 1);
}

std::optional<LabelId> LabelTable::Find(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<LabelId>(it - names_.begin());
}

LabelTable LabelTable::Parse(const std::string& text,
                             const std::string& origin) {
  LabelTable table;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long id = 0;
    std::string name;
    int r = 0, g = 0, b = 0;
    std::string extra;
    const auto where = origin + ":" + std::to_string(line_no);
    if (!(fields >> id >> name >> r >> g >> b) || (fields >> extra)) {
      throw Error(ErrorCode::kParseError,
                  where + ": expected 'id name r g b'");
    }
    if (id != static_cast<long>(table.size())) {
      throw Error(ErrorCode::kParseError,
                  where + ": ids must ascend from 0 without gaps");
    }
    if (r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255) {
      throw Error(ErrorCode::kParseError, where + ": color out of range");
    }
    try {
      table.Add(name, Rgb{static_cast<std::uint8_t>(r),
                          static_cast<std::uint8_t>(g),
                          static_cast<std::uint8_t>(b)});
    } catch (const Error& e) {
      throw Error(ErrorCode::kParseError, where + ": " + e.what());
    }
  }
  if (table.empty()) {
    throw Error(ErrorCode::kParseError, origin + ": label table is empty");
  }
  return table;
}

LabelTable LabelTable::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return Parse(buffer.str(), path);
}

void LabelTable::Save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  for (std::size_t i = 0; i < names_.size(); ++i) {
    out << i << ' ' << names_[i] << ' ' << int(colors_[i].r) << ' '
        << int(colors_[i].g) << ' ' << int(colors_[i].b) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

SemanticDistribution SemanticDistribution::FromPixel(
    std::span<const LabelProb> scores) {
  std::vector<LabelProb> entries(scores.begin(), scores.end());
  std::sort(entries.begin(), entries.end(),
            [](const LabelProb& a, const LabelProb& b) {
              return a.label < b.label;
            });
  double sum = 0.0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0 && entries[i].label == entries[i - 1].label) {
      throw Error(ErrorCode::kDuplicateLabel,
                  "label " + std::to_string(entries[i].label) +
                      " listed twice");
    }
    if (!(entries[i].prob >= 0.0 && entries[i].prob <= 1.0)) {
      throw Error(ErrorCode::kProbabilityOutOfRange,
                  "label " + std::to_string(entries[i].label) +
                      " has probability " + std::to_string(entries[i].prob));
    }
    sum += entries[i].prob;
  }
  if (sum > 1.0 + 1e-6) {
    throw Error(ErrorCode::kProbabilityOverflow,
                "probabilities sum to " + std::to_string(sum));
  }
  if (sum > 1.0) {
    for (auto& e : entries) e.prob /= sum;
  }
  SemanticDistribution d;
  d.entries_ = std::move(entries);
  return d;
}

SemanticDistribution SemanticDistribution::FromSortedUnchecked(
    std::vector<LabelProb> e) {
  SemanticDistribution d;
  d.entries_ = std::move(e);
  return d;
}

std::optional<double> SemanticDistribution::ProbOf(LabelId label) const {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), label,
      [](const LabelProb& e, LabelId l) { return e.label < l; });
  if (it == entries_.end() || it->label != label) return std::nullopt;
  return it->prob;
}

bool SemanticDistribution::SameLabelSet(
    const SemanticDistribution& other) const {
  return std::equal(entries_.begin(), entries_.end(), other.entries_.begin(),
                    other.entries_.end(),
                    [](const LabelProb& a, const LabelProb& b) {
                      return a.label == b.label;
                    });
}

double SemanticDistribution::Sum() const {
  return std::accumulate(
      entries_.begin(), entries_.end(), 0.0,
      [](double acc, const LabelProb& e) { return acc + e.prob; });
}

bool SemanticDistribution::IsValid(double tol) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!(entries_[i].prob >= 0.0 && entries_[i].prob <= 1.0)) return false;
    if (entries_[i].label == kNoLabel) return false;
    if (i > 0 && entries_[i - 1].label >= entries_[i].label) return false;
  }
  return Sum() <= 1.0 + tol;
}

void FusionConfig::Validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must lie in (0, 1]");
  }
  if (k_max < 1) {
    throw Error(ErrorCode::kInvalidArgument, "k_max must be at least 1");
  }
}

double ResidualMass(const SemanticDistribution& d) {
  return std::clamp(1.0 - d.Sum(), 0.0, 1.0);
}

namespace {

// Appends every label of `from` missing in `to` (ascending id), each at
// alpha times the residual of `to` as it grows. Returns the padded copy,
// sorted by id.
std::vector<LabelProb> PadWithMissing(const SemanticDistribution& to,
                                      const SemanticDistribution& from,
                                      double alpha) {
  std::vector<LabelProb> padded = to.entries();
  double sum = to.Sum();
  for (const LabelProb& e : from.entries()) {
    if (to.ProbOf(e.label)) continue;
    const double residual = std::clamp(1.0 - sum, 0.0, 1.0);
    const double p = alpha * residual;
    padded.push_back({e.label, p});
    sum += p;
  }
  std::sort(padded.begin(), padded.end(),
            [](const LabelProb& a, const LabelProb& b) {
              return a.label < b.label;
            });
  return padded;
}

SemanticDistribution MultiplyAndNormalize(const std::vector<LabelProb>& a,
                                          const std::vector<LabelProb>& b) {
  // Both sides hold the same sorted label set here.
  std::vector<LabelProb> out(a.size());
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = {a[i].label, a[i].prob * b[i].prob};
    total += out[i].prob;
  }
  if (!(total > 0.0)) {
    throw Error(ErrorCode::kAllZeroProduct,
                "every label-aligned product is zero");
  }
  for (auto& e : out) e.prob /= total;
  return SemanticDistribution::FromSortedUnchecked(std::move(out));
}

}  // namespace

SemanticDistribution FuseUntruncated(const SemanticDistribution& q1,
                                     const SemanticDistribution& q2,
                                     const FusionConfig& cfg) {
  if (q1.SameLabelSet(q2)) {
    if (!cfg.bayes_on_equal_sets || q1.empty()) return q1;
    return MultiplyAndNormalize(q1.entries(), q2.entries());
  }
  const auto padded2 = PadWithMissing(q2, q1, cfg.alpha);
  const auto padded1 = PadWithMissing(q1, q2, cfg.alpha);
  return MultiplyAndNormalize(padded1, padded2);
}

SemanticDistribution Fuse(const SemanticDistribution& q1,
                          const SemanticDistribution& q2,
                          const FusionConfig& cfg) {
  SemanticDistribution fused = FuseUntruncated(q1, q2, cfg);
  if (fused.size() <= cfg.k_max) return fused;
  std::vector<LabelProb> entries = fused.entries();
  std::stable_sort(entries.begin(), entries.end(),
                   [](const LabelProb& a, const LabelProb& b) {
                     return a.prob > b.prob;
                   });
  entries.resize(cfg.k_max);
  std::sort(entries.begin(), entries.end(),
            [](const LabelProb& a, const LabelProb& b) {
              return a.label < b.label;
            });
  return SemanticDistribution::FromSortedUnchecked(std::move(entries));
}

std::optional<LabelProb> ArgmaxLabel(const SemanticDistribution& d) {
  std::optional<LabelProb> best;
  for (const LabelProb& e : d.entries()) {
    if (!best || e.prob > best->prob) best = e;
  }
  return best;
}

}  // namespace semmap
