#include "semmap/semantic.h"

#include <map>
#include <random>

#include "gtest/gtest.h"
#include "oracles.h"
#include "test_util.h"

namespace semmap {
namespace {

using testing::Dist;
using testing::OracleFuse;
using testing::RandomDistribution;

constexpr LabelId kChair = 0;
constexpr LabelId kTable = 1;

TEST(LabelTableTest, AddFindAndParse) {
  LabelTable t;
  EXPECT_EQ(t.Add("chair", {1, 2, 3}), 0);
  EXPECT_EQ(t.Add("table", {4, 5, 6}), 1);
  EXPECT_EQ(t.Find("table"), LabelId{1});
  EXPECT_FALSE(t.Find("sofa").has_value());
  EXPECT_SEMMAP_ERROR(t.Add("chair", {}), ErrorCode::kInvalidArgument);

  const LabelTable p =
      LabelTable::Parse("# comment\n0 chair 1 2 3\n1 table 4 5 6\n", "mem");
  EXPECT_EQ(p, t);
  EXPECT_SEMMAP_ERROR(LabelTable::Parse("1 chair 1 2 3\n", "mem"),
                      ErrorCode::kParseError);
  EXPECT_SEMMAP_ERROR(LabelTable::Parse("0 chair 1 2\n", "mem"),
                      ErrorCode::kParseError);
  EXPECT_SEMMAP_ERROR(LabelTable::Parse("0 chair 1 2 300\n", "mem"),
                      ErrorCode::kParseError);
  EXPECT_SEMMAP_ERROR(LabelTable::Parse("0 a 1 2 3\n1 a 1 2 3\n", "mem"),
                      ErrorCode::kParseError);
}

TEST(LabelTableTest, ParseErrorNamesLine) {
  try {
    LabelTable::Parse("0 chair 1 2 3\n1 table x 5 6\n", "labels.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("labels.txt:2"), std::string::npos)
        << e.what();
  }
}

TEST(LabelTableTest, SaveLoadRoundTrip) {
  testing::TempDir dir("labels");
  LabelTable t;
  t.Add("floor", {10, 20, 30});
  t.Add("dining_table", {1, 2, 3});
  EXPECT_SEMMAP_ERROR(t.Add("dining table", {}), ErrorCode::kInvalidArgument);
  t.Save(dir / "labels.txt");
  EXPECT_EQ(LabelTable::Load(dir / "labels.txt"), t);
}

TEST(ResidualMassTest, Examples) {
  EXPECT_EQ(ResidualMass(SemanticDistribution()), 1.0);
  EXPECT_NEAR(ResidualMass(Dist({{kChair, 0.6}})), 0.4, 1e-15);
  EXPECT_NEAR(ResidualMass(Dist({{kChair, 0.5}, {kTable, 0.3}})), 0.2, 1e-15);
  EXPECT_EQ(ResidualMass(Dist({{kChair, 1.0}})), 0.0);
}

TEST(FromPixelTest, Examples) {
  const auto d = Dist({{kChair, 0.7}});
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.entries()[0], (LabelProb{kChair, 0.7}));

  const auto s = Dist({{kTable, 0.3}, {kChair, 0.5}});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.entries()[0], (LabelProb{kChair, 0.5}));
  EXPECT_EQ(s.entries()[1], (LabelProb{kTable, 0.3}));

  EXPECT_SEMMAP_ERROR(Dist({{kChair, 0.6}, {kChair, 0.2}}),
                      ErrorCode::kDuplicateLabel);
}

TEST(FromPixelTest, Bounds) {
  EXPECT_SEMMAP_ERROR(Dist({{kChair, 0.7}, {kTable, 0.5}}),
                      ErrorCode::kProbabilityOverflow);
  EXPECT_SEMMAP_ERROR(Dist({{kChair, -0.1}}),
                      ErrorCode::kProbabilityOutOfRange);
  EXPECT_SEMMAP_ERROR(Dist({{kChair, 1.5}}),
                      ErrorCode::kProbabilityOutOfRange);
  // Float noise just above one is tolerated and rescaled.
  const auto d = Dist({{kChair, 0.5}, {kTable, 0.5 + 5e-7}});
  EXPECT_NEAR(d.Sum(), 1.0, 1e-15);
  EXPECT_TRUE(d.IsValid());
}

TEST(FuseTest, EqualSetsReturnFirst) {
  const FusionConfig cfg;
  const auto q = Dist({{kChair, 0.6}});
  EXPECT_EQ(Fuse(q, q, cfg), q);
  const auto q2 = Dist({{kChair, 0.9}});
  EXPECT_EQ(Fuse(q, q2, cfg), q);
}

TEST(FuseTest, PadsFirstOperand) {
  FusionConfig cfg;
  cfg.alpha = 0.5;
  const auto r = Fuse(Dist({{kChair, 0.6}}),
                      Dist({{kChair, 0.5}, {kTable, 0.3}}), cfg);
  ASSERT_EQ(r.size(), 2u);
  // q1 padded with table at 0.5 * 0.4 = 0.2; products 0.30 and 0.06.
  EXPECT_NEAR(*r.ProbOf(kChair), 0.30 / 0.36, 1e-9);
  EXPECT_NEAR(*r.ProbOf(kTable), 0.06 / 0.36, 1e-9);
  EXPECT_NEAR(*r.ProbOf(kChair), 0.8333333333333334, 1e-9);
}

TEST(FuseTest, SequentialResidualUpdate) {
  FusionConfig cfg;
  cfg.alpha = 0.5;
  const LabelId a = 0, b = 1, c = 2;
  const auto r = Fuse(Dist({{a, 0.5}}), Dist({{b, 0.4}, {c, 0.4}}), cfg);
  // q2 gets a at 0.1; q1 gets b at 0.25 and then c at 0.125.
  EXPECT_NEAR(*r.ProbOf(a), 0.05 / 0.20, 1e-9);
  EXPECT_NEAR(*r.ProbOf(b), 0.10 / 0.20, 1e-9);
  EXPECT_NEAR(*r.ProbOf(c), 0.05 / 0.20, 1e-9);
}

TEST(FuseTest, BayesOnEqualSetsFlag) {
  FusionConfig cfg;
  cfg.bayes_on_equal_sets = true;
  const auto r = Fuse(Dist({{kChair, 0.6}, {kTable, 0.2}}),
                      Dist({{kChair, 0.5}, {kTable, 0.5}}), cfg);
  EXPECT_NEAR(*r.ProbOf(kChair), 0.30 / 0.40, 1e-12);
  EXPECT_NEAR(*r.ProbOf(kTable), 0.10 / 0.40, 1e-12);
}

TEST(FuseTest, AllZeroProduct) {
  const FusionConfig cfg;
  // Both sides certain about different classes: padding mass is zero.
  EXPECT_SEMMAP_ERROR(Fuse(Dist({{kChair, 1.0}}), Dist({{kTable, 1.0}}), cfg),
                      ErrorCode::kAllZeroProduct);
}

TEST(FuseTest, TruncatesWithoutRenormalizing) {
  FusionConfig cfg;
  cfg.k_max = 2;
  const auto q1 = Dist({{0, 0.3}, {1, 0.3}});
  const auto q2 = Dist({{2, 0.3}, {3, 0.2}});
  const auto full = FuseUntruncated(q1, q2, cfg);
  const auto cut = Fuse(q1, q2, cfg);
  ASSERT_EQ(full.size(), 4u);
  ASSERT_EQ(cut.size(), 2u);
  EXPECT_NEAR(full.Sum(), 1.0, 1e-12);
  EXPECT_LT(cut.Sum(), 1.0);
  // The two largest survive, ids ascending.
  std::vector<LabelProb> sorted = full.entries();
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const LabelProb& x, const LabelProb& y) {
                     return x.prob > y.prob;
                   });
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(*cut.ProbOf(sorted[i].label), sorted[i].prob);
  }
}

TEST(FuseTest, TruncationTieKeepsLowerId) {
  FusionConfig cfg;
  cfg.k_max = 1;
  const auto r = Fuse(Dist({{3, 0.5}}), Dist({{1, 0.5}}), cfg);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r.entries()[0].label, 1);
}

TEST(FuseTest, ConfigValidation) {
  FusionConfig cfg;
  cfg.alpha = 0.0;
  EXPECT_SEMMAP_ERROR(cfg.Validate(), ErrorCode::kInvalidArgument);
  cfg.alpha = 1.0;
  cfg.Validate();
  cfg.k_max = 0;
  EXPECT_SEMMAP_ERROR(cfg.Validate(), ErrorCode::kInvalidArgument);
}

TEST(FuseProperties, MatchesOracleSumsToOneAndCommutes) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> alpha(0.05, 1.0);
  int checked = 0;
  for (int i = 0; i < 5000; ++i) {
    FusionConfig cfg;
    cfg.alpha = alpha(rng);
    const auto q1 = RandomDistribution(rng, 8, 5);
    const auto q2 = RandomDistribution(rng, 8, 5);
    if (q1.SameLabelSet(q2)) continue;
    SemanticDistribution f12, f21;
    try {
      f12 = FuseUntruncated(q1, q2, cfg);
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::kAllZeroProduct);
      continue;
    }
    f21 = FuseUntruncated(q2, q1, cfg);
    ++checked;
    EXPECT_NEAR(f12.Sum(), 1.0, 1e-9);
    EXPECT_TRUE(f12.IsValid());
    const auto oracle = OracleFuse(q1, q2, cfg.alpha);
    ASSERT_EQ(f12.size(), oracle.size());
    ASSERT_EQ(f21.size(), f12.size());
    for (std::size_t j = 0; j < f12.size(); ++j) {
      const auto& e = f12.entries()[j];
      EXPECT_NEAR(e.prob, oracle.at(e.label), 1e-12);
      EXPECT_EQ(f21.entries()[j].label, e.label);
      EXPECT_NEAR(f21.entries()[j].prob, e.prob, 1e-12);
      // Monotone support: both padded factors are positive here.
      EXPECT_GT(e.prob, 0.0);
    }
    const auto cut = Fuse(q1, q2, cfg);
    EXPECT_LE(cut.size(), cfg.k_max);
    EXPECT_TRUE(cut.IsValid());
  }
  EXPECT_GT(checked, 4000);
}

TEST(FuseProperties, Idempotent) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 1000; ++i) {
    const auto q = RandomDistribution(rng, 10, 5);
    EXPECT_EQ(Fuse(q, q, FusionConfig()), q);
  }
}

TEST(ArgmaxTest, Examples) {
  EXPECT_EQ(*ArgmaxLabel(Dist({{kChair, 0.8}, {kTable, 0.2}})),
            (LabelProb{kChair, 0.8}));
  EXPECT_FALSE(ArgmaxLabel(SemanticDistribution()).has_value());
  EXPECT_EQ(*ArgmaxLabel(Dist({{4, 0.5}, {2, 0.5}})), (LabelProb{2, 0.5}));
}

TEST(ArgmaxTest, ScaleInvariant) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> s(0.01, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const auto q = RandomDistribution(rng, 10, 5);
    const double f = s(rng);
    std::vector<LabelProb> scaled = q.entries();
    for (auto& e : scaled) e.prob *= f;
    EXPECT_EQ(ArgmaxLabel(Dist(scaled))->label, ArgmaxLabel(q)->label);
  }
}

}  // namespace
}  // namespace semmap
