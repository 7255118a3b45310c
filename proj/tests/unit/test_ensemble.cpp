#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "cbound/ensemble.hpp"

using namespace cbound;

namespace {

VoterPtr constant(const OutputSpace& s, std::vector<double> out) { return std::make_shared<ConstantVoter>(s, std::move(out)); }

LabeledDataset one_point(const OutputSpace& s, Label y) { return LabeledDataset(s, 1, {0.0}, {std::move(y)}); }

}  // namespace

TEST(Ensemble, SingleVoterAggregateIsItsOutput) {
  const auto s = OutputSpace::multiclass(3);
  const WeightedEnsemble e(s, {constant(s, {0.2, 0.3, 0.5})}, {1.0});
  EXPECT_EQ(aggregate(e, std::vector<double>{0.0}), (std::vector<double>{0.2, 0.3, 0.5}));
}

TEST(Ensemble, MidpointOfTwoVoters) {
  const auto s = OutputSpace::multiclass(3);
  const WeightedEnsemble e(s, {constant(s, {1, 0, 0}), constant(s, {0, 1, 0})}, {0.5, 0.5});
  EXPECT_EQ(aggregate(e, std::vector<double>{0.0}), (std::vector<double>{0.5, 0.5, 0.0}));
}

TEST(Ensemble, WeightedSumOfThreeVoters) {
  const auto s = OutputSpace::multiclass(3);
  const WeightedEnsemble e(s, {constant(s, {1, 0, 0}), constant(s, {0, 1, 0}), constant(s, {0.2, 0.2, 0.6})}, {0.2, 0.3, 0.5});
  const auto g = aggregate(e, std::vector<double>{0.0});
  EXPECT_NEAR(g[0], 0.3, 1e-15);
  EXPECT_NEAR(g[1], 0.4, 1e-15);
  EXPECT_NEAR(g[2], 0.3, 1e-15);
}

TEST(Ensemble, RejectsInvalidWeightsAndVoters) {
  const auto s = OutputSpace::multiclass(3);
  const auto v = constant(s, {1, 0, 0});
  EXPECT_THROW(WeightedEnsemble(s, {v}, {0.9}), Error);
  EXPECT_THROW(WeightedEnsemble(s, {v, v}, {1.5, -0.5}), Error);
  EXPECT_THROW(WeightedEnsemble(s, {v}, {1.0, 0.0}), Error);
  EXPECT_THROW(WeightedEnsemble(s, {}, {}), Error);
  EXPECT_THROW(WeightedEnsemble(OutputSpace::multiclass(4), {v}, {1.0}), Error);
  EXPECT_THROW(ConstantVoter(s, {0.7, 0.7, -0.4}), Error);
}

TEST(Ensemble, CorruptVoterOutputIsDetected) {
  const auto s = OutputSpace::multiclass(3);
  auto bad = std::make_shared<TableVoter>(s, std::vector<std::vector<double>>{{0.9, 0.9, 0.9}}, 0, false);
  const WeightedEnsemble e(s, {bad}, {1.0});
  try {
    aggregate(e, std::vector<double>{0.0});
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.category(), ErrorCategory::CorruptVoter);
  }
}

TEST(Ensemble, PredictArgmaxAndTies) {
  const auto s3 = OutputSpace::multiclass(3);
  EXPECT_EQ(decode(s3, std::vector<double>{0.5, 0.3, 0.2}), Label::cls(0));
  EXPECT_EQ(decode(s3, std::vector<double>{0.2, 0.3, 0.5}), Label::cls(2));
  EXPECT_EQ(decode(OutputSpace::multiclass(2), std::vector<double>{0.5, 0.5}), Label::cls(0));
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_EQ(decode(OutputSpace::multilabel(2), std::vector<double>{r, r}), Label::multilabel({1, 1}));
  EXPECT_EQ(decode(OutputSpace::multilabel(2), std::vector<double>{-0.1, 0.0}), Label::multilabel({0, 0}));
  EXPECT_EQ(decode(OutputSpace::binary(), std::vector<double>{0.0}), Label::binary(-1));
  EXPECT_EQ(decode(OutputSpace::binary(), std::vector<double>{0.2}), Label::binary(1));
}

TEST(Ensemble, RiskOfPerfectEnsembleIsZero) {
  const auto s = OutputSpace::multiclass(3);
  const WeightedEnsemble e(s, {constant(s, {0, 1, 0})}, {1.0});
  const auto d = one_point(s, Label::cls(1));
  EXPECT_EQ(risk(e, d, RiskRule::MarginRule), 0.0);
  EXPECT_EQ(risk(e, d, RiskRule::PredictRule), 0.0);
}

TEST(Ensemble, TiesAreMarginRuleErrors) {
  const auto s = OutputSpace::multiclass(2);
  const WeightedEnsemble e(s, {constant(s, {0.5, 0.5})}, {1.0});
  const LabeledDataset d(s, 1, {0.0, 1.0}, {Label::cls(0), Label::cls(1)});
  EXPECT_EQ(risk(e, d, RiskRule::MarginRule), 1.0);
  EXPECT_EQ(risk(e, d, RiskRule::PredictRule), 0.5);
}

TEST(Ensemble, RiskRulesAgreeWithoutTies) {
  const auto s = OutputSpace::multiclass(4);
  std::vector<std::vector<double>> a, b;
  std::vector<double> f;
  std::vector<Label> labels;
  for (std::size_t i = 0; i < 20; ++i) {
    std::vector<double> ra(4, 0.0), rb(4, 0.0);
    ra[i % 4] = 1.0;
    rb[(i * 7 + 1) % 4] = 0.6;
    rb[(i * 3 + 2) % 4] += 0.4;
    a.push_back(ra);
    b.push_back(rb);
    f.push_back(static_cast<double>(i));
    labels.push_back(Label::cls((i * 5) % 4));
  }
  const WeightedEnsemble e(s, {std::make_shared<TableVoter>(s, a), std::make_shared<TableVoter>(s, b)}, {0.55, 0.45});
  const LabeledDataset d(s, 1, f, labels);
  std::size_t errors = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto g = aggregate(e, d.row(i));
    std::size_t best = 0;
    for (std::size_t c = 1; c < 4; ++c) {
      if (g[c] > g[best]) best = c;
    }
    ASSERT_NE(std::count(g.begin(), g.end(), g[best]), 2);
    errors += best != labels[i].index();
  }
  EXPECT_DOUBLE_EQ(risk(e, d, RiskRule::MarginRule), static_cast<double>(errors) / 20.0);
  EXPECT_DOUBLE_EQ(risk(e, d, RiskRule::PredictRule), static_cast<double>(errors) / 20.0);
}

TEST(Ensemble, GibbsRisk) {
  const auto s = OutputSpace::multiclass(2);
  const auto right = constant(s, {1, 0}), wrong = constant(s, {0, 1});
  const LabeledDataset d(s, 1, {0.0, 1.0, 2.0}, {Label::cls(0), Label::cls(0), Label::cls(0)});
  EXPECT_EQ(gibbs_risk(WeightedEnsemble(s, {right}, {1.0}), d), 0.0);
  EXPECT_DOUBLE_EQ(gibbs_risk(WeightedEnsemble(s, {right, wrong}, {0.5, 0.5}), d), 0.5);
  EXPECT_DOUBLE_EQ(gibbs_risk(WeightedEnsemble(s, {right, wrong}, {0.25, 0.75}), d), 0.75);
}

TEST(Ensemble, EmptyDatasetIsRejected) {
  const auto s = OutputSpace::multiclass(2);
  try {
    LabeledDataset(s, 1, {}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::EmptyDataset);
  }
}

TEST(Ensemble, DimensionMismatchIsDetected) {
  const auto s = OutputSpace::multiclass(3);
  const WeightedEnsemble e(s, {std::make_shared<TableVoter>(s, std::vector<std::vector<double>>{{1, 0, 0}}, 2)}, {1.0});
  const LabeledDataset d(s, 1, {0.0}, {Label::cls(0)});
  EXPECT_THROW(aggregate_all(e, d), Error);
}

TEST(Ensemble, NormalizedWeights) {
  const auto w = normalized({1.0, 3.0});
  EXPECT_DOUBLE_EQ(w[0], 0.25);
  EXPECT_DOUBLE_EQ(w[1], 0.75);
  EXPECT_THROW(normalized({0.0, 0.0}), Error);
}
