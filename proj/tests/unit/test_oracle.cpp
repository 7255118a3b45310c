#include <gtest/gtest.h>

#include <cmath>

#include "cbound/oracle.hpp"

using namespace cbound;
using namespace cbound::oracle;

namespace {

VoterPtr table(const OutputSpace& s, std::vector<std::vector<double>> rows) {
  return std::make_shared<TableVoter>(s, std::move(rows));
}

}  // namespace

TEST(FiniteDistribution, Validation) {
  const auto s = OutputSpace::multiclass(2);
  EXPECT_THROW(FiniteDistribution(s, {}), Error);
  EXPECT_THROW(FiniteDistribution(s, {{{0.0}, Label::cls(0), 0.5}}), Error);
  EXPECT_THROW(FiniteDistribution(s, {{{0.0}, Label::cls(0), 1.5}, {{1.0}, Label::cls(1), -0.5}}), Error);
  EXPECT_THROW(FiniteDistribution(s, {{{0.0}, Label::cls(2), 1.0}}), Error);
  EXPECT_NO_THROW(FiniteDistribution(s, {{{0.0}, Label::cls(0), 0.25}, {{1.0}, Label::cls(1), 0.75}}));
}

TEST(Exact, SingleCorrectAtom) {
  const auto s = OutputSpace::multiclass(3);
  const WeightedEnsemble e(s, {table(s, {{0.6, 0.3, 0.1}})}, {1.0});
  const FiniteDistribution d(s, {{{0.0}, Label::cls(0), 1.0}});
  const auto q = exact_quantities(e, d);
  EXPECT_EQ(q.risk, 0.0);
  EXPECT_NEAR(q.mu1, 0.3, 1e-15);
  EXPECT_NEAR(q.mu2, 0.09, 1e-15);
}

TEST(Exact, SymmetricAtoms) {
  const auto s = OutputSpace::multiclass(2);
  const WeightedEnsemble e(s, {table(s, {{0.8, 0.2}, {0.8, 0.2}})}, {1.0});
  const FiniteDistribution d(s, {{{0.0}, Label::cls(0), 0.5}, {{1.0}, Label::cls(1), 0.5}});
  const auto q = exact_quantities(e, d);
  EXPECT_NEAR(q.mu1, 0.0, 1e-15);
  EXPECT_NEAR(q.mu2, 0.36, 1e-15);
  EXPECT_EQ(q.risk, 0.5);
}

TEST(Exact, SixAtomMulticlassHandSums) {
  // Margins per atom: 0.4, -0.2, 0.6, 0.0, 0.4, -0.4 with the probabilities below.
  const auto s = OutputSpace::multiclass(3);
  const WeightedEnsemble e(s, {table(s, {{0.6, 0.2, 0.2}, {0.3, 0.5, 0.2}, {0.0, 0.8, 0.2}, {0.4, 0.4, 0.2}, {0.2, 0.2, 0.6}, {0.6, 0.2, 0.2}})},
                           {1.0});
  const double p[6] = {0.1, 0.2, 0.15, 0.25, 0.2, 0.1};
  const std::size_t y[6] = {0, 0, 1, 0, 2, 2};
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < 6; ++i) atoms.push_back({{static_cast<double>(i)}, Label::cls(y[i]), p[i]});
  const FiniteDistribution d(s, atoms);
  const auto q = exact_quantities(e, d, {0.5});
  const double m[6] = {0.4, -0.2, 0.6, 0.0, 0.4, -0.4};
  const double gy[6] = {0.6, 0.3, 0.8, 0.4, 0.6, 0.2};
  double mu1 = 0, mu2 = 0, risk = 0, w1 = 0, w2 = 0;
  for (int i = 0; i < 6; ++i) {
    mu1 += p[i] * m[i];
    mu2 += p[i] * m[i] * m[i];
    risk += m[i] <= 0 ? p[i] : 0.0;
    w1 += p[i] * (gy[i] - 0.5);
    w2 += p[i] * (gy[i] - 0.5) * (gy[i] - 0.5);
  }
  EXPECT_NEAR(q.mu1, mu1, 1e-15);
  EXPECT_NEAR(q.mu2, mu2, 1e-15);
  EXPECT_NEAR(q.risk, risk, 1e-15);
  EXPECT_NEAR(q.omega_mu1[0], w1, 1e-15);
  EXPECT_NEAR(q.omega_mu2[0], w2, 1e-15);
  EXPECT_NEAR(q.mu1, 0.13, 1e-15);
  EXPECT_NEAR(q.risk, 0.55, 1e-15);
}

TEST(Exact, AgreesWithEmpiricalMoments) {
  const auto r = moment_agreement_suite(100, 5);
  EXPECT_EQ(r.violations, 0u) << r.first_violation;
}

TEST(Sandwich, DeterministicCorrectEnsemble) {
  const auto s = OutputSpace::multiclass(4);
  const WeightedEnsemble e(s, {table(s, {{1, 0, 0, 0}, {0, 0, 1, 0}})}, {1.0});
  const FiniteDistribution d(s, {{{0.0}, Label::cls(0), 0.5}, {{1.0}, Label::cls(2), 0.5}});
  const auto v = check_sandwich(e, d);
  EXPECT_EQ(v.lower, 0.0);
  EXPECT_EQ(v.risk, 0.0);
  EXPECT_EQ(v.upper, 0.0);
  EXPECT_TRUE(v.holds);
}

TEST(Sandwich, BinaryIsUnsupported) {
  const auto s = OutputSpace::binary();
  const WeightedEnsemble e(s, {table(s, {{1.0}})}, {1.0});
  const FiniteDistribution d(s, {{{0.0}, Label::binary(1), 1.0}});
  try {
    check_sandwich(e, d);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.category(), ErrorCategory::Unsupported);
  }
}

TEST(Sandwich, RandomSuitesHaveNoViolations) {
  EXPECT_EQ(sandwich_suite(SpaceKind::Multiclass, 100, 3).violations, 0u);
  EXPECT_EQ(sandwich_suite(SpaceKind::Multilabel, 100, 4).violations, 0u);
}

TEST(ChangeOfMeasure, ZeroPhi) {
  const auto v = check_change_of_measure(2, {0.9, 0.1}, {0.5, 0.5}, {0, 0, 0, 0});
  EXPECT_TRUE(v.holds);
  EXPECT_NEAR(v.lhs, 0.0, 1e-15);
  EXPECT_LT(v.rhs, 0.0);
}

TEST(ChangeOfMeasure, JensenWhenRhoEqualsPi) {
  const std::vector<double> p{0.2, 0.3, 0.5};
  const std::vector<double> phi{1, -2, 0.5, 3, 0, -1, 2, 2, -0.5};
  const auto v = check_change_of_measure(3, p, p, phi);
  EXPECT_EQ(v.kl, 0.0);
  EXPECT_TRUE(v.holds);
  EXPECT_GE(v.lhs, v.rhs);
}

TEST(ChangeOfMeasure, InfiniteKlIsFlagged) {
  const auto v = check_change_of_measure(2, {0.5, 0.5}, {1.0, 0.0}, {1, 2, 3, 4});
  EXPECT_TRUE(v.kl_infinite);
  EXPECT_TRUE(v.holds);
}

TEST(ChangeOfMeasure, LargePhiDoesNotOverflow) {
  const auto v = check_change_of_measure(2, {0.5, 0.5}, {0.5, 0.5}, {800, 800, 800, 800});
  EXPECT_NEAR(v.lhs, 800.0, 1e-12);
  EXPECT_TRUE(v.holds);
}

TEST(ChangeOfMeasure, InputValidation) {
  EXPECT_THROW(check_change_of_measure(2, {1.0}, {0.5, 0.5}, {0, 0, 0, 0}), Error);
  EXPECT_THROW(check_change_of_measure(1, {1.0}, {1.0}, {std::nan("")}), Error);
}

TEST(Pac, SimplexGrid) {
  const auto g = simplex_grid(3, 0.1);
  EXPECT_EQ(g.size(), 66u);
  for (const auto& r : g) {
    double s = 0;
    for (double v : r) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Pac, DeltaOneCanStillBeChecked) {
  auto [d, voters] = pac_reference_problem();
  const std::vector<double> pi(3, 1.0 / 3.0);
  PacTrialConfig cfg;
  cfg.trials = 100;
  cfg.delta = 1.0;
  cfg.seed = 3;
  const auto r = pac_validity_trial(d, voters, pi, cfg);
  EXPECT_EQ(r.trials, 100u);
  EXPECT_LE(r.frequency, 1.0);
}

TEST(Pac, TinySampleGivesVacuousBoundAndNoViolations) {
  auto [d, voters] = pac_reference_problem();
  const std::vector<double> pi(3, 1.0 / 3.0);
  PacTrialConfig cfg;
  cfg.m = 5;
  cfg.trials = 100;
  cfg.seed = 4;
  const auto r = pac_validity_trial(d, voters, pi, cfg);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_EQ(r.skipped, 100u);
}

TEST(Pac, SinglePosteriorAtPrior) {
  PacTrialConfig cfg;
  cfg.trials = 200;
  cfg.grid = false;
  cfg.seed = 5;
  const auto r = pac_suite(cfg);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.detail["posteriors_per_trial"], 1);
}

TEST(Suites, BinaryEquivalenceSmall) {
  const auto r = binary_equivalence_suite(50, 1);
  EXPECT_EQ(r.violations, 0u) << r.first_violation;
}

TEST(Suites, CBoundValiditySmall) {
  const auto r = cbound_validity_suite(100, 2);
  EXPECT_EQ(r.violations, 0u) << r.first_violation;
  EXPECT_EQ(r.instances, 100u);
}

TEST(Suites, ChangeOfMeasureSmall) { EXPECT_EQ(change_of_measure_suite(300, 7).violations, 0u); }

TEST(Suites, MarginOrderingCountsEachClaim) {
  const auto r = margin_ordering_suite(2000, 9);
  EXPECT_EQ(r.detail["violations_M0_ge_M"], 0);
  EXPECT_EQ(r.detail["violations_M_ge_M1"], 0);
  EXPECT_EQ(r.detail["violations_Mhalf_pos_implies_M_pos"], 0);
  EXPECT_EQ(r.detail["library_margin_mismatches"], 0);
  // The pointwise multiclass claim M >= M_{1/2} has counterexamples.
  EXPECT_GT(r.detail["violations_M_ge_Mhalf_multiclass"].get<std::size_t>(), 0u);
}
