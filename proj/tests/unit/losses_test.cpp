#include "objconf/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "objconf/detail/loss_kernels.hpp"

namespace objconf {
namespace {

using enum SampleLabel;
constexpr double kLn2 = std::numbers::ln2;

double logit(double p) { return std::log(p / (1.0 - p)); }

TEST(Sigmoid, KnownValues) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(std::log(3.0)), 0.75, 1e-15);
  for (double z : {-30.0, -2.5, 0.1, 4.0, 17.0}) EXPECT_NEAR(sigmoid(-z), 1.0 - sigmoid(z), 1e-15);
}

TEST(Sigmoid, StableAtExtremes) {
  EXPECT_EQ(sigmoid(500.0), 1.0);
  EXPECT_GT(sigmoid(-500.0), 0.0);
  EXPECT_TRUE(std::isfinite(sigmoid(-500.0)));
  EXPECT_LT(sigmoid(-500.0), 1e-200);
}

TEST(FocalLoss, ConfidentPositiveApproachesZero) {
  const std::vector<double> z{20.0};
  const std::vector<SampleLabel> l{Positive};
  EXPECT_LT(focal_loss(z, l, 1), 1e-15);
}

TEST(FocalLoss, SingleNegativeAtHalf) {
  // alpha_t = 0.75, p_t = 0.5: 0.75 * 0.5^2 * ln 2.
  const std::vector<double> z{0.0};
  const std::vector<SampleLabel> l{Negative};
  EXPECT_NEAR(focal_loss(z, l, 1), 0.1875 * kLn2, 1e-15);
}

TEST(FocalLoss, GammaZeroHalfAlphaIsHalfCrossEntropy) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> uz(-8.0, 8.0);
  std::vector<double> z(50);
  std::vector<SampleLabel> l(50);
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = uz(rng);
    l[i] = (i % 3 == 0) ? Positive : Negative;
  }
  double ce = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-z[i]));
    ce += l[i] == Positive ? -std::log(p) : -std::log(1.0 - p);
  }
  const std::size_t n_pos = 17;
  EXPECT_NEAR(focal_loss(z, l, n_pos, {0.5, 0.0}), 0.5 * ce / n_pos, 1e-12);
}

TEST(FocalLoss, IgnoreContributesNothing) {
  const std::vector<double> z{0.3, -1.0, 2.0};
  const std::vector<SampleLabel> with_ignore{Positive, Ignore, Negative};
  const std::vector<double> z2{0.3, 2.0};
  const std::vector<SampleLabel> without{Positive, Negative};
  EXPECT_EQ(focal_loss(z, with_ignore, 1), focal_loss(z2, without, 1));
  EXPECT_EQ(focal_loss_grad(z, with_ignore, 1)[1], 0.0);
}

TEST(FocalLoss, Errors) {
  const std::vector<double> z{0.0};
  const std::vector<SampleLabel> l{Negative};
  EXPECT_THROW(focal_loss(z, l, 0), std::domain_error);
  EXPECT_THROW(focal_loss(z, std::vector<SampleLabel>{}, 1), std::invalid_argument);
  EXPECT_THROW(focal_loss(z, l, 1, {1.5, 2.0}), std::invalid_argument);
}

TEST(FocalLoss, ClampKeepsLossFinite) {
  const std::vector<double> z{-400.0, 400.0};
  const std::vector<SampleLabel> l{Positive, Negative};
  const double v = focal_loss(z, l, 1);
  EXPECT_TRUE(std::isfinite(v));
  // Both samples sit at the clamp: alpha_t * (1 - 1e-12)^2 * -ln(1e-12).
  EXPECT_NEAR(v, (0.25 + 0.75) * -std::log(1e-12), 1e-9);
}

TEST(L1Localization, Values) {
  const std::vector<BoxDelta> zero{{0.1, 0.2, 0.3, 0.4}};
  EXPECT_EQ(l1_localization_loss(zero, zero, 1), 0.0);
  const std::vector<BoxDelta> pred{{0.1, -0.2, 0.0, 0.3}};
  const std::vector<BoxDelta> target{{0.0, 0.0, 0.0, 0.0}};
  EXPECT_NEAR(l1_localization_loss(pred, target, 1), 0.6, 1e-15);
  const std::vector<BoxDelta> doubled{{0.2, -0.4, 0.0, 0.6}};
  EXPECT_NEAR(l1_localization_loss(doubled, target, 1), 1.2, 1e-15);
}

TEST(L1Localization, GradientIsSignOverNpos) {
  const std::vector<BoxDelta> pred{{0.1, -0.2, 0.0, 0.3}};
  const std::vector<BoxDelta> target{{0.0, 0.0, 0.0, 0.0}};
  const auto g = l1_localization_grad(pred, target, 2);
  EXPECT_EQ(g[0], (BoxDelta{0.5, -0.5, 0.0, 0.5}));
}

TEST(L1Localization, LengthMismatch) {
  const std::vector<BoxDelta> one(1), two(2);
  EXPECT_THROW(l1_localization_loss(one, two, 1), std::invalid_argument);
  EXPECT_THROW(l1_localization_loss(one, one, 0), std::domain_error);
}

TEST(CeConfidence, MinimisedAtTarget) {
  const std::vector<double> y{0.3, 0.8, 0.55};
  std::vector<double> z;
  double entropy = 0.0;
  for (double t : y) {
    z.push_back(logit(t));
    entropy += -(t * std::log(t) + (1 - t) * std::log(1 - t));
  }
  const std::vector<SampleLabel> l(3, Positive);
  EXPECT_NEAR(ce_confidence_loss(z, y, l, 1), entropy, 1e-12);
  for (double dz : {-0.1, 0.1}) {
    std::vector<double> moved = z;
    moved[1] += dz;
    EXPECT_GT(ce_confidence_loss(moved, y, l, 1), entropy);
  }
}

TEST(CeConfidence, SinglePositiveAtHalf) {
  EXPECT_NEAR(ce_confidence_loss(std::vector{0.0}, std::vector{1.0}, std::vector{Positive}, 1), kLn2, 1e-15);
}

TEST(CeConfidence, MaskedNegativesAreIgnored) {
  const std::vector<double> z{0.3, -2.0, 1.2, 4.0};
  const std::vector<double> y{0.7, 0.0, 0.9, 0.0};
  const std::vector<SampleLabel> l{Positive, Negative, Positive, Negative};
  const std::vector<double> zp{0.3, 1.2};
  const std::vector<double> yp{0.7, 0.9};
  const std::vector<SampleLabel> lp{Positive, Positive};
  EXPECT_EQ(ce_confidence_loss(z, y, l, 2), ce_confidence_loss(zp, yp, lp, 2));
}

TEST(CeConfidence, RejectsTargetsOutsideUnitInterval) {
  EXPECT_THROW(ce_confidence_loss(std::vector{0.0}, std::vector{1.2}, std::vector{Positive}, 1),
               std::invalid_argument);
  EXPECT_THROW(ce_confidence_loss(std::vector{0.0}, std::vector{0.5}, std::vector{Positive}, 0),
               std::domain_error);
}

TEST(WeightedCe, ZeroWeightEqualsPositivesOnly) {
  const std::vector<double> z{0.3, -2.0, 1.2, 4.0};
  const std::vector<double> y{0.7, 0.0, 0.9, 0.0};
  const std::vector<SampleLabel> l{Positive, Negative, Positive, Negative};
  EXPECT_EQ(weighted_ce_confidence_loss(z, y, l, 0.0, 2), ce_confidence_loss(z, y, l, 2));
}

TEST(WeightedCe, UnitWeightIsPlainCeOverAllSamples) {
  const std::vector<double> z{0.3, -2.0, 1.2, 4.0};
  const std::vector<double> y{0.7, 0.0, 0.9, 0.0};
  const std::vector<SampleLabel> l{Positive, Negative, Positive, Negative};
  const std::vector<SampleLabel> all_pos(4, Positive);
  EXPECT_NEAR(weighted_ce_confidence_loss(z, y, l, 1.0, 2), ce_confidence_loss(z, y, all_pos, 2), 1e-15);
}

TEST(WeightedCe, TinyWeightManyNegatives) {
  // ln2 + 1e-4 * 10000 * ln2.
  std::vector<double> z(10001, 0.0);
  std::vector<double> y(10001, 0.0);
  std::vector<SampleLabel> l(10001, Negative);
  y[0] = 1.0;
  l[0] = Positive;
  EXPECT_NEAR(weighted_ce_confidence_loss(z, y, l, 0.0001, 1), 2.0 * kLn2, 1e-12);
}

TEST(GFocal, ZeroAtTarget) {
  const std::vector<double> y{0.2, 0.65, 0.9};
  std::vector<double> z;
  for (double t : y) z.push_back(logit(t));
  EXPECT_NEAR(gfocal_loss(z, y, std::vector<SampleLabel>(3, Positive), 3), 0.0, 1e-12);
}

TEST(GFocal, BetaZeroEqualsCe) {
  const std::vector<double> z{0.3, -2.0, 1.2};
  const std::vector<double> y{0.7, 0.1, 0.9};
  const std::vector<SampleLabel> l(3, Positive);
  EXPECT_EQ(gfocal_loss(z, y, l, 3, 0.0), ce_confidence_loss(z, y, l, 3));
}

TEST(GFocal, KnownValue) {
  // |1 - 0.5|^2 * ln 2.
  EXPECT_NEAR(gfocal_loss(std::vector{0.0}, std::vector{1.0}, std::vector{Positive}, 1, 2.0), 0.25 * kLn2,
              1e-15);
}

TEST(GFocal, NonNegativeAndZeroOnlyAtTarget) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> uz(-6.0, 6.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::vector<double> z{uz(rng), uz(rng)};
    const std::vector<double> y{u(rng), u(rng)};
    const double v = gfocal_loss(z, y, std::vector<SampleLabel>(2, Positive), 2);
    ASSERT_GE(v, 0.0);
    const bool at_target = std::abs(sigmoid(z[0]) - y[0]) < 1e-9 && std::abs(sigmoid(z[1]) - y[1]) < 1e-9;
    if (!at_target) {
      ASSERT_GT(v, 0.0);
    }
  }
}

TEST(ConfidenceFamily, DispatchMatchesNamedFunctions) {
  const std::vector<double> z{0.3, -2.0, 1.2, 4.0};
  const std::vector<double> y{0.7, 0.0, 0.9, 0.0};
  const std::vector<SampleLabel> l{Positive, Negative, Positive, Ignore};
  EXPECT_EQ(confidence_loss(ConfLoss::ce(), z, y, l, 2), ce_confidence_loss(z, y, l, 2));
  EXPECT_EQ(confidence_loss(ConfLoss::gfocal(2.0), z, y, l, 2), gfocal_loss(z, y, l, 2, 2.0));
  EXPECT_EQ(confidence_loss(ConfLoss::weighted_ce(0.01), z, y, l, 2),
            weighted_ce_confidence_loss(z, y, l, 0.01, 2));
  // Residuals never exceed 1, so threshold-1 smooth L1 coincides with L2.
  EXPECT_NEAR(confidence_loss(ConfLoss::smooth_l1(), z, y, l, 2), confidence_loss(ConfLoss::l2(), z, y, l, 2),
              1e-15);
  const double l1 = (std::abs(sigmoid(0.3) - 0.7) + std::abs(sigmoid(1.2) - 0.9)) / 2.0;
  EXPECT_NEAR(confidence_loss(ConfLoss::l1(), z, y, l, 2), l1, 1e-15);
}

// Central differences in extended precision on the batch value.
std::vector<long double> numeric_logit_grad(const ConfLoss& loss, const std::vector<double>& z,
                                            const std::vector<double>& y,
                                            const std::vector<SampleLabel>& l, std::size_t n_pos) {
  std::vector<long double> zl(z.begin(), z.end());
  const std::vector<long double> yl(y.begin(), y.end());
  std::vector<long double> out(z.size());
  const long double h = 1e-6L;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const long double base = zl[i];
    zl[i] = base + h;
    const long double up = detail::confidence_batch<long double>(loss, zl, yl, l, n_pos);
    zl[i] = base - h;
    const long double down = detail::confidence_batch<long double>(loss, zl, yl, l, n_pos);
    zl[i] = base;
    out[i] = (up - down) / (2 * h);
  }
  return out;
}

TEST(ConfidenceFamily, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> uz(-6.0, 6.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const ConfLoss& loss : {ConfLoss::l1(), ConfLoss::smooth_l1(), ConfLoss::l2(), ConfLoss::ce(),
                               ConfLoss::gfocal(2.0), ConfLoss::weighted_ce(0.3)}) {
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> z(6), y(6);
      std::vector<SampleLabel> l(6);
      for (std::size_t i = 0; i < 6; ++i) {
        z[i] = uz(rng);
        y[i] = u(rng);
        l[i] = i % 2 == 0 ? Positive : Negative;
        // Keep L1 away from its kink.
        if (loss.kind == ConfLoss::Kind::L1 && std::abs(sigmoid(z[i]) - y[i]) < 1e-3) y[i] = sigmoid(z[i]) > 0.5 ? 0.0 : 1.0;
      }
      const auto a = confidence_loss_grad(loss, z, y, l, 3);
      const auto n = numeric_logit_grad(loss, z, y, l, 3);
      for (std::size_t i = 0; i < 6; ++i) {
        ASSERT_NEAR(a[i], static_cast<double>(n[i]), 1e-6 * std::max(1e-3, std::abs(a[i])))
            << "kind " << int(loss.kind) << " trial " << trial << " i " << i;
      }
    }
  }
}

TEST(SigmoidRegressionGrad, CrossEntropyAtSaturation) {
  const auto g = sigmoid_regression_grad(RegressionLoss::CE, 0.0, logit(0.999), std::vector{1.0});
  EXPECT_NEAR(g[0], 0.999, 1e-12);
}

TEST(SigmoidRegressionGrad, L2VanishesAtSaturation) {
  const auto g = sigmoid_regression_grad(RegressionLoss::L2, 0.0, logit(0.999), std::vector{1.0});
  EXPECT_NEAR(std::abs(g[0]), 0.999 * 0.999 * 0.001, 1e-12);
  EXPECT_GT(g[0], 0.0);  // descent lowers h toward y = 0
}

TEST(SigmoidRegressionGrad, ZeroAtFit) {
  const double z = 0.8;
  const double h = sigmoid(z);
  for (auto kind : {RegressionLoss::L1, RegressionLoss::L2, RegressionLoss::CE}) {
    const auto g = sigmoid_regression_grad(kind, h, z, std::vector{1.0, -2.0});
    EXPECT_NEAR(g[0], 0.0, 1e-16);
    EXPECT_NEAR(g[1], 0.0, 1e-16);
  }
}

TEST(SigmoidRegressionGrad, CeIsClosedFormAndGrowsWithDistance) {
  const std::vector<double> x{0.5, -1.5, 2.0};
  const double z = -0.4;
  const double h = sigmoid(z);
  double prev = -1.0;
  for (double y : {0.41, 0.5, 0.65, 0.8, 1.0}) {
    const auto g = sigmoid_regression_grad(RegressionLoss::CE, y, z, x);
    double norm = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_EQ(g[i], (h - y) * x[i]);
      norm += g[i] * g[i];
    }
    EXPECT_GT(norm, prev);
    prev = norm;
  }
}

TEST(SigmoidRegressionGrad, SaturationRatio) {
  for (double h : {0.99, 0.995, 0.999, 0.9999}) {
    const double z = logit(h);
    const double ce = sigmoid_regression_grad(RegressionLoss::CE, 0.0, z, std::vector{1.0})[0];
    const double l2 = sigmoid_regression_grad(RegressionLoss::L2, 0.0, z, std::vector{1.0})[0];
    const double hh = sigmoid(z);
    EXPECT_GE(std::abs(ce) / std::abs(l2), 100.0);
    EXPECT_NEAR(std::abs(ce) / std::abs(l2), 1.0 / (hh * (1.0 - hh)), 1e-6 / (hh * (1.0 - hh)));
  }
}

TEST(SigmoidRegressionGrad, L1AndL2VanishTowardTheExtremes) {
  double prev_l1 = INFINITY, prev_l2 = INFINITY;
  for (double z : {2.0, 4.0, 6.0, 8.0, 10.0}) {
    const double l1 = std::abs(sigmoid_regression_grad(RegressionLoss::L1, 0.0, z, std::vector{1.0})[0]);
    const double l2 = std::abs(sigmoid_regression_grad(RegressionLoss::L2, 0.0, z, std::vector{1.0})[0]);
    EXPECT_LT(l1, prev_l1);
    EXPECT_LT(l2, prev_l2);
    prev_l1 = l1;
    prev_l2 = l2;
  }
  // Mirror: y = 1 with h -> 0.
  EXPECT_LT(std::abs(sigmoid_regression_grad(RegressionLoss::L2, 1.0, -10.0, std::vector{1.0})[0]), 1e-4);
}

TEST(SigmoidRegressionGrad, L1StaysLargeInMidRange) {
  const std::vector<double> x{1.0, -0.5};
  const double xnorm = std::sqrt(1.25);
  for (double h : {0.2001, 0.35, 0.5, 0.66, 0.7999}) {
    const double z = logit(h);
    const auto g = sigmoid_regression_grad(RegressionLoss::L1, h + 1e-6, z, x);
    const double norm = std::hypot(g[0], g[1]);
    EXPECT_NEAR(norm, h * (1 - h) * xnorm, 1e-9);
    EXPECT_GE(norm, 0.16 * xnorm);
  }
}

TEST(Losses, PermutationInvariant) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> uz(-5.0, 5.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> z(40), y(40);
  std::vector<SampleLabel> l(40);
  for (std::size_t i = 0; i < 40; ++i) {
    z[i] = uz(rng);
    y[i] = u(rng);
    l[i] = u(rng) < 0.4 ? Positive : Negative;
  }
  std::vector<std::size_t> perm(40);
  for (std::size_t i = 0; i < 40; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> zp(40), yp(40);
  std::vector<SampleLabel> lp(40);
  for (std::size_t i = 0; i < 40; ++i) {
    zp[i] = z[perm[i]];
    yp[i] = y[perm[i]];
    lp[i] = l[perm[i]];
  }
  EXPECT_NEAR(focal_loss(z, l, 16), focal_loss(zp, lp, 16), 1e-12);
  for (const ConfLoss& loss : {ConfLoss::l1(), ConfLoss::l2(), ConfLoss::ce(), ConfLoss::gfocal(), ConfLoss::weighted_ce(0.1)}) {
    EXPECT_NEAR(confidence_loss(loss, z, y, l, 16), confidence_loss(loss, zp, yp, lp, 16), 1e-12);
  }
}

TEST(TotalLoss, UnitWeightSum) {
  EXPECT_EQ(total_loss(0, 0, 0).total, 0.0);
  const auto b = total_loss(1, 2, 3);
  EXPECT_EQ(b.total, 6.0);
  EXPECT_EQ(b.classification, 1.0);
  EXPECT_EQ(b.localization, 2.0);
  EXPECT_EQ(b.object_confidence, 3.0);
  EXPECT_EQ(total_loss(3, 1, 2).total, total_loss(2, 3, 1).total);
  EXPECT_THROW(total_loss(-1, 0, 0), std::invalid_argument);
  EXPECT_THROW(total_loss(0, NAN, 0), std::invalid_argument);
}

}  // namespace
}  // namespace objconf
