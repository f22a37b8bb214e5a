#include <cmath>
#include <numbers>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include "layout_infer/special.hpp"

namespace sp = layout_infer::special;

TEST(Special, LgammaKnownValues) {
  EXPECT_NEAR(sp::lgamma(1.0), 0.0, 1e-14);
  EXPECT_NEAR(sp::lgamma(2.0), 0.0, 1e-14);
  EXPECT_NEAR(sp::lgamma(0.5), 0.5 * std::log(std::numbers::pi), 1e-14);
  EXPECT_NEAR(sp::lgamma(10.0), std::log(362880.0), 1e-12);
  // log(99!) from the exact integer product
  double log_fact = 0.0;
  for (int k = 2; k < 100; ++k) log_fact += std::log(static_cast<double>(k));
  EXPECT_NEAR(sp::lgamma(100.0), log_fact, 1e-10);
}

TEST(Special, LgammaMatchesReferenceAcrossRange) {
  for (double x = 1e-8; x < 1e6; x *= 1.37) {
    const double ref = std::lgamma(x);
    EXPECT_NEAR(sp::lgamma(x), ref, 1e-12 * std::max(1.0, std::fabs(ref))) << "x=" << x;
  }
}

TEST(Special, DigammaMatchesReferenceAcrossRange) {
  EXPECT_NEAR(sp::digamma(1.0), -0.57721566490153286, 1e-14);
  EXPECT_NEAR(sp::digamma(0.5), -0.57721566490153286 - 2.0 * std::log(2.0), 1e-13);
  for (double x = 1e-8; x < 1e6; x *= 1.37) {
    const double ref = boost::math::digamma(x);
    EXPECT_NEAR(sp::digamma(x), ref, 1e-12 * std::max(1.0, std::fabs(ref))) << "x=" << x;
  }
}

TEST(Special, DigammaIsDerivativeOfLgamma) {
  for (double x : {0.03, 0.7, 3.3, 42.0}) {
    const double h = 1e-5 * x;
    const double fd = (sp::lgamma(x + h) - sp::lgamma(x - h)) / (2 * h);
    EXPECT_NEAR(sp::digamma(x), fd, 1e-6 * std::max(1.0, std::fabs(fd)));
  }
}

TEST(Special, NormalQuantileMatchesReference) {
  boost::math::normal_distribution<> n;
  for (double p : {1e-12, 1e-6, 0.01, 0.2, 0.5, 0.77, 0.975, 1 - 1e-9})
    EXPECT_NEAR(sp::normal_quantile(p), boost::math::quantile(n, p), 1e-12) << p;
  EXPECT_TRUE(std::isinf(sp::normal_quantile(0.0)));
}

TEST(Special, LogisticHelpersAreStable) {
  EXPECT_NEAR(sp::log_inv_logit(800.0), 0.0, 1e-300);
  EXPECT_NEAR(sp::log_inv_logit(-800.0), -800.0, 1e-9);
  EXPECT_NEAR(sp::inv_logit(sp::logit(0.3)), 0.3, 1e-15);
  EXPECT_DOUBLE_EQ(sp::log_sum_exp(sp::kNegInf, 1.5), 1.5);
  EXPECT_NEAR(sp::log_sum_exp(std::log(2.0), std::log(3.0)), std::log(5.0), 1e-15);
}
