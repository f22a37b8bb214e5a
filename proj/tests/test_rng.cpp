#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "layout_infer/rng.hpp"

using layout_infer::Rng;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a(), b());
}

TEST(Rng, SubstreamsDependOnlyOnSeedAndIndex) {
  Rng s1 = Rng::substream(7, 3);
  Rng unused = Rng::substream(7, 0);
  (void)unused();
  Rng s2 = Rng::substream(7, 3);
  for (int i = 0; i < 50; ++i) ASSERT_EQ(s1(), s2());
  Rng other = Rng::substream(7, 4);
  Rng s3 = Rng::substream(7, 3);
  int equal = 0;
  for (int i = 0; i < 50; ++i) equal += other() == s3() ? 1 : 0;
  EXPECT_EQ(equal, 0);
}

TEST(Rng, UniformInRangeAndBelowUnbiased) {
  Rng r(1);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    counts[r.below(5)]++;
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
}

TEST(Rng, VariateMoments) {
  Rng r(2024);
  const int n = 200000;
  double sn = 0, sn2 = 0, sg = 0, sb = 0, sb2 = 0, sgs = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
    sg += r.gamma(3.5);
    sgs += r.gamma(0.4);
    const double b = r.beta(2.0, 5.0);
    sb += b;
    sb2 += b * b;
  }
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.01);
  EXPECT_NEAR(sg / n, 3.5, 0.02);
  EXPECT_NEAR(sgs / n, 0.4, 0.01);
  const double mb = sb / n;
  EXPECT_NEAR(mb, 2.0 / 7.0, 0.002);
  // Var Beta(2,5) = ab / ((a+b)^2 (a+b+1)) = 10 / 392
  EXPECT_NEAR(sb2 / n - mb * mb, 10.0 / 392.0, 0.001);
}
