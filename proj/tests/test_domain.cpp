#include "slns/domain.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace slns;

namespace {

Domain<2> unit_box() { return Domain<2>::rectangle(Vec<2>(0, 0), Vec<2>(1, 1)); }
Domain<2> unit_channel() { return Domain<2>::channel_x(Vec<2>(0, 0), Vec<2>(2, 1)); }

}  // namespace

TEST(Domain, RejectsEmptyOrInfiniteExtent) {
  EXPECT_THROW(Domain<2>::torus(Vec<2>(0, 0), Vec<2>(0, 1)), UsageError);
  EXPECT_THROW(Domain<2>::rectangle(Vec<2>(0, 0), Vec<2>(1, -1)), UsageError);
  EXPECT_THROW(Domain<2>::rectangle(Vec<2>(0, 0), Vec<2>(1, std::numeric_limits<double>::infinity())), UsageError);
}

TEST(Domain, KindNamesRoundTrip) {
  for (auto k : {DomainKind::Torus, DomainKind::Rectangle, DomainKind::ChannelX})
    EXPECT_EQ(parse_domain_kind(to_string(k)), k);
  EXPECT_THROW(parse_domain_kind("sphere"), UsageError);
}

TEST(Domain, PeriodicAxesPerKind) {
  const auto c = unit_channel();
  EXPECT_TRUE(c.periodic(0));
  EXPECT_FALSE(c.periodic(1));
  EXPECT_TRUE(c.has_walls());
  EXPECT_FALSE(Domain<2>::torus(Vec<2>(0, 0), Vec<2>(1, 1)).has_walls());
}

TEST(Domain, ContainsIsStrictOnWalls) {
  const auto d = unit_box();
  EXPECT_TRUE(contains(d, Vec<2>(0.5, 0.5)));
  EXPECT_FALSE(contains(d, Vec<2>(0.0, 0.5)));
  EXPECT_FALSE(contains(d, Vec<2>(0.5, 1.0)));
  EXPECT_FALSE(contains(d, Vec<2>(1.5, 0.5)));
  EXPECT_FALSE(contains(d, Vec<2>(std::nan(""), 0.5)));
}

TEST(Domain, ContainsIgnoresPeriodicAxes) {
  EXPECT_TRUE(contains(unit_channel(), Vec<2>(-7.3, 0.5)));
  EXPECT_FALSE(contains(unit_channel(), Vec<2>(0.3, 1.2)));
}

TEST(Domain, OnBoundary) {
  const auto d = unit_box();
  EXPECT_TRUE(on_boundary(d, Vec<2>(0.0, 0.3)));
  EXPECT_TRUE(on_boundary(d, Vec<2>(1.0, 1.0)));
  EXPECT_FALSE(on_boundary(d, Vec<2>(0.5, 0.5)));
  EXPECT_FALSE(on_boundary(d, Vec<2>(-0.1, 0.0)));
}

TEST(Domain, WrapMapsIntoPeriod) {
  const auto c = unit_channel();
  const Vec<2> w = c.wrap(Vec<2>(-0.5, 0.25));
  EXPECT_DOUBLE_EQ(w[0], 1.5);
  EXPECT_EQ(w[1], 0.25);
  EXPECT_DOUBLE_EQ(c.wrap(Vec<2>(4.25, 0.1))[0], 0.25);
}

TEST(Domain, ShrunkMovesOnlyWalls) {
  const auto s = unit_channel().shrunk(0.1);
  EXPECT_EQ(s.lower()[0], 0.0);
  EXPECT_EQ(s.upper()[0], 2.0);
  EXPECT_DOUBLE_EQ(s.lower()[1], 0.1);
  EXPECT_DOUBLE_EQ(s.upper()[1], 0.9);
}

TEST(BoundaryCrossing, NoneWhileInside) {
  EXPECT_FALSE(boundary_crossing(unit_box(), Vec<2>(0.2, 0.2), Vec<2>(0.8, 0.9)).has_value());
}

TEST(BoundaryCrossing, FractionAndSnappedPoint) {
  const auto hit = boundary_crossing(unit_box(), Vec<2>(0.5, 0.2), Vec<2>(0.5, -0.2));
  ASSERT_TRUE(hit.has_value());
  EXPECT_DOUBLE_EQ(hit->lambda, 0.5);
  EXPECT_EQ(hit->point[1], 0.0);
  EXPECT_DOUBLE_EQ(hit->point[0], 0.5);
  EXPECT_EQ(hit->wall_axis, 1);
  EXPECT_EQ(hit->wall_side, -1);
}

TEST(BoundaryCrossing, FirstWallWinsNearCorner) {
  // Leaves through x = 1 at lambda 0.25 before reaching y = 1 at lambda 0.5.
  const auto hit = boundary_crossing(unit_box(), Vec<2>(0.9, 0.8), Vec<2>(1.3, 1.2));
  ASSERT_TRUE(hit.has_value());
  EXPECT_EQ(hit->wall_axis, 0);
  EXPECT_EQ(hit->wall_side, 1);
  EXPECT_NEAR(hit->lambda, 0.25, 1e-15);
  EXPECT_EQ(hit->point[0], 1.0);
}

TEST(BoundaryCrossing, EndingOnWallCountsWithUnitFraction) {
  const auto hit = boundary_crossing(unit_box(), Vec<2>(0.5, 0.5), Vec<2>(0.5, 1.0));
  ASSERT_TRUE(hit.has_value());
  EXPECT_EQ(hit->lambda, 1.0);
  EXPECT_EQ(hit->point[1], 1.0);
}

TEST(BoundaryCrossing, PeriodicAxisNeverExits) {
  EXPECT_FALSE(boundary_crossing(unit_channel(), Vec<2>(1.9, 0.5), Vec<2>(2.7, 0.6)).has_value());
}

TEST(BoundaryCrossing, StartOutsideIsUsageError) {
  EXPECT_THROW(boundary_crossing(unit_box(), Vec<2>(1.2, 0.5), Vec<2>(0.5, 0.5)), UsageError);
}

TEST(BoundaryCrossing, ThreeDimensionalBox) {
  const auto d = Domain<3>::rectangle(Vec<3>(0, 0, 0), Vec<3>(1, 1, 1));
  const auto hit = boundary_crossing(d, Vec<3>(0.5, 0.5, 0.9), Vec<3>(0.5, 0.5, 1.1));
  ASSERT_TRUE(hit.has_value());
  EXPECT_EQ(hit->wall_axis, 2);
  EXPECT_EQ(hit->point[2], 1.0);
}

TEST(WallNormal, PointsOutward) {
  EXPECT_EQ(wall_normal<2>(1, -1), Vec<2>(0, -1));
  EXPECT_EQ(wall_normal<3>(0, 1), Vec<3>(1, 0, 0));
}
