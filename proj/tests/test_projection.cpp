#include "slns/projection.hpp"
#include "slns/rng.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace slns;

namespace {

constexpr double kPi = std::numbers::pi;

Domain<2> torus() { return Domain<2>::torus(Vec<2>(0, 0), Vec<2>(2 * kPi, 2 * kPi)); }

template <int Dim>
VectorField<Dim> random_field(const Grid<Dim>& g, std::uint64_t seed) {
  const RngStream rng(seed, 0);
  VectorField<Dim> v(g);
  for (std::size_t k = 0; k < g.size(); ++k)
    for (int a = 0; a < Dim; ++a) v[a][k] = rng.normal(k, static_cast<std::uint32_t>(a));
  return v;
}

template <int Dim>
ScalarField<Dim> random_scalar(const Grid<Dim>& g, std::uint64_t seed) {
  const RngStream rng(seed, 1);
  ScalarField<Dim> s(g);
  for (std::size_t k = 0; k < g.size(); ++k) s[k] = rng.normal(k, 0);
  return s;
}

}  // namespace

TEST(PeriodicProjection, PropertiesOnRandomFields) {
  const Grid<2> g(torus(), {16, 12});
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto v = random_field(g, s);
    const auto p = leray_project(v, torus());
    EXPECT_LT(divergence(p, torus()).max_abs(), 1e-12);
    EXPECT_LT((leray_project(p, torus()) - p).max_abs(), 1e-12);
    EXPECT_LT(leray_project(gradient(random_scalar(g, s), torus()), torus()).max_abs(), 1e-12);
  }
}

TEST(PeriodicProjection, KeepsDivergenceFreeFieldAndMean) {
  const Grid<2> g(torus(), {16, 16});
  auto u = VectorField<2>::from_function(
      g, [](const Vec<2>& x) { return Vec<2>(0.3 + std::sin(x[0]) * std::cos(x[1]), -std::cos(x[0]) * std::sin(x[1])); });
  EXPECT_LT((leray_project(u, torus()) - u).max_abs(), 1e-13);
}

TEST(PeriodicProjection, ThreeDimensional) {
  const auto d = Domain<3>::torus(Vec<3>(0, 0, 0), Vec<3>(1, 2, 3));
  const Grid<3> g(d, {8, 6, 10});
  const auto p = leray_project(random_field(g, 3), d);
  EXPECT_LT(divergence(p, d).max_abs(), 1e-11);
  EXPECT_LT((leray_project(p, d) - p).max_abs(), 1e-12);
}

TEST(WalledProjection, ChannelDivergenceFreeInteriorAndNoFlux) {
  const auto d = Domain<2>::channel_x(Vec<2>(0, 0), Vec<2>(1, 1));
  const Grid<2> g(d, {8, 9});
  const auto p = leray_project(random_field(g, 5), d);
  const auto div = divergence(p, d);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto i = g.multi_index(k);
    if (i[1] == 0 || i[1] == 8) EXPECT_NEAR(p[1][k], 0.0, 1e-10);
    else EXPECT_NEAR(div[k], 0.0, 1e-9);
  }
  EXPECT_LT((leray_project(p, d) - p).max_abs(), 1e-9);
}

TEST(WalledProjection, RemovesGradientOfWallCompatiblePotential) {
  const auto d = Domain<2>::channel_x(Vec<2>(0, 0), Vec<2>(1, 1));
  const Grid<2> g(d, {8, 17});
  // u = (sin(pi y), 0) is divergence free with zero normal flux; adding a
  // discrete gradient must be undone when that gradient has zero wall flux.
  const auto u = VectorField<2>::from_function(g, [](const Vec<2>& x) { return Vec<2>(std::sin(kPi * x[1]), 0.0); });
  EXPECT_LT((leray_project(u, d) - u).max_abs(), 1e-9);
}

TEST(WalledProjection, RectangleProjectorReusable) {
  const auto d = Domain<2>::rectangle(Vec<2>(0, 0), Vec<2>(1, 1));
  const Grid<2> g(d, {9, 9});
  const WalledProjector<2> proj(g);
  const auto u = VectorField<2>::from_function(g, [](const Vec<2>& x) {
    return Vec<2>(std::sin(kPi * x[0]) * std::cos(kPi * x[1]), -std::cos(kPi * x[0]) * std::sin(kPi * x[1]));
  });
  const auto p = proj.project(u);
  EXPECT_LT((proj.project(p) - p).max_abs(), 1e-9);
}

TEST(InverseCurl, PeriodicRoundTrip) {
  const Grid<2> g(torus(), {32, 24});
  auto w = ScalarField<2>::from_function(g, [](const Vec<2>& x) { return std::sin(2 * x[0]) * std::cos(x[1]) + 0.2 * std::cos(3 * x[1]); });
  const auto u = inverse_curl(w, torus());
  EXPECT_LT((curl(u, torus()) - w).max_abs(), 1e-12);
  EXPECT_LT(divergence(u, torus()).max_abs(), 1e-12);
}

TEST(InverseCurl, PeriodicNeedsZeroMean) {
  const Grid<2> g(torus(), {8, 8});
  EXPECT_THROW(inverse_curl(ScalarField<2>(g, 1.0), torus()), UsageError);
}

TEST(InverseCurl, PeriodicTaylorGreenToSecondOrder) {
  auto err = [](int n) {
    const Grid<2> g(torus(), {n, n});
    const auto w = ScalarField<2>::from_function(g, [](const Vec<2>& x) { return 2 * std::sin(x[0]) * std::sin(x[1]); });
    const auto exact = VectorField<2>::from_function(
        g, [](const Vec<2>& x) { return Vec<2>(std::sin(x[0]) * std::cos(x[1]), -std::cos(x[0]) * std::sin(x[1])); });
    return relative_l2_error(inverse_curl(w, torus()), exact);
  };
  EXPECT_NEAR(err(16) / err(32), 4.0, 0.2);
}

TEST(InverseCurl, ThreeDimensionalRoundTrip) {
  const auto d = Domain<3>::torus(Vec<3>(0, 0, 0), Vec<3>(2 * kPi, 2 * kPi, 2 * kPi));
  const Grid<3> g(d, {12, 12, 12});
  const auto a = leray_project(random_field(g, 11), d);
  const auto w = curl(a, d);
  const auto u = inverse_curl(w, d);
  EXPECT_LT((curl(u, d) - w).max_abs(), 1e-10);
}

TEST(InverseCurl, WalledChannelShear) {
  const auto d = Domain<2>::channel_x(Vec<2>(0, 0), Vec<2>(1, 1));
  auto err = [&](int n) {
    const Grid<2> g(d, {8, n});
    const auto w = ScalarField<2>::from_function(g, [](const Vec<2>& x) { return -kPi * std::cos(kPi * x[1]); });
    const auto exact = VectorField<2>::from_function(g, [](const Vec<2>& x) { return Vec<2>(std::sin(kPi * x[1]), 0.0); });
    return (inverse_curl(w, d) - exact).max_abs();
  };
  EXPECT_LT(err(33), 5e-3);
  EXPECT_GT(err(17) / err(33), 3.0);
}
