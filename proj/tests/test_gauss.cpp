#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "tdho/error.hpp"
#include "tdho/gauss.hpp"
#include "tdho/grid.hpp"
#include "tdho/model.hpp"
#include "tdho/quad_prop.hpp"
#include "test_support.hpp"

namespace tdho {
namespace {

using testing::relative_l2;

void expect_map_near(const SymplecticMap& m, double a, double b, double c, double d, double tol) {
  EXPECT_NEAR(m.a, a, tol);
  EXPECT_NEAR(m.b, b, tol);
  EXPECT_NEAR(m.c, c, tol);
  EXPECT_NEAR(m.d, d, tol);
}

GaussianState random_gaussian(std::mt19937_64& rng, int n = 2) {
  std::uniform_real_distribution<double> uc(-1.0, 1.0), uw(0.8, 1.4);
  Vec y(n), v(n);
  for (int a = 0; a < n; ++a) {
    y[a] = uc(rng);
    v[a] = uc(rng);
  }
  GaussianState g = make_gaussian(y, v, uw(rng));
  // A chirp and a global phase so that every component of the state is exercised.
  g.width += uc(rng) * 0.3;
  g.gamma += cplx(uc(rng), 0.0);
  return g;
}

TEST(Flows, HarmonicQuarterRotation) {
  expect_map_near(flow_harmonic(std::numbers::pi / 2, 1.0), 0.0, 1.0, -1.0, 0.0, 1e-15);
  const auto id = flow_harmonic(0.0, 2.0);
  expect_map_near(id, 1.0, 0.0, 0.0, 1.0, 0.0);
}

TEST(Flows, DeterminantAndGroupLaw) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int k = 0; k < 100; ++k) EXPECT_NEAR(flow_harmonic(u(rng), 1.3).det(), 1.0, 1e-12);
  const auto m = flow_harmonic(0.4, 1.3) * flow_harmonic(0.7, 1.3);
  const auto r = flow_harmonic(1.1, 1.3);
  expect_map_near(m, r.a, r.b, r.c, r.d, 1e-12);
  // Long chains stay symplectic.
  SymplecticMap chain;
  for (int k = 0; k < 200; ++k)
    chain = flow_dilation(0.01 * u(rng)) * flow_free(u(rng)) * flow_quadratic_phase(u(rng)) * chain;
  EXPECT_NEAR(chain.det(), 1.0, 1e-10 * std::max(1.0, std::abs(chain.a * chain.d)));
}

TEST(Flows, DecayClosedForm) {
  DecayParams p;
  const auto id = flow_decay(2.0, 2.0, p);
  expect_map_near(id, 1.0, 0.0, 0.0, 1.0, 0.0);
  // c1 = 1, c2 = 0 at t0 = 1: x = 1, v = 3/4; at t1 = 16 x = 8.
  const auto m = flow_decay(1.0, 16.0, p);
  EXPECT_NEAR(m.a * 1.0 + m.b * 0.75, 8.0, 1e-13);
  EXPECT_NEAR(m.det(), 1.0, 1e-12);
  EXPECT_THROW(flow_decay(-2.0, 2.0, p), DomainError);
  EXPECT_THROW(flow_decay(0.5, 2.0, p), DomainError);
}

TEST(Flows, DecayMatchesNewtonIntegrator) {
  DecayParams p;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 20; ++k) {
    const double x = u(rng), v = u(rng);
    for (auto [t0, t1] : {std::pair{1.0, 5.0}, std::pair{-6.0, -1.5}, std::pair{3.0, 1.2}}) {
      const auto m = flow_decay(t0, t1, p);
      const auto r = integrate_newton({{x}, {v}, t0}, t1, 1e-3, p);
      EXPECT_NEAR(m.a * x + m.b * v, r.x[0], 1e-8);
      EXPECT_NEAR(m.c * x + m.d * v, r.v[0], 1e-8);
    }
  }
}

TEST(Flows, H0PiecesComposeAcrossRegions) {
  DecayParams p;
  const auto pieces = flow_h0_pieces(-3.0, 2.5, p);
  for (const auto& m : pieces) EXPECT_NEAR(m.det(), 1.0, 1e-12);
  const auto full = flow_h0(-3.0, 2.5, p);
  const auto r = integrate_newton({{0.7}, {-0.4}, -3.0}, 2.5, 1e-4, p);
  EXPECT_NEAR(full.a * 0.7 - full.b * 0.4, r.x[0], 1e-8);
  EXPECT_NEAR(full.c * 0.7 - full.d * 0.4, r.v[0], 1e-8);
}

TEST(Gaussian, NormalizationAndIdentity) {
  const double y[2] = {0.5, -0.5}, v[2] = {1.0, 2.0};
  const auto g = make_gaussian(y, v, 0.7);
  EXPECT_NEAR(norm2(g), 1.0, 1e-12);
  const auto same = gaussian_apply(SymplecticMap{}, g);
  EXPECT_EQ(same.width, g.width);
  EXPECT_NEAR(std::abs(same.gamma - g.gamma), 0.0, 1e-15);
  EXPECT_EQ(same.center, g.center);
}

TEST(Gaussian, SampleMatchesAnalytic) {
  GridSpec grid{2, 64, 8.0};
  const double y[2] = {0.0, 0.0}, v[2] = {0.0, 0.0};
  const auto g = make_gaussian(y, v, 1.0);
  const auto psi = sample_to_grid(g, grid);
  for (int i = 0; i < grid.points; i += 5)
    for (int j = 0; j < grid.points; j += 5) {
      const double x0 = grid.x(i), x1 = grid.x(j);
      const double exact = std::exp(-(x0 * x0 + x1 * x1) / 2) / std::sqrt(std::numbers::pi);
      EXPECT_NEAR(std::abs(psi[i * grid.points + j] - exact), 0.0, 1e-15);
    }
  EXPECT_NEAR(norm2(psi), 1.0, 1e-9);
}

TEST(Gaussian, SampleOverflowReportsWidth) {
  GridSpec grid{2, 64, 4.0};
  const double y[2] = {1.0, 0.0}, v[2] = {0.0, 0.0};
  try {
    (void)sample_to_grid(make_gaussian(y, v, 1.0), grid);
    FAIL();
  } catch (const GridOverflow& e) {
    EXPECT_GE(e.required_half_width(), 7.0);
  }
}

TEST(Gaussian, OverlapMatchesGrid) {
  GridSpec grid{2, 128, 10.0};
  std::mt19937_64 rng(3);
  for (int k = 0; k < 10; ++k) {
    const auto a = random_gaussian(rng), b = random_gaussian(rng);
    const cplx exact = overlap(a, b);
    const cplx numeric = inner_product(sample_to_grid(a, grid), sample_to_grid(b, grid));
    EXPECT_NEAR(std::abs(exact - numeric), 0.0, 1e-8);
  }
}

TEST(Gaussian, CausticIsReported) {
  GaussianState g{{0.0, 0.0}, {0.0, 0.0}, cplx(0.0, 1e-10), 0.0};
  EXPECT_THROW(gaussian_apply(flow_harmonic(std::numbers::pi / 2, 1.0), g), CausticError);
}

TEST(Gaussian, FreeFlowSecondMoment) {
  GridSpec grid{1, 256, 12.0};
  const double y[1] = {0.0}, v[1] = {0.0};
  const auto g = gaussian_apply(flow_free(1.0), make_gaussian(y, v, 1.0));
  // |psi|^2 ~ exp(-x^2 / w^2) with w^2 = 1 + tau^2.
  EXPECT_NEAR(g.envelope_width(), std::sqrt(2.0), 1e-14);
  const auto grid_flow = free_flow(sample_to_grid(make_gaussian(y, v, 1.0), grid), 1.0);
  EXPECT_LT(l2_distance(sample_to_grid(g, grid), grid_flow), 1e-8);
}

TEST(Gaussian, HarmonicQuarterPeriodSwapsWidths) {
  GridSpec grid{2, 128, 14.0};
  DecayParams p;
  p.r0 = 2.0;
  const double y[2] = {0.5, 0.0}, v[2] = {0.0, 0.5};
  const auto g0 = make_gaussian(y, v, 0.7);
  const auto g1 = apply_plan(g0, mehler_plan(0.0, std::numbers::pi / 2, p));
  EXPECT_NEAR(g1.envelope_width(), 1.0 / 0.7, 1e-12);
  const auto grid1 = mehler_evolve(sample_to_grid(g0, grid), 0.0, std::numbers::pi / 2, p);
  EXPECT_LT(relative_l2(sample_to_grid(g1, grid), grid1), 1e-6);
}

// Every elementary quadratic unitary agrees on Gaussians and on the grid;
// this fixes all sign and phase conventions between the two engines.
TEST(Gaussian, ElementaryUnitariesMatchGrid) {
  GridSpec grid{2, 128, 12.0};
  std::mt19937_64 rng(4);
  for (int k = 0; k < 20; ++k) {
    const auto g = random_gaussian(rng);
    const auto psi = sample_to_grid(g, grid);
    auto check = [&](const WaveFunction& grid_out, const GaussianState& gauss_out, const char* what) {
      EXPECT_LT(relative_l2(sample_to_grid(gauss_out, grid), grid_out), 1e-6) << what;
      EXPECT_NEAR(norm2(gauss_out), norm2(g), 1e-10) << what;
    };
    check(quadratic_phase(psi, 0.6), gaussian_apply(flow_quadratic_phase(0.6), g), "phase");
    check(free_flow(psi, 0.8), gaussian_apply(flow_free(0.8), g), "free");
    check(free_flow(psi, -0.5), gaussian_apply(flow_free(-0.5), g), "free back");
    check(dilation(psi, 0.2), gaussian_apply(flow_dilation(0.2), g), "dilation");
    check(dilation(psi, -0.3), gaussian_apply(flow_dilation(-0.3), g), "contraction");
    const double v[2] = {0.4, -0.8}, a[2] = {-0.6, 0.3};
    check(linear_phase(psi, v), gaussian_boost(g, v), "boost");
    check(translate(psi, a), gaussian_translate(g, a), "translate");
  }
}

}  // namespace
}  // namespace tdho
