#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "tdho/error.hpp"
#include "tdho/interprop.hpp"
#include "tdho/quad_prop.hpp"
#include "tdho/scatter.hpp"
#include "test_support.hpp"

namespace tdho {
namespace {

using testing::random_packet;

const PotentialSpec kBump{{GaussianBump{0.5, {0.0, 0.0}, 1.0}}};

TEST(Strang, ZeroPotentialCollapsesToFreeStep) {
  GridSpec g{2, 64, 10.0};
  DecayParams p;
  std::mt19937_64 rng(1);
  const auto psi = random_packet(g, rng);
  const auto step = strang_step(psi, 0.1, 0.05, {}, p);
  EXPECT_LT(l2_distance(step, apply_plan(psi, shear_plan(flow_h0(0.1, 0.15, p)))), 1e-13);
  EXPECT_LT(l2_distance(step, u0_compose(psi, 0.1, 0.15, p)), 1e-10);
  // Outside r0 the composed propagator goes through grid dilations.
  const auto outer = strang_step(psi, 1.5, 0.05, {}, p);
  EXPECT_LT(l2_distance(outer, apply_plan(psi, shear_plan(flow_h0(1.5, 1.55, p)))), 1e-13);
  EXPECT_LT(l2_distance(outer, u0_compose(psi, 1.5, 1.55, p)), 1e-9);
}

TEST(Strang, StepMustNotStraddleSwitch) {
  GridSpec g{2, 32, 8.0};
  DecayParams p;
  std::mt19937_64 rng(2);
  const auto psi = random_packet(g, rng);
  EXPECT_THROW(strang_step(psi, 0.95, 0.1, kBump, p), DomainError);
}

TEST(Strang, Unitary) {
  GridSpec g{2, 64, 10.0};
  DecayParams p;
  std::mt19937_64 rng(3);
  for (int k = 0; k < 5; ++k) {
    const auto psi = random_packet(g, rng);
    EXPECT_NEAR(norm2(strang_step(psi, 0.2, 0.01, kBump, p)), 1.0, 1e-12);
  }
}

TEST(Evolve, ZeroPotentialMatchesComposedPropagator) {
  GridSpec g{2, 128, 16.0};
  DecayParams p;
  std::mt19937_64 rng(4);
  const auto psi = random_packet(g, rng, 1.0, 0.5);
  EvolveConfig cfg;
  cfg.dt = 0.01;
  const auto a = evolve(psi, -1.3, 1.4, cfg, {}, p);
  EXPECT_LT(l2_distance(a, u0_compose(psi, -1.3, 1.4, p)), 1e-10);
}

TEST(Evolve, IdentityReversalAndUnitarity) {
  GridSpec g{2, 64, 10.0};
  DecayParams p;
  std::mt19937_64 rng(5);
  const auto psi = random_packet(g, rng);
  EvolveConfig cfg;
  cfg.dt = 0.02;
  EXPECT_EQ(l2_distance(evolve(psi, 0.3, 0.3, cfg, kBump, p), psi), 0.0);
  const auto fwd = evolve(psi, -0.4, 0.6, cfg, kBump, p);
  EXPECT_NEAR(norm2(fwd), 1.0, 1e-10);
  const auto back = evolve(fwd, 0.6, -0.4, cfg, kBump, p);
  EXPECT_LT(l2_distance(back, psi), 1e-8);
  cfg.dt = 0.3;
  EXPECT_NEAR(norm2(evolve(psi, -0.4, 0.6, cfg, kBump, p)), 1.0, 1e-10);
}

TEST(Evolve, SecondOrderInDt) {
  GridSpec g{2, 64, 10.0};
  DecayParams p;
  std::mt19937_64 rng(6);
  const auto psi = random_packet(g, rng);
  const PotentialSpec strong{{GaussianBump{3.0, {0.5, 0.0}, 0.8}}};
  auto run = [&](double dt) {
    EvolveConfig cfg;
    cfg.dt = dt;
    return evolve(psi, 0.0, 0.8, cfg, strong, p);
  };
  const auto ref = run(0.05 / 8);
  const double e1 = l2_distance(run(0.05), ref), e2 = l2_distance(run(0.025), ref);
  // With a dt/8 reference the measured ratio is (1 - 1/64)/(1/4 - 1/64) * 1/4 ~ 4.2.
  EXPECT_NEAR(e1 / e2, 4.0, 0.6);
}

TEST(Evolve, SelfRefinementOnStandardPhantom) {
  GridSpec g{2, 64, 10.0};
  DecayParams p;
  std::mt19937_64 rng(7);
  const auto psi = random_packet(g, rng);
  EvolveConfig cfg;
  cfg.dt = 1e-3;
  const auto coarse = evolve(psi, -0.2, 0.2, cfg, kBump, p);
  cfg.dt = 1e-3 / 8;
  const auto fine = evolve(psi, -0.2, 0.2, cfg, kBump, p);
  EXPECT_LT(l2_distance(coarse, fine), 1e-5);
}

TEST(Evolve, MovingFrameEqualsShiftedPotential) {
  GridSpec g{2, 64, 10.0};
  DecayParams p;
  std::mt19937_64 rng(8);
  const auto psi = random_packet(g, rng);
  EvolveConfig cfg;
  cfg.dt = 0.02;
  const Vec q{0.7, -0.4};
  const auto framed = evolve(psi, 0.0, 0.5, cfg, kBump, p, [&](double) { return q; });
  const double shift[2] = {-0.7, 0.4};
  const auto shifted = evolve(psi, 0.0, 0.5, cfg, kBump.translated(shift), p);
  EXPECT_LT(l2_distance(framed, shifted), 1e-12);
}

TEST(Sampler, MatchesPointwiseEvaluation) {
  GridSpec g{2, 32, 4.0};
  const PotentialSpec spec{{GaussianBump{0.5, {0.3, -0.2}, 0.9},
                            SmoothCompactBump{0.7, {-1.0, 1.0}, 1.2}, PowerTail{0.2, 2.0},
                            TruncatedSingular{1.0, {1.0, 1.0}, 0.5, 0.8, 2.0}}};
  PotentialSampler sampler(spec, g, 5.0);
  std::vector<double> out(g.size(), 0.0);
  const double shift[2] = {0.1, -0.3};
  sampler.sample(shift, out);
  for (int i = 0; i < g.points; ++i)
    for (int j = 0; j < g.points; ++j) {
      const double x[2] = {g.x(i) + shift[0], g.x(j) + shift[1]};
      EXPECT_NEAR(out[i * g.points + j], evaluate_potential(spec, x, 5.0), 1e-14);
    }
}

GaussianState probe(double speed, double width, double offset = 0.0) {
  ProbeSpec s;
  s.width = width;
  s.center = {0.0, offset};
  s.velocity = {speed, 0.0};
  return build_probe(s);
}

TEST(Window, SweepAgainstInflatedRadius) {
  DecayParams p;
  const PotentialSpec disk{{SmoothCompactBump{1.0, {0.0, 0.0}, 2.0}}};
  WindowOptions opts;
  opts.probe_radius_factor = 8.0;
  opts.tol = 1e-10;
  const auto w = interaction_window(probe(32.0, 1.0), disk, p, opts);
  ASSERT_FALSE(w.empty);
  const double expected = std::asin(10.0 / 32.0);
  EXPECT_GE(w.t_star, expected - 1e-12);
  EXPECT_NEAR(w.t_star, expected, 1e-3);
}

TEST(Window, FarSupportIsEmpty) {
  DecayParams p;
  const PotentialSpec far{{SmoothCompactBump{1.0, {0.0, 20.0}, 1.0}}};
  WindowOptions opts;
  opts.probe_radius_factor = 4.0;
  const auto w = interaction_window(probe(32.0, 0.5), far, p, opts);
  EXPECT_TRUE(w.empty);
  EXPECT_EQ(w.t_star, 0.0);
}

TEST(Window, HalvesWithDoubledSpeed) {
  DecayParams p;
  WindowOptions opts;
  opts.rule = WindowRule::kCoupling;
  opts.tol = 1e-6;
  const auto w32 = interaction_window(probe(32.0, 1.0), kBump, p, opts);
  const auto w64 = interaction_window(probe(64.0, 1.0), kBump, p, opts);
  EXPECT_NEAR(w64.t_star / w32.t_star, 0.5, 0.1);
}

TEST(Window, ReachingSwitchTimeIsAnError) {
  DecayParams p;
  WindowOptions opts;
  opts.probe_radius_factor = 8.0;
  EXPECT_THROW(interaction_window(probe(4.0, 1.0), kBump, p, opts), DomainError);
}

// int |V| |psi(t)|^2 at +-t* is below tol times its maximum over the window.
TEST(Window, CouplingBelowToleranceAtEdges) {
  DecayParams p;
  GridSpec lab{2, 256, 14.0};
  WindowOptions opts;
  opts.rule = WindowRule::kCoupling;
  opts.tol = 1e-6;
  for (double speed : {16.0, 32.0}) {
    const auto g0 = probe(speed, 1.0);
    const auto w = interaction_window(g0, kBump, p, opts);
    auto coupling = [&](double t) {
      const auto psi = sample_to_grid(gaussian_apply(flow_h0_pieces(0.0, t, p), g0), lab);
      double s = 0.0;
      for (int i = 0; i < lab.points; ++i)
        for (int j = 0; j < lab.points; ++j) {
          const double x[2] = {lab.x(i), lab.x(j)};
          s += std::abs(evaluate_potential(kBump, x)) * std::norm(psi[i * lab.points + j]);
        }
      return s * lab.dx() * lab.dx();
    };
    double peak = 0.0;
    for (int k = -20; k <= 20; ++k) peak = std::max(peak, coupling(w.t_star * k / 20.0));
    EXPECT_LE(coupling(w.t_star), opts.tol * peak * (1 + 1e-6)) << speed;
    EXPECT_LE(coupling(-w.t_star), opts.tol * peak * (1 + 1e-6)) << speed;
    EXPECT_GT(coupling(0.95 * w.t_star), opts.tol * peak) << speed;
  }
}

}  // namespace
}  // namespace tdho
