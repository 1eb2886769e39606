#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "tdho/error.hpp"
#include "tdho/quad_prop.hpp"
#include "tdho/recon.hpp"
#include "tdho/scatter.hpp"

namespace tdho {
namespace {

using cplx = std::complex<double>;

ProbeSpec probe(double speed, double width, Vec center = {0.0, 0.0}, double angle = 0.0) {
  ProbeSpec p;
  p.width = width;
  p.center = std::move(center);
  p.velocity = {speed * std::cos(angle), speed * std::sin(angle)};
  return p;
}

// Probe width 1 with the coupling window: the setting where a handful of
// elements at |v| = 32 stay cheap.
ScatterConfig wide_probe_config(double dt_constant) {
  ScatterConfig cfg;
  cfg.frame_grid = {2, 64, 8.0};
  cfg.dt_constant = dt_constant;
  cfg.window.rule = WindowRule::kCoupling;
  cfg.window.tol = 1e-6;
  return cfg;
}

const PotentialSpec kBump{{GaussianBump{0.5, {0.0, 0.0}, 1.0}}};

TEST(Probe, EtaAndValidation) {
  EXPECT_DOUBLE_EQ(probe(32, 0.25).eta(), 32.0);
  EXPECT_THROW(probe(32, 0.0).validate(), ParameterError);
  EXPECT_THROW(probe(0.0, 0.5).validate(), ParameterError);
  const auto g = build_probe(probe(8, 0.5, {0.3, -0.2}));
  EXPECT_NEAR(norm2(g), 1.0, 1e-12);
  EXPECT_NEAR(g.center[0], 0.3, 1e-15);
  EXPECT_NEAR(g.momentum[0], 8.0, 1e-15);
}

TEST(Dressed, NormalizedAndOnTheClassicalPath) {
  DecayParams p;
  const Vec y{0.0, 0.4};
  for (double t_star : {0.0, 0.1, 0.3}) {
    const auto d = dressed_states(probe(32, 0.25, y), p, t_star);
    EXPECT_NEAR(norm2(d.in), 1.0, 1e-9);
    EXPECT_NEAR(norm2(d.out), 1.0, 1e-9);
    EXPECT_NEAR(d.in.center[0], -std::sin(t_star) * 32.0, 1e-9);
    EXPECT_NEAR(d.in.center[1], std::cos(t_star) * 0.4, 1e-9);
    EXPECT_NEAR(d.out.center[0], std::sin(t_star) * 32.0, 1e-9);
  }
  EXPECT_THROW(dressed_states(probe(32, 0.25), p, 1.0), DomainError);
}

// The boundary-dressed chain against the same plan run on a lab grid at |v| = 4.
TEST(Dressed, TildeChainMatchesGridTransport) {
  for (double sigma : {0.0, 3.0 / 16.0}) {
    DecayParams p;
    p.sigma = sigma;
    const ProbeSpec spec = probe(4, 1.0, {0.0, 0.3});
    const double t_star = 0.4;
    const auto d = dressed_states(spec, p, t_star, Dressing::kTildeBoundary);
    GridSpec lab{2, 256, 24.0};
    auto psi = sample_to_grid(build_probe(spec), lab);
    psi = apply_plan(std::move(psi), u0_tilde_plan(-p.r0, p, Direction::kForward));
    psi = apply_plan(std::move(psi), u0_compose_plan(-p.r0, -t_star, p));
    const auto ref = sample_to_grid(d.in, lab);
    EXPECT_LT(l2_distance(psi, ref) / norm(ref), 1e-6) << sigma;
  }
}

TEST(Element, ZeroPotentialIsExactlyZero) {
  DecayParams p;
  const ElementEngine engine({}, p, wide_probe_config(0.05));
  const auto r = engine.compute(probe(32, 1.0), 0.3);
  EXPECT_EQ(r.element, cplx(0.0, 0.0));
  EXPECT_EQ(r.scaled, cplx(0.0, 0.0));
  const auto windowed = engine.compute(probe(32, 1.0));
  EXPECT_TRUE(windowed.empty_window);
  EXPECT_EQ(windowed.element, cplx(0.0, 0.0));
}

TEST(Element, FarPotentialGivesEmptyWindow) {
  DecayParams p;
  const PotentialSpec far{{SmoothCompactBump{1.0, {0.0, 30.0}, 1.0}}};
  ScatterConfig cfg = wide_probe_config(0.05);
  cfg.window.rule = WindowRule::kSupport;
  const auto r = scattering_element(probe(32, 0.25), far, p, cfg);
  EXPECT_TRUE(r.empty_window);
  EXPECT_EQ(r.element, cplx(0.0, 0.0));
}

TEST(Element, FreeEvolutionIsCached) {
  DecayParams p;
  const ElementEngine engine(kBump, p, wide_probe_config(0.05));
  engine.compute(probe(32, 1.0), 0.25);
  engine.compute(probe(32, 1.0, {0.0, 0.5}), 0.25);
  EXPECT_EQ(engine.cache_size(), 1u);
}

TEST(Element, FrameMatchesLabGrid) {
  DecayParams p;
  const PotentialSpec weak{{GaussianBump{0.3, {0.2, 0.1}, 0.8}}};
  ScatterConfig cfg = wide_probe_config(1e-2);
  cfg.frame_grid = {2, 128, 8.0};
  const ProbeSpec spec = probe(8, 1.0, {0.0, 0.3});
  const auto frame = ElementEngine(weak, p, cfg).compute(spec, 0.3);
  const auto lab = scattering_element_lab(spec, weak, p, cfg, {2, 192, 10.0}, 0.3);
  EXPECT_LT(std::abs(frame.element - lab.element), 1e-6 * std::abs(lab.element));
}

TEST(Element, WeakBumpMatchesXrayOracle) {
  DecayParams p;
  const PotentialSpec weak{{GaussianBump{0.1, {0.0, 0.0}, 1.0}}};
  const auto r = scattering_element(probe(32, 1.0), weak, p, wide_probe_config(0.02));
  const double oracle = xray_reference(weak, 0.0, 0.0, 1.0);
  EXPECT_LT(std::abs(r.scaled - oracle), 0.05 * oracle);
}

TEST(Element, BornLinearity) {
  DecayParams p;
  const auto cfg = wide_probe_config(0.02);
  const auto spec = probe(32, 1.0, {0.0, 0.3});
  const auto full = scattering_element(spec, kBump, p, cfg);
  const auto half = scattering_element(spec, kBump.scaled(0.5), p, cfg);
  EXPECT_LT(std::abs(2.0 * half.element - full.element), 0.03 * std::abs(full.element));
}

TEST(Element, ImaginaryResidualShrinksWithSpeed) {
  DecayParams p;
  const auto cfg = wide_probe_config(0.02);
  const auto r32 = scattering_element(probe(32, 1.0), kBump, p, cfg);
  const auto r64 = scattering_element(probe(64, 1.0), kBump, p, cfg);
  EXPECT_LE(std::abs(r32.scaled.imag()), 0.1 * std::abs(r32.scaled));
  EXPECT_LT(std::abs(r64.scaled.imag()), std::abs(r32.scaled.imag()));
}

TEST(Element, NaiveSubtractionAgreesAtHighSpeed) {
  DecayParams p;
  auto cfg = wide_probe_config(0.02);
  const auto spec = probe(64, 1.0);
  const auto free = scattering_element(spec, kBump, p, cfg);
  cfg.subtraction = Subtraction::kNaive;
  const auto naive = scattering_element(spec, kBump, p, cfg);
  EXPECT_LT(std::abs(naive.scaled - free.scaled), 0.1 * std::abs(free.scaled));
}

TEST(Fit, RecoversExactModel) {
  const std::vector<double> v{8, 16, 32, 64};
  const cplx a(0.6, -0.1), b(2.0, 0.5);
  std::vector<cplx> s;
  for (double x : v) s.push_back(a + b / x);
  const auto fit = fit_high_velocity(v, s);
  EXPECT_LT(std::abs(fit.limit - a), 1e-12);
  EXPECT_LT(std::abs(fit.slope_coeff - b), 1e-10);
  const auto against = fit_high_velocity(v, s, &a);
  ASSERT_TRUE(against.slope_defined);
  EXPECT_NEAR(against.slope, -1.0, 1e-12);
  EXPECT_TRUE(against.monotone);
}

TEST(Fit, ZeroDataFlagsUndefinedSlope) {
  const auto fit = fit_high_velocity({8, 16, 32}, {0.0, 0.0, 0.0});
  EXPECT_EQ(fit.limit, cplx(0.0, 0.0));
  EXPECT_FALSE(fit.slope_defined);
}

TEST(Fit, NonMonotoneIsFlaggedNotFatal) {
  const cplx ref(1.0, 0.0);
  const auto fit = fit_high_velocity({8, 16, 32}, {1.1, 1.001, 1.05}, &ref);
  EXPECT_FALSE(fit.monotone);
}

TEST(Fit, RejectsBadVelocityLists) {
  EXPECT_THROW(fit_high_velocity({8, 16}, {1.0, 1.0}), ParameterError);
  EXPECT_THROW(fit_high_velocity({8, 32, 16}, {1.0, 1.0, 1.0}), ParameterError);
}

ScanConfig small_scan(int workers = 1) {
  ScanConfig s;
  s.angles = 4;
  s.offsets = 9;
  s.ds = 0.25;
  s.speed = 32.0;
  s.probe_width = 0.5;
  s.workers = workers;
  return s;
}

ScatterConfig scan_config() {
  ScatterConfig cfg;
  cfg.frame_grid = {2, 64, 6.0};
  cfg.dt_constant = 0.1;
  return cfg;
}

TEST(Scan, RotationallySymmetricRowsAgree) {
  DecayParams p;
  const auto sino = sinogram_scan(kBump, p, scan_config(), small_scan());
  ASSERT_EQ(sino.holes, 0);
  double num = 0.0, den = 0.0;
  for (int k = 1; k < sino.num_angles(); ++k)
    for (int m = 0; m < sino.num_offsets(); ++m) {
      num += std::pow(sino.at(k, m) - sino.at(0, m), 2);
      den += std::pow(sino.at(0, m), 2);
    }
  EXPECT_LT(std::sqrt(num / den), 0.02);
}

TEST(Scan, FarOffsetIsZero) {
  DecayParams p;
  const PotentialSpec small{{SmoothCompactBump{0.5, {0.0, 0.0}, 0.5}}};
  auto scan = small_scan();
  scan.offsets = 25;
  const auto sino = sinogram_scan(small, p, scan_config(), scan);
  for (int k = 0; k < sino.num_angles(); ++k) {
    EXPECT_LT(std::abs(sino.at(k, 0)), 1e-6);
    EXPECT_LT(std::abs(sino.at(k, sino.num_offsets() - 1)), 1e-6);
  }
}

TEST(Scan, DeterministicAcrossWorkersAndResume) {
  DecayParams p;
  const PotentialSpec two{{GaussianBump{0.5, {-0.6, 0.2}, 0.7}, GaussianBump{0.4, {0.5, -0.3}, 0.6}}};
  const auto serial = sinogram_scan(two, p, scan_config(), small_scan(1));
  const auto parallel = sinogram_scan(two, p, scan_config(), small_scan(3));
  EXPECT_EQ(serial.values, parallel.values);
  EXPECT_EQ(serial.imag, parallel.imag);

  std::vector<RadonSample> first_half(serial.samples.begin(),
                                      serial.samples.begin() + serial.samples.size() / 2);
  int seen = 0;
  const auto resumed = sinogram_scan(two, p, scan_config(), small_scan(2), first_half,
                                     [&](const RadonSample&) { ++seen; });
  EXPECT_EQ(resumed.values, serial.values);
  EXPECT_EQ(seen, static_cast<int>(serial.samples.size() - first_half.size()));
}

TEST(Scan, FailedSamplesBecomeHoles) {
  DecayParams p;
  auto scan = small_scan();
  scan.speed = 2.0;  // windows reach r0
  const auto sino = sinogram_scan(kBump, p, scan_config(), scan);
  EXPECT_EQ(sino.holes, scan.angles * scan.offsets);
  for (const auto& s : sino.samples) {
    EXPECT_FALSE(s.ok);
    EXPECT_FALSE(s.reason.empty());
    EXPECT_EQ(s.value, cplx(0.0, 0.0));
  }
}

TEST(Scan, ProbeGeometry) {
  const auto spec = scan_probe(small_scan(), std::numbers::pi / 2, 0.5);
  EXPECT_NEAR(spec.velocity[0], 0.0, 1e-12);
  EXPECT_NEAR(spec.velocity[1], 32.0, 1e-12);
  EXPECT_NEAR(spec.center[0], -0.5, 1e-15);
  EXPECT_NEAR(spec.center[1], 0.0, 1e-15);
}

}  // namespace
}  // namespace tdho
