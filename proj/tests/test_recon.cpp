#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "tdho/error.hpp"
#include "tdho/recon.hpp"

namespace tdho {
namespace {

constexpr double kSqrtPi = 1.7724538509055159;
const PotentialSpec kUnit{{GaussianBump{1.0, {0.0, 0.0}, 1.0}}};

// Rows sqrt(pi) exp(-s^2): the exact Radon transform of exp(-|x|^2).
Sinogram gaussian_sinogram(int K, int M, double ds) {
  auto s = Sinogram::make(K, M, ds);
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m) s.at(k, m) = kSqrtPi * std::exp(-s.offsets[m] * s.offsets[m]);
  return s;
}

double masked_relative_l2(const FieldGrid& a, const FieldGrid& b, double radius) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < a.points; ++i)
    for (int j = 0; j < a.points; ++j) {
      if (std::hypot(a.coord(i), a.coord(j)) > radius) continue;
      num += std::pow(a.at(i, j) - b.at(i, j), 2);
      den += std::pow(b.at(i, j), 2);
    }
  return std::sqrt(num / den);
}

TEST(Xray, GaussianLineIntegrals) {
  for (double angle : {0.0, 0.7, 2.1}) {
    EXPECT_NEAR(xray_reference(kUnit, angle, 0.0, 0.0), kSqrtPi, 1e-8);
    EXPECT_NEAR(xray_reference(kUnit, angle, 0.8, 0.0), kSqrtPi * std::exp(-0.64), 1e-8);
  }
}

TEST(Xray, FiniteWidthIsGaussianConvolution) {
  // sqrt(pi) e^{-s^2} smeared by e^{-u^2/w^2}/(w sqrt(pi)).
  for (double w : {0.25, 1.0})
    for (double s : {0.0, 0.5, 1.3}) {
      const double q = 1.0 + w * w;
      EXPECT_NEAR(xray_reference(kUnit, 0.3, s, w), kSqrtPi / std::sqrt(q) * std::exp(-s * s / q),
                  1e-8);
    }
}

TEST(Xray, MatchesBruteForceGrid) {
  const PotentialSpec bump{{SmoothCompactBump{0.8, {0.3, -0.2}, 1.5}}};
  const double angle = 0.4, offset = 0.35, w = 0.3;
  const double d[2] = {std::cos(angle), std::sin(angle)}, nrm[2] = {-d[1], d[0]};
  // Riemann sum of V(x) |Phi_0|^2 integrated along d; transversal weight is
  // the normalized 1-D Gaussian in the normal coordinate.
  const int N = 1024;
  const double L = 3.0, h = 2 * L / N;
  double sum = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const double x[2] = {-L + (i + 0.5) * h, -L + (j + 0.5) * h};
      const double u = x[0] * nrm[0] + x[1] * nrm[1] - offset;
      sum += evaluate_potential(bump, x) * std::exp(-u * u / (w * w)) / (w * kSqrtPi);
    }
  EXPECT_NEAR(xray_reference(bump, angle, offset, w), sum * h * h, 1e-6);
}

TEST(Xray, LinearAndRotationInvariant) {
  const PotentialSpec a{{GaussianBump{0.5, {0.4, 0.1}, 0.7}}};
  const PotentialSpec b{{SmoothCompactBump{0.3, {-0.5, 0.2}, 1.0}}};
  PotentialSpec ab = a;
  ab.components.push_back(b.components[0]);
  const double va = xray_reference(a, 0.5, 0.2, 0.25), vb = xray_reference(b, 0.5, 0.2, 0.25);
  EXPECT_NEAR(xray_reference(ab, 0.5, 0.2, 0.25), va + vb, 1e-12);
  EXPECT_NEAR(xray_reference(a.scaled(2.5), 0.5, 0.2, 0.25), 2.5 * va, 1e-12);

  const double phi = 0.9, c = std::cos(phi), s = std::sin(phi);
  const PotentialSpec rot{{GaussianBump{0.5, {c * 0.4 - s * 0.1, s * 0.4 + c * 0.1}, 0.7},
                           SmoothCompactBump{0.3, {-c * 0.5 - s * 0.2, -s * 0.5 + c * 0.2}, 1.0}}};
  EXPECT_NEAR(xray_reference(rot, 0.5 + phi, 0.2, 0.25), va + vb, 1e-8);
}

TEST(Fbp, ZeroSinogramGivesZeroField) {
  const auto f = fbp_invert(Sinogram::make(32, 33, 0.2));
  for (double v : f.values) EXPECT_EQ(v, 0.0);
}

TEST(Fbp, RecoversUnitGaussian) {
  const auto f = fbp_invert(gaussian_sinogram(64, 129, 0.1), {128, 4.0, true});
  EXPECT_LE(masked_relative_l2(f, sample_field(kUnit, 128, 4.0), 2.0), 0.08);
}

TEST(Fbp, SmoothCompactPhantomRegression) {
  const PotentialSpec phantom{{SmoothCompactBump{1.0, {0.5, -0.3}, 1.2},
                               SmoothCompactBump{0.6, {-0.8, 0.6}, 0.9}}};
  const auto sino = xray_sinogram(phantom, 64, 129, 0.05, 0.0);
  const auto f = fbp_invert(sino, {128, 4.0, true});
  const auto truth = sample_field(phantom, 128, 4.0);
  const auto m = compare_potentials(f, truth, support_mask(phantom, truth));
  EXPECT_LE(m.relative_l2, 0.10);
}

TEST(Fbp, QuarterTurnEquivariance) {
  const PotentialSpec phantom{{GaussianBump{1.0, {0.7, -0.2}, 0.6},
                               GaussianBump{0.5, {-0.4, 0.9}, 0.4}}};
  const int K = 64, M = 65;
  const auto sino = xray_sinogram(phantom, K, M, 0.1, 0.0);
  // Rotating V by pi/2 shifts rows by K/2; rows that wrap past pi flip s.
  Sinogram rot = sino;
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m)
      rot.at(k, m) = k >= K / 2 ? sino.at(k - K / 2, m) : sino.at(k + K / 2, M - 1 - m);
  const auto f = fbp_invert(sino, {64, 4.0, true});
  const auto g = fbp_invert(rot, {64, 4.0, true});
  double worst = 0.0;
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) worst = std::max(worst, std::abs(g.at(i, j) - f.at(j, 63 - i)));
  EXPECT_LT(worst, 1e-10);
}

TEST(Fbp, SerialAndParallelAgreeBitwise) {
  const auto sino = gaussian_sinogram(48, 65, 0.125);
  EXPECT_EQ(fbp_invert(sino).values, serial::fbp_invert(sino).values);
}

TEST(Fbp, InsufficientCoverageNamesRequirement) {
  try {
    fbp_invert(Sinogram::make(16, 65, 0.1));
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("K >= 32"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("M >= 33"), std::string::npos);
  }
}

TEST(Deconvolve, IdentityLimits) {
  const auto sino = gaussian_sinogram(4, 65, 0.1);
  for (const auto& out : {deconvolve_smear(sino, 1e-9, 1e-3),
                          deconvolve_smear(sino, 0.5, std::numeric_limits<double>::infinity())})
    for (std::size_t i = 0; i < sino.values.size(); ++i)
      EXPECT_NEAR(out.values[i], sino.values[i], 1e-10);
  EXPECT_THROW(deconvolve_smear(sino, 0.5, 0.0), ParameterError);
}

TEST(Deconvolve, RecoversUnblurredWidth) {
  // Width-1 Gaussian rows blurred by w = 0.5 have variance (1 + w^2)/2.
  const double w = 0.5;
  auto blurred = Sinogram::make(2, 257, 0.05);
  const double q = 1.0 + w * w;
  for (int k = 0; k < 2; ++k)
    for (int m = 0; m < 257; ++m) {
      const double s = blurred.offsets[m];
      blurred.at(k, m) = kSqrtPi / std::sqrt(q) * std::exp(-s * s / q);
    }
  const auto out = deconvolve_smear(blurred, w, 1e-3);
  double mass = 0.0, second = 0.0;
  for (int m = 0; m < 257; ++m) {
    mass += out.at(0, m);
    second += out.at(0, m) * out.offsets[m] * out.offsets[m];
  }
  EXPECT_NEAR(std::sqrt(2.0 * second / mass), 1.0, 0.03);
}

TEST(Deconvolve, GainBoundedByInverseEps) {
  // A single spike contains every mode; no output mode may exceed 1/eps times it.
  auto s = Sinogram::make(1, 64, 0.1);
  s.at(0, 32) = 1.0;
  const double eps = 1e-2;
  const auto out = deconvolve_smear(s, 1.0, eps);
  double peak = 0.0;
  for (double v : out.values) peak = std::max(peak, std::abs(v));
  EXPECT_LE(peak, 1.0 / eps);
}

TEST(Metrics, IdenticalAndScaledFields) {
  const auto f = sample_field(kUnit, 64, 3.0);
  const auto mask = support_mask(kUnit, f);
  const auto same = compare_potentials(f, f, mask);
  EXPECT_EQ(same.relative_l2, 0.0);
  EXPECT_EQ(same.linf, 0.0);
  auto scaled = f;
  for (double& v : scaled.values) v *= 0.7;
  EXPECT_NEAR(compare_potentials(scaled, f, mask).relative_l2, 0.3, 1e-12);
}

TEST(Metrics, SinogramDistance) {
  const auto a = gaussian_sinogram(4, 9, 0.5);
  auto b = a;
  for (double& v : b.values) v += 0.1;
  EXPECT_NEAR(sinogram_rms_distance(a, b), 0.1, 1e-12);
  EXPECT_EQ(sinogram_rms_distance(a, a), 0.0);
  EXPECT_THROW(sinogram_rms_distance(a, gaussian_sinogram(4, 11, 0.5)), UsageError);
}

TEST(Metrics, MaskCoversSupports) {
  const PotentialSpec p{{SmoothCompactBump{1.0, {1.0, 0.0}, 0.5}}};
  const auto f = FieldGrid::zeros(40, 2.0);
  const auto mask = support_mask(p, f);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j)
      EXPECT_EQ(static_cast<bool>(mask[i * 40 + j]),
                std::hypot(f.coord(i) - 1.0, f.coord(j)) <= 0.5);
}

class Writers : public ::testing::Test {
 protected:
  std::filesystem::path dir = std::filesystem::temp_directory_path() / "tdho_recon_test";
  void SetUp() override { std::filesystem::create_directories(dir); }
  void TearDown() override { std::filesystem::remove_all(dir); }
};

TEST_F(Writers, PgmIsBitExact) {
  auto f = FieldGrid::zeros(2, 1.0);
  f.at(0, 0) = -1.0;  // min
  f.at(1, 0) = 1.0;   // max
  f.at(0, 1) = 0.0;   // 127.5 rounds up
  f.at(1, 1) = -0.5;  // 63.75
  const auto path = (dir / "f.pgm").string();
  write_pgm(f, path);
  std::ifstream in(path, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), {});
  const std::string header = "P5\n2 2\n255\n";
  ASSERT_EQ(bytes.size(), header.size() + 4);
  EXPECT_EQ(bytes.substr(0, header.size()), header);
  // Row 0 is j = 1, row 1 is j = 0.
  const unsigned char expected[4] = {128, 64, 0, 255};
  for (int i = 0; i < 4; ++i)
    EXPECT_EQ(static_cast<unsigned char>(bytes[header.size() + i]), expected[i]) << i;
}

TEST_F(Writers, FieldAndSinogramRoundTrip) {
  const auto f = sample_field(kUnit, 16, 2.0);
  const auto fp = (dir / "field.bin").string();
  write_field_binary(f, fp);
  const auto g = read_field_binary(fp);
  EXPECT_EQ(g.points, f.points);
  EXPECT_EQ(g.half_width, f.half_width);
  EXPECT_EQ(g.values, f.values);
  write_field_csv(f, (dir / "field.csv").string());
  EXPECT_TRUE(std::filesystem::exists(dir / "field.csv"));

  auto s = gaussian_sinogram(3, 5, 0.25);
  s.speed = 32.0;
  s.probe_width = 0.25;
  s.errors[2] = 1e-3;
  const auto stem = (dir / "sino").string();
  write_sinogram(s, stem);
  const auto r = read_sinogram(stem);
  EXPECT_EQ(r.values, s.values);
  EXPECT_EQ(r.angles, s.angles);
  EXPECT_EQ(r.offsets, s.offsets);
  EXPECT_EQ(r.ds, s.ds);
  EXPECT_EQ(r.speed, s.speed);
  EXPECT_EQ(r.probe_width, s.probe_width);
  EXPECT_THROW(read_sinogram((dir / "missing").string()), Error);
}

}  // namespace
}  // namespace tdho
