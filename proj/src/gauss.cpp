#include "tdho/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "tdho/error.hpp"

namespace tdho {

namespace {
constexpr double kCausticTol = 1e-8;
constexpr double kSampleWidths = 6.0;
constexpr double kMaxHarmonicPiece = std::numbers::pi / 4.0;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
}  // namespace

SymplecticMap operator*(const SymplecticMap& m2, const SymplecticMap& m1) {
  return {m2.a * m1.a + m2.b * m1.c, m2.a * m1.b + m2.b * m1.d,
          m2.c * m1.a + m2.d * m1.c, m2.c * m1.b + m2.d * m1.d, m2.phase + m1.phase};
}

SymplecticMap flow_harmonic(double dt, double omega) {
  const double c = std::cos(omega * dt), s = std::sin(omega * dt);
  return {c, s / omega, -omega * s, c};
}

SymplecticMap flow_decay(double t0, double t1, const DecayParams& params) {
  const double r0 = params.r0;
  const bool positive = t0 >= r0 && t1 >= r0;
  const bool negative = t0 <= -r0 && t1 <= -r0;
  if (!positive && !negative)
    throw DomainError("flow_decay: interval must lie in t >= r0 or t <= -r0");
  if (t0 == t1) return {};
  const double lam = params.lambda();
  const double sg = positive ? 1.0 : -1.0;
  // Fundamental solutions |t|^(1-lambda), |t|^lambda and their t-derivatives.
  auto fund = [&](double t, double& f1, double& f2, double& g1, double& g2) {
    const double u = std::abs(t);
    f1 = std::pow(u, 1.0 - lam);
    f2 = std::pow(u, lam);
    g1 = sg * (1.0 - lam) * std::pow(u, -lam);
    g2 = sg * lam * std::pow(u, lam - 1.0);
  };
  double f1a, f2a, g1a, g2a, f1b, f2b, g1b, g2b;
  fund(t0, f1a, f2a, g1a, g2a);
  fund(t1, f1b, f2b, g1b, g2b);
  const double w = f1a * g2a - f2a * g1a;  // sg (2 lambda - 1)
  // Phi(t1) Phi(t0)^{-1}
  return {(f1b * g2a - f2b * g1a) / w, (-f1b * f2a + f2b * f1a) / w,
          (g1b * g2a - g2b * g1a) / w, (-g1b * f2a + g2b * f1a) / w};
}

SymplecticMap flow_free(double tau) { return {1.0, tau, 0.0, 1.0}; }
SymplecticMap flow_quadratic_phase(double c) { return {1.0, 0.0, c, 1.0}; }
SymplecticMap flow_dilation(double theta) {
  return {std::exp(theta), 0.0, 0.0, std::exp(-theta)};
}

std::vector<SymplecticMap> flow_h0_pieces(double t0, double t1, const DecayParams& params) {
  std::vector<SymplecticMap> pieces;
  if (t0 == t1) return pieces;
  const double r0 = params.r0;
  const double dir = t1 > t0 ? 1.0 : -1.0;
  std::vector<double> cuts{t0};
  for (double c : {-r0, r0}) {
    if ((c - t0) * dir > 0.0 && (t1 - c) * dir > 0.0) cuts.push_back(c);
  }
  if (dir < 0.0) std::sort(cuts.begin() + 1, cuts.end(), std::greater<>());
  cuts.push_back(t1);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    const double mid = 0.5 * (a + b);
    if (std::abs(mid) < r0) {
      const double span = params.omega * std::abs(b - a);
      const int m = std::max(1, static_cast<int>(std::ceil(span / kMaxHarmonicPiece)));
      for (int k = 0; k < m; ++k) pieces.push_back(flow_harmonic((b - a) / m, params.omega));
    } else {
      pieces.push_back(flow_decay(a, b, params));
    }
  }
  return pieces;
}

SymplecticMap flow_h0(double t0, double t1, const DecayParams& params) {
  SymplecticMap m;
  for (const auto& p : flow_h0_pieces(t0, t1, params)) m = p * m;
  return m;
}

GaussianState make_gaussian(std::span<const double> y, std::span<const double> v, double w) {
  if (!(w > 0.0)) throw ParameterError("gaussian width must be positive");
  GaussianState g;
  g.center.assign(y.begin(), y.end());
  g.momentum.assign(y.size(), 0.0);
  g.width = cplx(0.0, 1.0 / (w * w));
  const double n = static_cast<double>(y.size());
  g.gamma = cplx(0.0, 0.25 * n * std::log(std::numbers::pi * w * w));
  return gaussian_boost(g, v);
}

cplx evaluate(const GaussianState& g, std::span<const double> x) {
  double r2 = 0.0, lin = 0.0;
  for (int a = 0; a < g.dim(); ++a) {
    const double dxa = x[a] - g.center[a];
    r2 += dxa * dxa;
    lin += g.momentum[a] * dxa;
  }
  return std::exp(cplx(0.0, 1.0) * (0.5 * g.width * r2 + lin + g.gamma));
}

double norm2(const GaussianState& g) {
  return std::exp(-2.0 * g.gamma.imag()) *
         std::pow(std::numbers::pi / g.width.imag(), 0.5 * g.dim());
}

GaussianState gaussian_apply(const SymplecticMap& m, const GaussianState& g) {
  const cplx denom = m.a + m.b * g.width;
  if (std::abs(denom) < kCausticTol)
    throw CausticError("gaussian_apply: caustic, split the interval");
  GaussianState out;
  const int n = g.dim();
  out.center.resize(n);
  out.momentum.resize(n);
  for (int k = 0; k < n; ++k) {
    out.center[k] = m.a * g.center[k] + m.b * g.momentum[k];
    out.momentum[k] = m.c * g.center[k] + m.d * g.momentum[k];
  }
  out.width = (m.c + m.d * g.width) / denom;
  out.gamma = g.gamma + 0.5 * (dot(out.momentum, out.center) - dot(g.momentum, g.center)) +
              cplx(0.0, 0.5 * n) * std::log(denom) + m.phase;
  return out;
}

GaussianState gaussian_apply(std::span<const SymplecticMap> pieces, const GaussianState& g) {
  GaussianState out = g;
  for (const auto& m : pieces) out = gaussian_apply(m, out);
  return out;
}

GaussianState gaussian_boost(const GaussianState& g, std::span<const double> v) {
  GaussianState out = g;
  for (int k = 0; k < g.dim(); ++k) out.momentum[k] += v[k];
  out.gamma += dot(v, g.center);
  return out;
}

GaussianState gaussian_translate(const GaussianState& g, std::span<const double> a) {
  GaussianState out = g;
  for (int k = 0; k < g.dim(); ++k) out.center[k] += a[k];
  return out;
}

GaussianState gaussian_scale(const GaussianState& g, cplx factor) {
  GaussianState out = g;
  out.gamma += -cplx(0.0, 1.0) * std::log(factor);
  return out;
}

WaveFunction sample_to_grid(const GaussianState& g, const GridSpec& grid) {
  if (g.dim() != grid.n) throw UsageError("sample_to_grid: dimension mismatch");
  if (!(g.width.imag() > 0.0)) throw DomainError("sample_to_grid: Im(width) must be positive");
  const double reach = kSampleWidths * g.envelope_width();
  double needed = 0.0;
  for (double c : g.center) needed = std::max(needed, std::abs(c) + reach);
  if (needed > grid.half_width - grid.dx())
    throw GridOverflow("sample_to_grid: packet does not fit the grid", needed + grid.dx());
  return sample(grid, [&](std::span<const double> x) { return evaluate(g, x); });
}

cplx overlap(const GaussianState& g1, const GaussianState& g2) {
  const cplx I(0.0, 1.0);
  const cplx a1c = std::conj(g1.width), a2 = g2.width;
  const cplx alpha = -0.5 * I * (a2 - a1c);
  cplx log_sum = I * (g2.gamma - std::conj(g1.gamma));
  for (int k = 0; k < g1.dim(); ++k) {
    const double x1 = g1.center[k], x2 = g2.center[k];
    const double p1 = g1.momentum[k], p2 = g2.momentum[k];
    const cplx beta = I * (a1c * x1 - a2 * x2 + p2 - p1);
    const cplx kappa = I * (0.5 * a2 * x2 * x2 - 0.5 * a1c * x1 * x1 - p2 * x2 + p1 * x1);
    log_sum += 0.5 * std::log(std::numbers::pi / alpha) + beta * beta / (4.0 * alpha) + kappa;
  }
  return std::exp(log_sum);
}

}  // namespace tdho
