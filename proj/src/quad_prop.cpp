#include "tdho/quad_prop.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tdho/error.hpp"
#include "tdho/kernels.hpp"

namespace tdho {

namespace {

constexpr double kMaxMehlerPiece = std::numbers::pi / 4.0;

SymplecticMap factor_map(const Factor& f) {
  switch (f.kind) {
    case FactorKind::kQuadraticPhase: return flow_quadratic_phase(f.value);
    case FactorKind::kDilation: return flow_dilation(f.value);
    case FactorKind::kFreeFlow: return flow_free(f.value);
  }
  return {};
}

const char* factor_name(FactorKind k) {
  switch (k) {
    case FactorKind::kQuadraticPhase: return "quadratic_phase";
    case FactorKind::kDilation: return "dilation";
    case FactorKind::kFreeFlow: return "free_flow";
  }
  return "?";
}

std::vector<double> region_cuts(double t0, double t1, double r0) {
  const double dir = t1 > t0 ? 1.0 : -1.0;
  std::vector<double> cuts{t0};
  std::vector<double> inner;
  for (double c : {-r0, r0})
    if ((c - t0) * dir > 0.0 && (t1 - c) * dir > 0.0) inner.push_back(c);
  if (dir < 0.0) std::reverse(inner.begin(), inner.end());
  cuts.insert(cuts.end(), inner.begin(), inner.end());
  cuts.push_back(t1);
  return cuts;
}

}  // namespace

// --- plans -------------------------------------------------------------------

void QuadStepPlan::push(FactorKind kind, double value) {
  if (value == 0.0) return;
  if (!factors_.empty() && factors_.back().kind == kind) {
    factors_.back().value += value;
    if (factors_.back().value == 0.0) factors_.pop_back();
    return;
  }
  factors_.push_back({kind, value});
}

void QuadStepPlan::append(const QuadStepPlan& later) {
  for (const auto& f : later.factors_) push(f.kind, f.value);
}

std::vector<SymplecticMap> QuadStepPlan::maps() const {
  std::vector<SymplecticMap> out;
  out.reserve(factors_.size());
  for (const auto& f : factors_) out.push_back(factor_map(f));
  return out;
}

SymplecticMap QuadStepPlan::map() const {
  SymplecticMap m;
  for (const auto& f : factors_) m = factor_map(f) * m;
  return m;
}

std::string QuadStepPlan::audit() const {
  if (factors_.empty()) return "identity";
  std::ostringstream os;
  os.precision(12);
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (i) os << " -> ";
    os << factor_name(factors_[i].kind) << '(' << factors_[i].value << ')';
  }
  return os.str();
}

QuadStepPlan mehler_plan(double t0, double t1, const DecayParams& params) {
  const double r0 = params.r0;
  if (std::abs(t0) > r0 || std::abs(t1) > r0)
    throw DomainError("mehler_evolve: interval leaves the harmonic region |t| <= r0");
  QuadStepPlan plan;
  if (t0 == t1) return plan;
  const double w = params.omega;
  const int m = std::max(1, static_cast<int>(std::ceil(w * std::abs(t1 - t0) / kMaxMehlerPiece)));
  const double delta = (t1 - t0) / m;
  const double tn = std::tan(w * delta);
  for (int k = 0; k < m; ++k) {
    plan.push(FactorKind::kFreeFlow, tn / w);
    plan.push(FactorKind::kDilation, std::log(std::cos(w * delta)));
    plan.push(FactorKind::kQuadraticPhase, -w * tn);
  }
  return plan;
}

QuadStepPlan u0_tilde_plan(double t, const DecayParams& params, Direction dir) {
  if (std::abs(t) < params.r0) {
    return dir == Direction::kForward ? mehler_plan(0.0, t, params) : mehler_plan(t, 0.0, params);
  }
  const double lam = params.lambda();
  const double u = std::abs(t);
  const double sg = t > 0.0 ? 1.0 : -1.0;
  const double tau = sg * std::pow(u, 1.0 - 2.0 * lam) / (1.0 - 2.0 * lam);
  const double theta = lam * std::log(u);
  const double c = lam / t;
  QuadStepPlan plan;
  if (dir == Direction::kForward) {
    plan.push(FactorKind::kFreeFlow, tau);
    plan.push(FactorKind::kDilation, theta);
    plan.push(FactorKind::kQuadraticPhase, c);
  } else {
    plan.push(FactorKind::kQuadraticPhase, -c);
    plan.push(FactorKind::kDilation, -theta);
    plan.push(FactorKind::kFreeFlow, -tau);
  }
  return plan;
}

QuadStepPlan u0_compose_plan(double t0, double t1, const DecayParams& params) {
  QuadStepPlan plan;
  if (t0 == t1) return plan;
  const double r0 = params.r0;
  const auto cuts = region_cuts(t0, t1, r0);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (std::abs(0.5 * (a + b)) < r0) {
      plan.append(mehler_plan(a, b, params));
    } else {
      plan.append(u0_tilde_plan(a, params, Direction::kAdjoint));
      plan.append(u0_tilde_plan(b, params, Direction::kForward));
    }
  }
  return plan;
}

QuadStepPlan shear_plan(const SymplecticMap& m) {
  if (m.b == 0.0) throw DomainError("shear_plan: map with b == 0 has no three-shear lift");
  QuadStepPlan plan;
  plan.push(FactorKind::kQuadraticPhase, (m.a - 1.0) / m.b);
  plan.push(FactorKind::kFreeFlow, m.b);
  plan.push(FactorKind::kQuadraticPhase, (m.d - 1.0) / m.b);
  return plan;
}

// --- application -------------------------------------------------------------

WaveFunction apply_plan(WaveFunction psi, const QuadStepPlan& plan) {
  for (const auto& f : plan.factors()) {
    switch (f.kind) {
      case FactorKind::kQuadraticPhase: psi = quadratic_phase(std::move(psi), f.value); break;
      case FactorKind::kDilation: psi = dilation(std::move(psi), f.value); break;
      case FactorKind::kFreeFlow: psi = free_flow(std::move(psi), f.value); break;
    }
  }
  return psi;
}

GaussianState apply_plan(const GaussianState& g, const QuadStepPlan& plan) {
  GaussianState out = g;
  for (const auto& f : plan.factors()) out = gaussian_apply(factor_map(f), out);
  return out;
}

void preflight(const GaussianState& g, const QuadStepPlan& plan, const GridSpec& grid) {
  GaussianState cur = g;
  auto fits = [&](const GaussianState& s) {
    double need = 0.0;
    for (double c : s.center) need = std::max(need, std::abs(c) + 6.0 * s.envelope_width());
    if (need > grid.half_width)
      throw GridOverflow(
          "packet leaves the grid along the propagator path; use the Gaussian route or a "
          "larger half-width",
          need);
  };
  fits(cur);
  for (const auto& f : plan.factors()) {
    cur = gaussian_apply(factor_map(f), cur);
    fits(cur);
  }
}

WaveFunction mehler_evolve(WaveFunction psi, double t0, double t1, const DecayParams& params) {
  return apply_plan(std::move(psi), mehler_plan(t0, t1, params));
}

WaveFunction u0_tilde(WaveFunction psi, double t, const DecayParams& params, Direction dir) {
  return apply_plan(std::move(psi), u0_tilde_plan(t, params, dir));
}

WaveFunction u0_compose(WaveFunction psi, double t0, double t1, const DecayParams& params) {
  return apply_plan(std::move(psi), u0_compose_plan(t0, t1, params));
}

// --- reference integrator --------------------------------------------------

namespace reference {

namespace {

void strang_h0(WaveFunction& psi, double t, double h, const DecayParams& params,
               const std::vector<double>& r2) {
  psi = free_flow(std::move(psi), 0.5 * h);
  const double k = k_coeff(t + 0.5 * h, params);
  kernels::multiply_scaled_phase(psi.values(), r2, -0.5 * k * h);
  psi = free_flow(std::move(psi), 0.5 * h);
}

}  // namespace

WaveFunction split_step_h0(WaveFunction psi, double t0, double t1, double dt,
                           const DecayParams& params) {
  if (!(dt > 0.0)) throw ParameterError("split_step_h0: dt > 0 required");
  const auto& g = psi.grid();
  std::vector<double> r2(psi.size());
  {
    std::vector<int> idx(g.n, 0);
    for (std::size_t flat = 0; flat < psi.size(); ++flat) {
      double s = 0.0;
      for (int a = 0; a < g.n; ++a) s += g.x(idx[a]) * g.x(idx[a]);
      r2[flat] = s;
      for (int a = g.n - 1; a >= 0; --a) {
        if (++idx[a] < g.points) break;
        idx[a] = 0;
      }
    }
  }
  const double cbrt2 = std::cbrt(2.0);
  const double w1 = 1.0 / (2.0 - cbrt2);
  const double w0 = -cbrt2 / (2.0 - cbrt2);
  const auto cuts = region_cuts(t0, t1, params.r0);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(b - a) / dt)));
    const double h = (b - a) / steps;
    for (int s = 0; s < steps; ++s) {
      const double t = a + s * h;
      strang_h0(psi, t, w1 * h, params, r2);
      strang_h0(psi, t + w1 * h, w0 * h, params, r2);
      strang_h0(psi, t + (w1 + w0) * h, w1 * h, params, r2);
    }
  }
  return psi;
}

}  // namespace reference

}  // namespace tdho
