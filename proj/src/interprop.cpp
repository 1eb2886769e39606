#include "tdho/interprop.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tdho/error.hpp"
#include "tdho/kernels.hpp"
#include "tdho/quad_prop.hpp"

namespace tdho {

namespace {

struct SampleVisitor {
  const GridSpec& grid;
  std::span<const double> shift;
  std::span<double> out;
  double clamp;

  // Indices i with |x_i + shift - c| < r on one axis.
  std::pair<int, int> index_range(double c, double s, double r) const {
    const double last = grid.points - 1;
    const double lo = std::clamp((c - s - r + grid.half_width) / grid.dx(), -1.0, last + 1.0);
    const double hi = std::clamp((c - s + r + grid.half_width) / grid.dx(), -1.0, last + 1.0);
    const int i0 = std::max(0, static_cast<int>(std::floor(lo)));
    const int i1 = std::min(grid.points - 1, static_cast<int>(std::ceil(hi)));
    return {i0, i1};
  }

  void box(const PotentialComponent& comp, const Vec& center, double radius) const {
    const int n = grid.n;
    std::vector<std::pair<int, int>> range(n);
    for (int a = 0; a < n; ++a) {
      range[a] = index_range(center[a], shift[a], radius);
      if (range[a].first > range[a].second) return;
    }
    std::vector<int> idx(n);
    for (int a = 0; a < n; ++a) idx[a] = range[a].first;
    Vec x(n);
    while (true) {
      std::size_t flat = 0;
      for (int a = 0; a < n; ++a) {
        x[a] = grid.x(idx[a]) + shift[a];
        flat = flat * grid.points + idx[a];
      }
      out[flat] += evaluate_component(comp, x, clamp);
      int a = n - 1;
      for (; a >= 0; --a) {
        if (++idx[a] <= range[a].second) break;
        idx[a] = range[a].first;
      }
      if (a < 0) break;
    }
  }

  void operator()(const GaussianBump& g) const {
    const int n = grid.n;
    const Vec c = component_center(g, n);
    std::vector<double> acc(1, g.amplitude);
    for (int a = 0; a < n; ++a) {
      std::vector<double> f(grid.points);
      for (int i = 0; i < grid.points; ++i) {
        const double d = (grid.x(i) + shift[a] - c[a]) / g.width;
        f[i] = std::exp(-d * d);
      }
      if (a == n - 1) {
        // Last axis: accumulate straight into out.
        kernels::add_outer(out, acc, f, 1.0);
      } else {
        std::vector<double> next(acc.size() * f.size());
        for (std::size_t i = 0; i < acc.size(); ++i)
          for (std::size_t j = 0; j < f.size(); ++j) next[i * f.size() + j] = acc[i] * f[j];
        acc = std::move(next);
      }
    }
  }
  void operator()(const SmoothCompactBump& b) const {
    box(b, component_center(b, grid.n), b.radius);
  }
  void operator()(const TruncatedSingular& s) const {
    box(s, component_center(s, grid.n), s.radius);
  }
  void operator()(const PowerTail& p) const {
    box(p, Vec(grid.n, 0.0), std::numeric_limits<double>::infinity());
  }
};

std::vector<double> radius_squared(const GridSpec& g) {
  std::vector<double> r2(g.size());
  std::vector<int> idx(g.n, 0);
  for (std::size_t flat = 0; flat < r2.size(); ++flat) {
    double s = 0.0;
    for (int a = 0; a < g.n; ++a) s += g.x(idx[a]) * g.x(idx[a]);
    r2[flat] = s;
    for (int a = g.n - 1; a >= 0; --a) {
      if (++idx[a] < g.points) break;
      idx[a] = 0;
    }
  }
  return r2;
}

// exp(-i tau xi^2 / 2) / points^n in FFT order, for the spectral free flow.
fft::CVec kinetic_factor(const GridSpec& g, double tau) {
  std::vector<cplx> f(g.points);
  for (int k = 0; k < g.points; ++k)
    f[k] = std::polar(1.0 / g.points, -0.5 * tau * g.xi(k) * g.xi(k));
  fft::CVec out(1, cplx(1.0, 0.0));
  for (int a = 0; a < g.n; ++a) {
    fft::CVec next(out.size() * f.size());
    for (std::size_t i = 0; i < out.size(); ++i)
      for (std::size_t j = 0; j < f.size(); ++j) next[i * f.size() + j] = out[i] * f[j];
    out = std::move(next);
  }
  return out;
}

double resolve_clamp(const EvolveConfig& cfg, const GridSpec& g) {
  return cfg.clamp > 0.0 ? cfg.clamp : 1.0 / g.dx();
}

// Strang steps over [a, b] (inside one region of k), with the diagonal
// factors of neighbouring steps merged into one phase multiplication.
void run_segment(WaveFunction& psi, double a, double b, int steps, const PotentialSampler& sampler,
                 const DecayParams& params, const EvolveConfig& cfg, const FrameFn& frame,
                 const std::vector<double>& r2, long& step_counter) {
  const auto& g = psi.grid();
  const auto dims = g.dims();
  const double h = (b - a) / steps;
  const std::size_t size = psi.size();
  const bool has_v = !sampler.empty();
  const bool moving = static_cast<bool>(frame);
  const Vec zero(g.n, 0.0);

  std::vector<double> v(has_v ? size : 0), pending(size, 0.0);
  auto sample_v = [&](double t) {
    std::fill(v.begin(), v.end(), 0.0);
    const Vec shift = moving ? frame(t) : zero;
    sampler.sample(shift, v);
  };
  if (has_v) {
    sample_v(a);
    for (std::size_t i = 0; i < size; ++i) pending[i] = -0.5 * h * v[i];
  }

  double cached_tau = std::numeric_limits<double>::quiet_NaN();
  fft::CVec kin;
  for (int s = 0; s < steps; ++s) {
    const double tau = a + s * h;
    const SymplecticMap m = flow_h0(tau, tau + h, params);
    const double c1 = (m.a - 1.0) / m.b, c2 = (m.d - 1.0) / m.b;
    for (std::size_t i = 0; i < size; ++i) pending[i] += 0.5 * c1 * r2[i];
    kernels::multiply_phase(psi.values(), pending);
    if (m.b != cached_tau) {
      kin = kinetic_factor(g, m.b);
      cached_tau = m.b;
    }
    fft::transform(psi.values(), dims, fft::Direction::kForward);
    kernels::multiply(psi.values(), kin);
    fft::transform(psi.values(), dims, fft::Direction::kBackward);

    const bool last = s + 1 == steps;
    // Static potentials need only one sample.
    if (has_v && moving) sample_v(tau + h);
    const double weight = last ? 0.5 * h : h;
    for (std::size_t i = 0; i < size; ++i)
      pending[i] = 0.5 * c2 * r2[i] - (has_v ? weight * v[i] : 0.0);

    if (cfg.monitor_every > 0 && ++step_counter % cfg.monitor_every == 0)
      check_on_grid(psi, "evolve", cfg.monitor_tol);
  }
  kernels::multiply_phase(psi.values(), pending);
}

WaveFunction evolve_impl(WaveFunction psi, double t0, double t1, const EvolveConfig& cfg,
                         const PotentialSpec& potential, const DecayParams& params,
                         const FrameFn& frame, int forced_steps) {
  if (psi.space() != Space::kPosition) throw UsageError("evolve: expected position-space data");
  if (t0 == t1) return psi;
  const auto& g = psi.grid();
  const PotentialSampler sampler(potential, g, resolve_clamp(cfg, g));
  const auto r2 = radius_squared(g);

  const double r0 = params.r0;
  const double dir = t1 > t0 ? 1.0 : -1.0;
  std::vector<double> cuts{t0};
  std::vector<double> inner;
  for (double c : {-r0, r0})
    if ((c - t0) * dir > 0.0 && (t1 - c) * dir > 0.0) inner.push_back(c);
  if (dir < 0.0) std::reverse(inner.begin(), inner.end());
  cuts.insert(cuts.end(), inner.begin(), inner.end());
  cuts.push_back(t1);

  if (forced_steps > 0 && cuts.size() > 2)
    throw DomainError("strang_step: step straddles +-r0");

  long counter = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    const int steps = forced_steps > 0
                          ? forced_steps
                          : std::max(1, static_cast<int>(std::ceil(std::abs(b - a) / cfg.dt)));
    run_segment(psi, a, b, steps, sampler, params, cfg, frame, r2, counter);
  }
  return psi;
}

}  // namespace

void EvolveConfig::validate() const {
  if (!(dt > 0.0)) throw ParameterError("evolve: dt > 0 required");
  if (!(tol_window > 0.0 && tol_window < 1.0))
    throw ParameterError("evolve: 0 < tol_window < 1 required");
}

PotentialSampler::PotentialSampler(const PotentialSpec& spec, const GridSpec& grid, double clamp)
    : spec_(spec), grid_(grid), clamp_(clamp) {}

void PotentialSampler::sample(std::span<const double> shift, std::span<double> out) const {
  const SampleVisitor visitor{grid_, shift, out, clamp_};
  for (const auto& c : spec_.components) std::visit(visitor, c);
}

WaveFunction strang_step(WaveFunction psi, double tau, double dt, const PotentialSpec& potential,
                         const DecayParams& params, const EvolveConfig& cfg,
                         const FrameFn& frame) {
  return evolve_impl(std::move(psi), tau, tau + dt, cfg, potential, params, frame, 1);
}

WaveFunction evolve(WaveFunction psi, double t0, double t1, const EvolveConfig& cfg,
                    const PotentialSpec& potential, const DecayParams& params,
                    const FrameFn& frame) {
  cfg.validate();
  return evolve_impl(std::move(psi), t0, t1, cfg, potential, params, frame, 0);
}

// --- interaction window ------------------------------------------------------

namespace {

struct Footprint {
  Vec center;
  double radius;
  double gaussian_width;  // 0 for non-Gaussian components
  double amplitude;       // |a| for Gaussian components
};

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

InteractionWindow interaction_window(const GaussianState& probe, const PotentialSpec& potential,
                                     const DecayParams& params, const WindowOptions& opts) {
  InteractionWindow win;
  if (potential.empty()) return win;
  const int n = probe.dim();
  const double r0 = params.r0;
  std::vector<Footprint> feet;
  for (const auto& c : potential.components) {
    const double r = effective_radius(c, opts.tol);
    if (!std::isfinite(r))
      throw DomainError("interaction_window: potential component has unbounded support");
    const auto* gb = std::get_if<GaussianBump>(&c);
    feet.push_back({component_center(c, n), r, gb ? gb->width : 0.0,
                    gb ? std::abs(gb->amplitude) : 0.0});
  }
  const double log_tol = std::log(opts.tol);
  const double probe_factor = std::max(opts.probe_radius_factor, std::sqrt(-log_tol));

  // Gaussian against Gaussian: int |a| e^(-|x-c|^2/w_V^2) |psi|^2 equals
  // |a| (w_V^2 / s^2)^(n/2) exp(-d^2 / s^2) with s^2 = w_V^2 + w^2.
  auto coupling = [&](const GaussianState& g) {
    const double w = g.envelope_width();
    double sum = 0.0;
    for (const auto& f : feet) {
      if (f.gaussian_width <= 0.0) continue;
      const double d = distance(g.center, f.center);
      const double wv2 = f.gaussian_width * f.gaussian_width;
      const double s2 = wv2 + w * w;
      sum += f.amplitude * std::pow(wv2 / s2, 0.5 * n) * std::exp(-d * d / s2);
    }
    return sum;
  };
  const bool by_coupling = opts.rule == WindowRule::kCoupling;
  double peak = 0.0;  // coupling scale, set before the sweep
  auto overlaps = [&](const GaussianState& g) {
    const double rp = probe_factor * g.envelope_width();
    for (const auto& f : feet) {
      if (by_coupling && f.gaussian_width > 0.0) continue;
      if (distance(g.center, f.center) <= rp + f.radius) return true;
    }
    return by_coupling && coupling(g) > opts.tol * peak;
  };
  auto at = [&](double t) { return gaussian_apply(flow_h0_pieces(0.0, t, params), probe); };

  // Latest overlapping time on a uniform scan of [0, r0] in each direction,
  // then bisection on the last clear/overlap transition.
  constexpr int kScan = 4096;
  const double h = r0 / kScan;
  if (by_coupling) {
    // Scale: the larger of the peak along this path and the head-on peak, so
    // paths that miss the potential get an empty window.
    for (const auto& f : feet) {
      if (f.gaussian_width <= 0.0) continue;
      const double w = probe.envelope_width();
      const double wv2 = f.gaussian_width * f.gaussian_width;
      peak += f.amplitude * std::pow(wv2 / (wv2 + w * w), 0.5 * n);
    }
    for (int i = -kScan; i <= kScan; ++i) peak = std::max(peak, coupling(at(i * h)));
  }
  double t_star = 0.0;
  bool any = false;
  for (double sg : {1.0, -1.0}) {
    int last = -1;
    for (int i = 0; i <= kScan; ++i)
      if (overlaps(at(sg * i * h))) last = i;
    if (last < 0) continue;
    any = true;
    if (last == kScan)
      throw DomainError(
          "interaction window reaches r0: increase |v| or shrink the probe/potential supports");
    double lo = last * h, hi = (last + 1) * h;  // overlap at lo, clear at hi
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (overlaps(at(sg * mid)) ? lo : hi) = mid;
    }
    t_star = std::max(t_star, hi);
  }
  // The outer free flow must not bring the packet back.  The spreading
  // packet keeps |centre|/width bounded, so this uses the Gaussian mass bound
  // exp(-(d - R)^2 / w^2) <= tol rather than the fixed probe radius.
  const double mass_factor = std::sqrt(-log_tol);
  auto reaches = [&](const GaussianState& g) {
    const double rp = mass_factor * g.envelope_width();
    for (const auto& f : feet) {
      if (by_coupling && f.gaussian_width > 0.0) continue;
      if (distance(g.center, f.center) <= rp + f.radius) return true;
    }
    return by_coupling && coupling(g) > opts.tol * peak;
  };
  for (double sg : {1.0, -1.0}) {
    GaussianState g = at(sg * r0);
    double t = r0;
    for (int i = 0; i < 2000; ++i) {
      const double next = t * 1.005;
      g = gaussian_apply(flow_decay(sg * t, sg * next, params), g);
      t = next;
      if (reaches(g))
        throw DomainError("interaction window: the outer-region path returns to the potential");
    }
  }
  win.empty = !any;
  win.t_star = any ? t_star : 0.0;
  return win;
}

}  // namespace tdho
