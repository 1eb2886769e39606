#include "tdho/scatter.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <numbers>
#include <set>
#include <thread>

#include "tdho/error.hpp"
#include "tdho/kernels.hpp"
#include "tdho/quad_prop.hpp"

namespace tdho {

namespace {

const cplx kI(0.0, 1.0);

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// chi(xi) = exp(-i (pi.xi + theta)) g(xi + q)
GaussianState recenter(const GaussianState& g, const Vec& q, const Vec& p, double theta) {
  Vec mq(q.size()), mp(p.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    mq[i] = -q[i];
    mp[i] = -p[i];
  }
  GaussianState out = gaussian_boost(gaussian_translate(g, mq), mp);
  out.gamma -= theta;
  return out;
}

struct FramePath {
  Vec x0, p0;  // classical data at t_start
  double t_start;
  DecayParams params;

  void at(double t, Vec& q, Vec& p) const {
    const SymplecticMap m = flow_h0(t_start, t, params);
    q.resize(x0.size());
    p.resize(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) {
      q[i] = m.a * x0[i] + m.b * p0[i];
      p[i] = m.c * x0[i] + m.d * p0[i];
    }
  }
};

}  // namespace

// --- probes and dressed states -------------------------------------------------

double ProbeSpec::speed() const { return std::sqrt(dot(velocity, velocity)); }

Vec ProbeSpec::direction() const {
  const double s = speed();
  Vec d(velocity);
  for (double& c : d) c /= s;
  return d;
}

void ProbeSpec::validate() const {
  if (!(width > 0.0)) throw ParameterError("probe: width > 0 required");
  if (center.size() != velocity.size()) throw ParameterError("probe: center/velocity dimension");
  if (!(speed() > 0.0)) throw ParameterError("probe: |v| > 0 required");
}

GaussianState build_probe(const ProbeSpec& spec) {
  return make_gaussian(spec.center, spec.velocity, spec.width);
}

DressedStates dressed_states(const ProbeSpec& spec, const DecayParams& params, double t_star,
                             Dressing dressing) {
  if (!(t_star >= 0.0 && t_star < params.r0))
    throw DomainError("dressed_states: window must satisfy 0 <= t* < r0");
  const GaussianState g0 = build_probe(spec);
  DressedStates d;
  d.t_star = t_star;
  if (dressing == Dressing::kScattering) {
    d.in = gaussian_apply(flow_h0_pieces(0.0, -t_star, params), g0);
    d.out = gaussian_apply(flow_h0_pieces(0.0, t_star, params), g0);
  } else {
    const double r0 = params.r0;
    d.in = apply_plan(g0, u0_tilde_plan(-r0, params, Direction::kForward));
    d.in = gaussian_apply(flow_h0_pieces(-r0, -t_star, params), d.in);
    d.out = apply_plan(g0, u0_tilde_plan(r0, params, Direction::kForward));
    d.out = gaussian_apply(flow_h0_pieces(r0, t_star, params), d.out);
  }
  return d;
}

void ScatterConfig::validate() const {
  frame_grid.validate();
  if (!(dt_constant > 0.0)) throw ParameterError("scatter: dt_constant > 0 required");
  if (!(window_quantum >= 0.0)) throw ParameterError("scatter: window_quantum >= 0 required");
}

// --- element engine ----------------------------------------------------------

ElementEngine::ElementEngine(PotentialSpec potential, DecayParams params, ScatterConfig cfg)
    : potential_(std::move(potential)), params_(params), cfg_(std::move(cfg)) {
  params_.validate();
  cfg_.validate();
}

std::size_t ElementEngine::cache_size() const {
  std::lock_guard lock(cache_mutex_);
  return cache_.size();
}

WaveFunction ElementEngine::free_evolution(const WaveFunction& chi, double t_star, cplx width,
                                           double dt) const {
  const auto key = std::make_tuple(t_star, width.real(), width.imag(), dt);
  {
    std::lock_guard lock(cache_mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;
  }
  EvolveConfig ec = cfg_.evolve;
  ec.dt = dt;
  auto result =
      std::make_shared<WaveFunction>(evolve(chi, -t_star, t_star, ec, PotentialSpec{}, params_));
  std::lock_guard lock(cache_mutex_);
  auto [it, inserted] = cache_.emplace(key, result);
  return *it->second;
}

ElementResult ElementEngine::compute(const ProbeSpec& spec) const {
  spec.validate();
  ElementResult r;
  r.speed = spec.speed();
  const PotentialSpec& geometry = cfg_.window_potential ? *cfg_.window_potential : potential_;
  const InteractionWindow win = interaction_window(build_probe(spec), geometry, params_, cfg_.window);
  if (win.empty) return r;
  double t_star = win.t_star;
  if (cfg_.window_quantum > 0.0) {
    const double q = std::ceil(t_star / cfg_.window_quantum) * cfg_.window_quantum;
    if (q < params_.r0) t_star = q;
  }
  return compute(spec, t_star);
}

ElementResult ElementEngine::compute(const ProbeSpec& spec, double t_star) const {
  spec.validate();
  const GridSpec& grid = cfg_.frame_grid;
  if (static_cast<int>(spec.center.size()) != grid.n)
    throw UsageError("element: probe dimension differs from the frame grid");
  ElementResult r;
  r.speed = spec.speed();
  r.t_star = t_star;
  r.empty_window = false;

  const DressedStates d = dressed_states(spec, params_, t_star, cfg_.dressing);
  const FramePath path{d.in.center, d.in.momentum, -t_star, params_};
  Vec q_out, p_out;
  path.at(t_star, q_out, p_out);
  const double theta_in = 0.5 * dot(d.in.momentum, d.in.center);
  const double theta_out = 0.5 * dot(p_out, q_out);

  GaussianState chi_in_g = recenter(d.in, d.in.center, d.in.momentum, theta_in);
  // Split off the constant phase so the boundary state depends only on
  // (t*, width) and its free evolution can be shared.
  const cplx phase = std::exp(kI * chi_in_g.gamma.real());
  chi_in_g.gamma = cplx(0.0, chi_in_g.gamma.imag());
  const GaussianState chi_out_g = recenter(d.out, q_out, p_out, theta_out);

  const WaveFunction chi_in = sample_to_grid(chi_in_g, grid);
  const WaveFunction chi_out = sample_to_grid(chi_out_g, grid);

  EvolveConfig ec = cfg_.evolve;
  ec.dt = cfg_.dt_for(r.speed);
  const FrameFn frame = [path](double t) {
    Vec q, p;
    path.at(t, q, p);
    return q;
  };
  WaveFunction chi_u = evolve(chi_in, -t_star, t_star, ec, potential_, params_, frame);

  if (cfg_.subtraction == Subtraction::kFree) {
    const WaveFunction chi_u0 = free_evolution(chi_in, t_star, chi_in_g.width, ec.dt);
    for (std::size_t i = 0; i < chi_u.size(); ++i) chi_u[i] -= chi_u0[i];
    r.element = -kI * std::conj(phase) * inner_product(chi_u, chi_out);
  } else {
    const GaussianState g0 = build_probe(spec);
    r.element =
        -kI * (std::conj(phase) * inner_product(chi_u, chi_out) - overlap(g0, g0));
  }
  r.scaled = r.speed * r.element;
  return r;
}

ElementResult scattering_element(const ProbeSpec& spec, const PotentialSpec& potential,
                                 const DecayParams& params, const ScatterConfig& cfg) {
  return ElementEngine(potential, params, cfg).compute(spec);
}

ElementResult scattering_element_lab(const ProbeSpec& spec, const PotentialSpec& potential,
                                     const DecayParams& params, const ScatterConfig& cfg,
                                     const GridSpec& lab_grid, double t_star) {
  spec.validate();
  ElementResult r;
  r.speed = spec.speed();
  if (t_star < 0.0) {
    const InteractionWindow win =
        interaction_window(build_probe(spec), potential, params, cfg.window);
    if (win.empty) return r;
    t_star = win.t_star;
  }
  r.t_star = t_star;
  r.empty_window = false;
  const DressedStates d = dressed_states(spec, params, t_star, cfg.dressing);
  const WaveFunction in = sample_to_grid(d.in, lab_grid);
  const WaveFunction out = sample_to_grid(d.out, lab_grid);
  EvolveConfig ec = cfg.evolve;
  ec.dt = cfg.dt_for(r.speed);
  WaveFunction u = evolve(in, -t_star, t_star, ec, potential, params);
  if (cfg.subtraction == Subtraction::kFree) {
    const WaveFunction u0 = evolve(in, -t_star, t_star, ec, PotentialSpec{}, params);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] -= u0[i];
    r.element = -kI * inner_product(u, out);
  } else {
    const GaussianState g0 = build_probe(spec);
    r.element = -kI * (inner_product(u, out) - overlap(g0, g0));
  }
  r.scaled = r.speed * r.element;
  return r;
}

// --- high-velocity limit -----------------------------------------------------

HighVelocityFit fit_high_velocity(const std::vector<double>& speeds,
                                  const std::vector<cplx>& scaled, const cplx* reference) {
  if (speeds.size() < 3 || speeds.size() != scaled.size())
    throw ParameterError("highv_extrapolate: at least three velocities required");
  for (std::size_t i = 1; i < speeds.size(); ++i)
    if (!(speeds[i] > speeds[i - 1]))
      throw ParameterError("highv_extrapolate: velocities must be increasing");
  HighVelocityFit fit;
  fit.speeds = speeds;
  fit.scaled = scaled;
  // Normal equations for s = a + b x, x = 1/|v|.
  double n = 0.0, sx = 0.0, sxx = 0.0;
  cplx ss = 0.0, sxs = 0.0;
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    const double x = 1.0 / speeds[i];
    n += 1.0;
    sx += x;
    sxx += x * x;
    ss += scaled[i];
    sxs += x * scaled[i];
  }
  const double det = n * sxx - sx * sx;
  fit.limit = (sxx * ss - sx * sxs) / det;
  fit.slope_coeff = (n * sxs - sx * ss) / det;

  const cplx ref = reference ? *reference : fit.limit;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    const double e = std::abs(scaled[i] - ref);
    fit.errors.push_back(e);
    if (e > 0.0) {
      lx.push_back(std::log(speeds[i]));
      ly.push_back(std::log(e));
    }
    if (i > 0 && e > fit.errors[i - 1]) fit.monotone = false;
  }
  if (lx.size() >= 2 && lx.size() == speeds.size()) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += ly[i];
    }
    mx /= lx.size();
    my /= ly.size();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      num += (lx[i] - mx) * (ly[i] - my);
      den += (lx[i] - mx) * (lx[i] - mx);
    }
    fit.slope = num / den;
    fit.slope_defined = true;
  }
  return fit;
}

HighVelocityFit highv_extrapolate(const ProbeSpec& spec, const PotentialSpec& potential,
                                  const DecayParams& params, const ScatterConfig& cfg,
                                  const std::vector<double>& speeds, const cplx* reference) {
  const ElementEngine engine(potential, params, cfg);
  const Vec dir = spec.direction();
  std::vector<cplx> scaled;
  for (double s : speeds) {
    ProbeSpec p = spec;
    for (std::size_t i = 0; i < dir.size(); ++i) p.velocity[i] = s * dir[i];
    scaled.push_back(engine.compute(p).scaled);
  }
  return fit_high_velocity(speeds, scaled, reference);
}

// --- sinogram scan -----------------------------------------------------------

Sinogram Sinogram::make(int num_angles, int num_offsets, double ds) {
  Sinogram s;
  s.ds = ds;
  for (int k = 0; k < num_angles; ++k) s.angles.push_back(std::numbers::pi * k / num_angles);
  for (int m = 0; m < num_offsets; ++m) s.offsets.push_back((m - 0.5 * (num_offsets - 1)) * ds);
  const std::size_t size = static_cast<std::size_t>(num_angles) * num_offsets;
  s.values.assign(size, 0.0);
  s.errors.assign(size, 0.0);
  s.imag.assign(size, 0.0);
  return s;
}

void ScanConfig::validate() const {
  if (angles < 1 || offsets < 1) throw ParameterError("scan: angles and offsets must be >= 1");
  if (!(ds > 0.0)) throw ParameterError("scan: ds > 0 required");
  if (!(speed > 0.0)) throw ParameterError("scan: speed > 0 required");
  if (!(probe_width > 0.0)) throw ParameterError("scan: probe_width > 0 required");
  if (ds > 0.5 * probe_width + 1e-12)
    throw ParameterError("scan: offset spacing ds must not exceed half the probe width");
  if (workers < 1) throw ParameterError("scan: workers >= 1 required");
}

ProbeSpec scan_probe(const ScanConfig& scan, double angle, double offset) {
  ProbeSpec p;
  p.width = scan.probe_width;
  const double c = std::cos(angle), s = std::sin(angle);
  p.velocity = {scan.speed * c, scan.speed * s};
  p.center = {-offset * s, offset * c};
  return p;
}

Sinogram sinogram_scan(const PotentialSpec& potential, const DecayParams& params,
                       const ScatterConfig& cfg, const ScanConfig& scan,
                       const std::vector<RadonSample>& completed, const SampleSink& sink) {
  scan.validate();
  if (cfg.frame_grid.n != 2) throw UsageError("sinogram_scan: two-dimensional scans only");
  Sinogram sino = Sinogram::make(scan.angles, scan.offsets, scan.ds);
  sino.speed = scan.speed;
  sino.probe_width = scan.probe_width;
  const std::size_t total = sino.values.size();
  std::vector<RadonSample> results(total);
  std::vector<char> done(total, 0);
  for (const auto& s : completed) {
    const std::size_t idx = static_cast<std::size_t>(s.angle_index) * scan.offsets + s.offset_index;
    if (idx < total) {
      results[idx] = s;
      done[idx] = 1;
    }
  }
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < total; ++i)
    if (!done[i]) todo.push_back(i);

  const ElementEngine engine(potential, params, cfg);
  auto run_one = [&](std::size_t idx) {
    RadonSample s;
    s.angle_index = static_cast<int>(idx / scan.offsets);
    s.offset_index = static_cast<int>(idx % scan.offsets);
    s.angle = sino.angles[s.angle_index];
    s.offset = sino.offsets[s.offset_index];
    s.speed = scan.speed;
    try {
      const ElementResult r = engine.compute(scan_probe(scan, s.angle, s.offset));
      s.value = r.scaled;
      s.error = std::abs(r.scaled.imag());
      s.t_star = r.t_star;
    } catch (const std::exception& e) {
      s.ok = false;
      s.reason = e.what();
      s.value = 0.0;
    }
    return s;
  };

  std::mutex mutex;
  std::condition_variable cv;
  std::deque<RadonSample> ready;
  std::atomic<std::size_t> next{0};
  std::size_t finished_workers = 0;
  const int nworkers = std::max(1, std::min<int>(scan.workers, static_cast<int>(todo.size())));
  std::vector<std::thread> pool;
  for (int w = 0; w < nworkers && !todo.empty(); ++w) {
    pool.emplace_back([&] {
      const kernels::SerialScope serial;
      while (true) {
        const std::size_t k = next.fetch_add(1);
        if (k >= todo.size()) break;
        RadonSample s = run_one(todo[k]);
        std::lock_guard lock(mutex);
        ready.push_back(std::move(s));
        cv.notify_one();
      }
      std::lock_guard lock(mutex);
      ++finished_workers;
      cv.notify_one();
    });
  }
  // Single writer: results are handed to the sink on this thread.
  std::size_t received = 0;
  while (received < todo.size()) {
    std::unique_lock lock(mutex);
    cv.wait(lock, [&] { return !ready.empty() || finished_workers == pool.size(); });
    while (!ready.empty()) {
      RadonSample s = std::move(ready.front());
      ready.pop_front();
      lock.unlock();
      const std::size_t idx =
          static_cast<std::size_t>(s.angle_index) * scan.offsets + s.offset_index;
      if (sink) sink(s);
      results[idx] = std::move(s);
      ++received;
      lock.lock();
    }
    if (finished_workers == pool.size() && ready.empty()) break;
  }
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < total; ++i) {
    const auto& s = results[i];
    sino.values[i] = s.value.real();
    sino.imag[i] = s.value.imag();
    sino.errors[i] = s.error;
    if (!s.ok) ++sino.holes;
  }
  sino.samples = std::move(results);
  return sino;
}

}  // namespace tdho
