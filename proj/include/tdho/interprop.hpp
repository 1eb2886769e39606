#pragma once

#include <functional>
#include <span>
#include <vector>

#include "tdho/gauss.hpp"
#include "tdho/grid.hpp"
#include "tdho/model.hpp"

namespace tdho {

struct EvolveConfig {
  double dt = 1e-3;
  double tol_window = 1e-10;
  // |V| cap for singular components; <= 0 selects 1/dx of the grid.
  double clamp = 0.0;
  // Boundary-mass check cadence (steps) and tolerance relative to the norm.
  // Singular components shed a small high-momentum flux towards the edges;
  // 1e-8 of the mass there is far from the probe and does not reach it.
  int monitor_every = 64;
  double monitor_tol = 1e-8;

  void validate() const;
};

// Offset q(t) of a moving frame: the grid coordinate xi stands for the lab
// point xi + q(t).  An empty function means the lab frame.
using FrameFn = std::function<Vec(double)>;

// Samples V(xi + shift) on a grid.  Gaussian components are evaluated
// separably; compactly supported ones only inside their bounding box.
class PotentialSampler {
 public:
  PotentialSampler(const PotentialSpec& spec, const GridSpec& grid, double clamp);

  void sample(std::span<const double> shift, std::span<double> out) const;
  bool empty() const { return spec_.empty(); }
  double clamp() const { return clamp_; }

 private:
  PotentialSpec spec_;
  GridSpec grid_;
  double clamp_;
};

// One step exp(-i dt/2 V(tau+dt)) U0(tau+dt, tau) exp(-i dt/2 V(tau)).
// The step must not straddle +-r0.
WaveFunction strang_step(WaveFunction psi, double tau, double dt, const PotentialSpec& potential,
                         const DecayParams& params, const EvolveConfig& cfg = {},
                         const FrameFn& frame = {});

// Composes Strang steps of size <= cfg.dt from t0 to t1, split at +-r0.
WaveFunction evolve(WaveFunction psi, double t0, double t1, const EvolveConfig& cfg,
                    const PotentialSpec& potential, const DecayParams& params,
                    const FrameFn& frame = {});

struct InteractionWindow {
  double t_star = 0.0;
  bool empty = true;
};

// kSupport: the probe is clear once its centre is farther from each
// component than probe radius + component radius.  kCoupling replaces that
// test for Gaussian components by int |V| |psi|^2 <= tol times its maximum
// over [-r0, r0] (or its head-on value, if larger), evaluated in closed form.
enum class WindowRule { kSupport, kCoupling };

struct WindowOptions {
  double tol = 1e-10;
  // Probe radius = max(probe_radius_factor, sqrt(ln 1/tol)) * envelope width.
  double probe_radius_factor = 8.0;
  WindowRule rule = WindowRule::kSupport;
};

// Smallest symmetric [-t*, t*] outside of which the probe transported by the
// free flow (started at t = 0) stays clear of every potential component.
// Throws DomainError when t* would reach r0 or the outer-region path comes
// back to the potential.
InteractionWindow interaction_window(const GaussianState& probe, const PotentialSpec& potential,
                                     const DecayParams& params, const WindowOptions& opts = {});

}  // namespace tdho
