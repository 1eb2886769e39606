#pragma once

#include <string>
#include <vector>

#include "tdho/gauss.hpp"
#include "tdho/grid.hpp"
#include "tdho/model.hpp"

namespace tdho {

enum class FactorKind { kQuadraticPhase, kDilation, kFreeFlow };

struct Factor {
  FactorKind kind;
  double value;  // c for exp(i c x^2/2), theta for exp(-i theta A), tau for exp(-i tau p^2/2)
};

// Ordered factor list (first element acts first) realizing a closed-form
// quadratic propagator.  Adjacent factors of the same kind are merged.
class QuadStepPlan {
 public:
  void push(FactorKind kind, double value);
  void append(const QuadStepPlan& later);

  const std::vector<Factor>& factors() const { return factors_; }
  bool empty() const { return factors_.empty(); }
  std::vector<SymplecticMap> maps() const;
  SymplecticMap map() const;
  // e.g. "free_flow(0.5) -> dilation(-0.1) -> quadratic_phase(0.2)"
  std::string audit() const;

 private:
  std::vector<Factor> factors_;
};

// exp(-i (t1 - t0) H0) inside the harmonic region, as products of
// free_flow(tan(w d)/w), dilation(log cos(w d)), quadratic_phase(-w tan(w d))
// over equal pieces with |w d| <= pi/4.
QuadStepPlan mehler_plan(double t0, double t1, const DecayParams& params);

enum class Direction { kForward, kAdjoint };

// Factorized free evolution: outer formula for |t| >= r0, exp(-i t H0) inside.
QuadStepPlan u0_tilde_plan(double t, const DecayParams& params, Direction dir);
// U0(t1, t0) split at +-r0.
QuadStepPlan u0_compose_plan(double t0, double t1, const DecayParams& params);

// Exact lift of a map with b != 0 as quadratic_phase((a-1)/b), free_flow(b),
// quadratic_phase((d-1)/b).  Used by the interacting stepper.
QuadStepPlan shear_plan(const SymplecticMap& m);

WaveFunction apply_plan(WaveFunction psi, const QuadStepPlan& plan);
GaussianState apply_plan(const GaussianState& g, const QuadStepPlan& plan);
// Transports g through every factor and throws GridOverflow if an
// intermediate packet would not fit the grid.
void preflight(const GaussianState& g, const QuadStepPlan& plan, const GridSpec& grid);

WaveFunction mehler_evolve(WaveFunction psi, double t0, double t1, const DecayParams& params);
WaveFunction u0_tilde(WaveFunction psi, double t, const DecayParams& params,
                      Direction dir = Direction::kForward);
WaveFunction u0_compose(WaveFunction psi, double t0, double t1, const DecayParams& params);

namespace reference {
// Fourth-order (Yoshida) composition of kinetic/potential Strang steps for
// i d/dt psi = (p^2/2 + k(t) x^2/2) psi, split at +-r0.  Test oracle only.
WaveFunction split_step_h0(WaveFunction psi, double t0, double t1, double dt,
                           const DecayParams& params);
}  // namespace reference

}  // namespace tdho
