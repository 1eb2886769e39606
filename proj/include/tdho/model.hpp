#pragma once

#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace tdho {

using Vec = std::vector<double>;

// Constants of the time-decaying oscillator k(t) = omega^2 for |t| < r0 and
// sigma / t^2 beyond.  lambda is always derived from sigma.
struct DecayParams {
  double omega = 1.0;
  double sigma = 3.0 / 16.0;
  double r0 = 1.0;

  double lambda() const;
  // sigma == 0 is accepted as a diagnostic mode (free flight outside the
  // harmonic window); it is not part of the physical model.
  bool diagnostic() const { return sigma == 0.0; }
  void validate() const;
};

double lambda_from_sigma(double sigma);

// Harmonic coefficient.  The outer branch includes |t| == r0.
double k_coeff(double t, const DecayParams& params);

// c1 t^(1-lambda) + c2 t^lambda, valid for t >= r0.
double classical_trajectory(double t, double c1, double c2, const DecayParams& params);

struct ClassicalState {
  Vec x;
  Vec v;
  double t = 0.0;
};

// Classical RK4 for x'' = -k(t) x from state0.t to t1 with step <= dt.  The
// path is split at +-r0 so that no step straddles the jump of k.
ClassicalState integrate_newton(const ClassicalState& state0, double t1, double dt,
                                const DecayParams& params);

// ---------------------------------------------------------------------------
// Potentials

// a * exp(-|x - c|^2 / w^2)
struct GaussianBump {
  double amplitude = 0.0;
  Vec center;
  double width = 1.0;
};

// a * exp(1 - 1 / (1 - |x - c|^2 / R^2)) inside the ball, 0 outside.
struct SmoothCompactBump {
  double amplitude = 0.0;
  Vec center;
  double radius = 1.0;
};

// a * <x>^(-rho), <x> = sqrt(1 + |x|^2).
struct PowerTail {
  double amplitude = 0.0;
  double rho = 2.0;
};

// a * |x - c|^(-alpha) on 0 < |x - c| < R, zero outside.  q is the Lebesgue
// exponent the component is claimed to belong to.
struct TruncatedSingular {
  double amplitude = 0.0;
  Vec center;
  double alpha = 0.5;
  double radius = 1.0;
  double q = 2.0;
};

using PotentialComponent =
    std::variant<GaussianBump, SmoothCompactBump, PowerTail, TruncatedSingular>;

struct PotentialSpec {
  std::vector<PotentialComponent> components;

  bool empty() const { return components.empty(); }
  PotentialSpec scaled(double factor) const;
  PotentialSpec translated(std::span<const double> shift) const;
  PotentialSpec operator+(const PotentialSpec& other) const;
};

constexpr double kUnclamped = std::numeric_limits<double>::max();

// Sum of the component values at x.  Singular components are clamped to
// |V| <= clamp; at the singular point itself the clamp value is returned.
double evaluate_potential(const PotentialSpec& spec, std::span<const double> x,
                          double clamp = kUnclamped);
double evaluate_component(const PotentialComponent& c, std::span<const double> x,
                          double clamp = kUnclamped);

// Radius of the ball around the component center outside which |V| <= tol
// relative to the component amplitude.  Infinite for slowly decaying tails.
double effective_radius(const PotentialComponent& c, double tol);
// Center of a component (origin for PowerTail), padded to dim.
Vec component_center(const PotentialComponent& c, int dim);

struct AdmissibilityClause {
  std::string clause;     // e.g. "ρ>1/(1−λ)"
  int component = -1;     // index into PotentialSpec::components, -1 for params
  bool passed = false;
  std::string detail;
};

struct AdmissibilityReport {
  std::vector<AdmissibilityClause> clauses;
  bool diagnostic_mode = false;  // sigma == 0

  bool passed() const;
  std::string to_string() const;
};

AdmissibilityReport check_admissibility(const PotentialSpec& spec, const DecayParams& params,
                                        int dim);

}  // namespace tdho
