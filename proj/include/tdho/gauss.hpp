#pragma once

#include <complex>
#include <span>
#include <vector>

#include "tdho/grid.hpp"
#include "tdho/model.hpp"

namespace tdho {

// Per-axis linear map (x, p) -> (a x + b p, c x + d p), applied identically
// on every axis, plus a constant phase exp(i phase) carried by its quantum
// lift.  Composition is matrix multiplication: (m2 * m1) applies m1 first.
struct SymplecticMap {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;
  double phase = 0.0;

  double det() const { return a * d - b * c; }
  SymplecticMap inverse() const { return {d, -b, -c, a, -phase}; }
};

SymplecticMap operator*(const SymplecticMap& m2, const SymplecticMap& m1);

// Classical skeletons of the elementary unitaries.
SymplecticMap flow_harmonic(double dt, double omega);
SymplecticMap flow_decay(double t0, double t1, const DecayParams& params);
SymplecticMap flow_free(double tau);               // exp(-i tau p^2/2)
SymplecticMap flow_quadratic_phase(double c);      // exp(i c x^2/2)
SymplecticMap flow_dilation(double theta);         // exp(-i theta A)

// Classical flow of H0 from t0 to t1 split into pieces that are each safe
// to apply to a Gaussian in one step (harmonic pieces |omega dt| <= pi/4,
// never straddling +-r0).  The product of the pieces is the full flow.
std::vector<SymplecticMap> flow_h0_pieces(double t0, double t1, const DecayParams& params);
SymplecticMap flow_h0(double t0, double t1, const DecayParams& params);

// psi(x) = exp(i [width (x - center)^2 / 2 + momentum.(x - center) + gamma])
// with Im(width) > 0.
struct GaussianState {
  Vec center;
  Vec momentum;
  cplx width{0.0, 1.0};
  cplx gamma{0.0, 0.0};

  int dim() const { return static_cast<int>(center.size()); }
  // Envelope width w with |psi|^2 ~ exp(-|x - center|^2 / w^2).
  double envelope_width() const { return 1.0 / std::sqrt(width.imag()); }
};

// Normalized isotropic packet (pi w^2)^(-n/4) exp(-|x - y|^2 / (2 w^2) + i v.x).
GaussianState make_gaussian(std::span<const double> y, std::span<const double> v, double w);

cplx evaluate(const GaussianState& g, std::span<const double> x);
double norm2(const GaussianState& g);

// Exact metaplectic action.  Throws CausticError when |a + b width| < 1e-8.
GaussianState gaussian_apply(const SymplecticMap& m, const GaussianState& g);
GaussianState gaussian_apply(std::span<const SymplecticMap> pieces, const GaussianState& g);
// Multiplication by exp(i v.x).
GaussianState gaussian_boost(const GaussianState& g, std::span<const double> v);
// psi(x) -> psi(x - a)
GaussianState gaussian_translate(const GaussianState& g, std::span<const double> a);
GaussianState gaussian_scale(const GaussianState& g, cplx factor);

// Pointwise samples.  Requires 6 envelope widths around the center to fit
// inside [-L, L) on every axis; GridOverflow carries the needed half-width.
WaveFunction sample_to_grid(const GaussianState& g, const GridSpec& grid);

// Closed-form (g1, g2), conjugate-linear in g1.
cplx overlap(const GaussianState& g1, const GaussianState& g2);

}  // namespace tdho
