#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tdho/fft.hpp"
#include "tdho/model.hpp"

namespace tdho {

using cplx = std::complex<double>;

// Uniform cube [-L, L)^n with `points` samples per axis, x_i = -L + i dx.
// Momentum samples are kept in FFT order: xi_k = k dp for k < points/2 and
// (k - points) dp otherwise.
struct GridSpec {
  int n = 2;
  int points = 256;
  double half_width = 12.0;

  double dx() const { return 2.0 * half_width / points; }
  double dp() const;
  double x(int i) const { return -half_width + i * dx(); }
  double xi(int k) const;
  std::size_t size() const;
  std::vector<int> dims() const { return std::vector<int>(n, points); }
  void validate() const;

  bool operator==(const GridSpec&) const = default;
};

enum class Space { kPosition, kMomentum };

class WaveFunction {
 public:
  WaveFunction() = default;
  explicit WaveFunction(const GridSpec& grid, Space space = Space::kPosition);

  const GridSpec& grid() const { return grid_; }
  Space space() const { return space_; }
  std::size_t size() const { return data_.size(); }

  std::span<cplx> values() { return data_; }
  std::span<const cplx> values() const { return data_; }
  cplx& operator[](std::size_t i) { return data_[i]; }
  const cplx& operator[](std::size_t i) const { return data_[i]; }

  // Reinterprets the samples; only the transform routines use this.
  void set_space(Space s) { space_ = s; }

 private:
  GridSpec grid_;
  Space space_ = Space::kPosition;
  fft::CVec data_;
};

// psi(x) = f(x) on the position grid.
WaveFunction sample(const GridSpec& grid, const std::function<cplx(std::span<const double>)>& f);

// Symmetric (2 pi)^(-n/2) Fourier transform; unitary between the position
// norm (dx^n weights) and the momentum norm (dp^n weights).
WaveFunction fft_forward(WaveFunction psi);
WaveFunction fft_inverse(WaveFunction psi);

// sum conj(phi) psi dV; conjugate-linear in phi.
cplx inner_product(const WaveFunction& phi, const WaveFunction& psi);
double norm2(const WaveFunction& psi);
double norm(const WaveFunction& psi);
// ||a - b||
double l2_distance(const WaveFunction& a, const WaveFunction& b);

// Elementary unitaries.  All act on position-space data.
WaveFunction quadratic_phase(WaveFunction psi, double c);            // exp(i c x^2 / 2)
WaveFunction linear_phase(WaveFunction psi, std::span<const double> v);  // exp(i v.x)
WaveFunction free_flow(WaveFunction psi, double tau);                // exp(-i tau p^2 / 2)
// exp(-i theta A), A = (p.x + x.p)/2:  psi'(x) = exp(-n theta/2) psi(exp(-theta) x).
// Band-limited resampling (x4 spectral oversampling, 10-point Lagrange).
WaveFunction dilation(WaveFunction psi, double theta);
// psi'(x) = psi(x - a)
WaveFunction translate(WaveFunction psi, std::span<const double> a);
WaveFunction global_phase(WaveFunction psi, cplx factor);

// Mass with some coordinate within `band` of the domain boundary.
double boundary_mass(const WaveFunction& psi, double band);
// Smallest r with the mass outside [-r, r] on every axis below tol * norm^2.
double support_radius(const WaveFunction& psi, double tol = 1e-12);
// Throws GridOverflow when the boundary band carries more than tol of the
// norm; band defaults to L/8.
void check_on_grid(const WaveFunction& psi, const std::string& context, double tol = 1e-12,
                   double band = -1.0);

Vec centroid(const WaveFunction& psi);
Vec mean_momentum(const WaveFunction& psi);

// Raw interleaved (re, im) little-endian float64, row-major, plus a JSON
// sidecar at path + ".json".
void write_binary(const WaveFunction& psi, const std::string& path);
// n == 1 only: x,re,im rows.
void write_csv(const WaveFunction& psi, const std::string& path);

}  // namespace tdho
