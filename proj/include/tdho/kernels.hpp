#pragma once

// Data-parallel inner loops.  Every kernel has an OpenMP version (namespace
// tdho::kernels) and a serial reference (tdho::kernels::serial) with the same
// summation order, so the two produce bit-identical results.

#include <complex>
#include <cstddef>
#include <span>

namespace tdho {

using cplx = std::complex<double>;

namespace kernels {

// Disables OpenMP inside the kernels for the lifetime of the object on the
// calling thread.  Scan workers hold one so that sample-level and loop-level
// parallelism do not nest.
class SerialScope {
 public:
  SerialScope();
  ~SerialScope();
  SerialScope(const SerialScope&) = delete;
  SerialScope& operator=(const SerialScope&) = delete;

 private:
  bool previous_;
};

bool parallel_enabled();

// Reductions are accumulated in fixed-size blocks whose partial sums are then
// combined pairwise; the result does not depend on the thread count.
constexpr std::size_t kReductionBlock = 2048;

// psi[i] *= exp(i * phase[i])
void multiply_phase(std::span<cplx> psi, std::span<const double> phase);
// psi[i] *= exp(i * scale * phase[i])
void multiply_scaled_phase(std::span<cplx> psi, std::span<const double> phase, double scale);
// psi[i] *= factor[i]
void multiply(std::span<cplx> psi, std::span<const cplx> factor);
void scale(std::span<cplx> psi, double s);
// sum conj(a[i]) * b[i]
cplx dot(std::span<const cplx> a, std::span<const cplx> b);
// sum |a[i]|^2
double norm2(std::span<const cplx> a);

// out[i*ny + j] += amp * gx[i] * gy[j]
void add_outer(std::span<double> out, std::span<const double> gx, std::span<const double> gy,
               double amp);

// Filtered backprojection onto a square image of side `points`, pixel
// centres at -half + (i + 1/2) * h.  rows holds one filtered projection of
// length row_len per angle, sampled at s = s0 + k * ds; s = x . normal(angle)
// with normal = (-sin, cos).  Linear interpolation, zero outside.  Each
// pixel's angle sum is reduced pairwise in angle order.
void backproject(std::span<double> image, int points, double half, std::span<const double> rows,
                 int row_len, std::span<const double> cos_a, std::span<const double> sin_a,
                 double s0, double ds, double weight);

namespace serial {
void multiply_phase(std::span<cplx> psi, std::span<const double> phase);
void multiply_scaled_phase(std::span<cplx> psi, std::span<const double> phase, double scale);
void multiply(std::span<cplx> psi, std::span<const cplx> factor);
void scale(std::span<cplx> psi, double s);
cplx dot(std::span<const cplx> a, std::span<const cplx> b);
double norm2(std::span<const cplx> a);
void add_outer(std::span<double> out, std::span<const double> gx, std::span<const double> gy,
               double amp);
void backproject(std::span<double> image, int points, double half, std::span<const double> rows,
                 int row_len, std::span<const double> cos_a, std::span<const double> sin_a,
                 double s0, double ds, double weight);
}  // namespace serial

// Pairwise (cascade) summation of a contiguous range.
double pairwise_sum(std::span<const double> v);
cplx pairwise_sum(std::span<const cplx> v);

}  // namespace kernels
}  // namespace tdho
