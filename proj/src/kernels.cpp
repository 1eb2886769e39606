#include "tdho/kernels.hpp"

#include <cmath>
#include <vector>

namespace tdho::kernels {

namespace {
thread_local bool g_parallel = true;

template <class T>
T pairwise(const T* v, std::size_t n) {
  if (n == 0) return T{};
  if (n <= 8) {
    T s = v[0];
    for (std::size_t i = 1; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise(v, h) + pairwise(v + h, n - h);
}

inline cplx unit(double phase) { return {std::cos(phase), std::sin(phase)}; }

inline std::size_t num_blocks(std::size_t n) {
  return (n + kReductionBlock - 1) / kReductionBlock;
}

cplx dot_block(const cplx* a, const cplx* b, std::size_t n) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
  }
  return {re, im};
}

double norm_block(const cplx* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::norm(a[i]);
  return s;
}

double pixel_sum(int i, int j, int points, double half, const double* rows, int row_len,
                 const double* cos_a, const double* sin_a, std::size_t n_angles, double s0,
                 double ds, double* scratch) {
  const double h = 2.0 * half / points;
  const double x = -half + (i + 0.5) * h;
  const double y = -half + (j + 0.5) * h;
  for (std::size_t a = 0; a < n_angles; ++a) {
    const double s = -x * sin_a[a] + y * cos_a[a];
    const double f = (s - s0) / ds;
    const double fl = std::floor(f);
    const long k = static_cast<long>(fl);
    double v = 0.0;
    if (k >= 0 && k + 1 < row_len) {
      const double w = f - fl;
      const double* row = rows + a * static_cast<std::size_t>(row_len);
      v = (1.0 - w) * row[k] + w * row[k + 1];
    }
    scratch[a] = v;
  }
  return pairwise(scratch, n_angles);
}

}  // namespace

SerialScope::SerialScope() : previous_(g_parallel) { g_parallel = false; }
SerialScope::~SerialScope() { g_parallel = previous_; }
bool parallel_enabled() { return g_parallel; }

double pairwise_sum(std::span<const double> v) { return pairwise(v.data(), v.size()); }
cplx pairwise_sum(std::span<const cplx> v) { return pairwise(v.data(), v.size()); }

// --- OpenMP versions -------------------------------------------------------

void multiply_phase(std::span<cplx> psi, std::span<const double> phase) {
  const long n = static_cast<long>(psi.size());
#pragma omp parallel for schedule(static) if (g_parallel && n > 4096)
  for (long i = 0; i < n; ++i) psi[i] *= unit(phase[i]);
}

void multiply_scaled_phase(std::span<cplx> psi, std::span<const double> phase, double scale) {
  const long n = static_cast<long>(psi.size());
#pragma omp parallel for schedule(static) if (g_parallel && n > 4096)
  for (long i = 0; i < n; ++i) psi[i] *= unit(scale * phase[i]);
}

void multiply(std::span<cplx> psi, std::span<const cplx> factor) {
  const long n = static_cast<long>(psi.size());
#pragma omp parallel for schedule(static) if (g_parallel && n > 4096)
  for (long i = 0; i < n; ++i) psi[i] *= factor[i];
}

void scale(std::span<cplx> psi, double s) {
  const long n = static_cast<long>(psi.size());
#pragma omp parallel for schedule(static) if (g_parallel && n > 4096)
  for (long i = 0; i < n; ++i) psi[i] *= s;
}

cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
  const std::size_t nb = num_blocks(a.size());
  std::vector<cplx> partial(nb);
  const long lnb = static_cast<long>(nb);
#pragma omp parallel for schedule(static) if (g_parallel && nb > 2)
  for (long k = 0; k < lnb; ++k) {
    const std::size_t lo = k * kReductionBlock;
    const std::size_t len = std::min(kReductionBlock, a.size() - lo);
    partial[k] = dot_block(a.data() + lo, b.data() + lo, len);
  }
  return pairwise(partial.data(), nb);
}

double norm2(std::span<const cplx> a) {
  const std::size_t nb = num_blocks(a.size());
  std::vector<double> partial(nb);
  const long lnb = static_cast<long>(nb);
#pragma omp parallel for schedule(static) if (g_parallel && nb > 2)
  for (long k = 0; k < lnb; ++k) {
    const std::size_t lo = k * kReductionBlock;
    const std::size_t len = std::min(kReductionBlock, a.size() - lo);
    partial[k] = norm_block(a.data() + lo, len);
  }
  return pairwise(partial.data(), nb);
}

void add_outer(std::span<double> out, std::span<const double> gx, std::span<const double> gy,
               double amp) {
  const long nx = static_cast<long>(gx.size());
  const std::size_t ny = gy.size();
#pragma omp parallel for schedule(static) if (g_parallel && nx * ny > 4096)
  for (long i = 0; i < nx; ++i) {
    const double ai = amp * gx[i];
    double* row = out.data() + i * ny;
    for (std::size_t j = 0; j < ny; ++j) row[j] += ai * gy[j];
  }
}

void backproject(std::span<double> image, int points, double half, std::span<const double> rows,
                 int row_len, std::span<const double> cos_a, std::span<const double> sin_a,
                 double s0, double ds, double weight) {
  const std::size_t na = cos_a.size();
#pragma omp parallel if (g_parallel)
  {
    std::vector<double> scratch(na);
#pragma omp for schedule(static)
    for (int i = 0; i < points; ++i) {
      for (int j = 0; j < points; ++j) {
        image[static_cast<std::size_t>(i) * points + j] =
            weight * pixel_sum(i, j, points, half, rows.data(), row_len, cos_a.data(),
                               sin_a.data(), na, s0, ds, scratch.data());
      }
    }
  }
}

// --- serial references ----------------------------------------------------

namespace serial {

void multiply_phase(std::span<cplx> psi, std::span<const double> phase) {
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= unit(phase[i]);
}

void multiply_scaled_phase(std::span<cplx> psi, std::span<const double> phase, double scale) {
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= unit(scale * phase[i]);
}

void multiply(std::span<cplx> psi, std::span<const cplx> factor) {
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= factor[i];
}

void scale(std::span<cplx> psi, double s) {
  for (auto& z : psi) z *= s;
}

cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
  const std::size_t nb = num_blocks(a.size());
  std::vector<cplx> partial(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    const std::size_t lo = k * kReductionBlock;
    partial[k] = dot_block(a.data() + lo, b.data() + lo, std::min(kReductionBlock, a.size() - lo));
  }
  return pairwise(partial.data(), nb);
}

double norm2(std::span<const cplx> a) {
  const std::size_t nb = num_blocks(a.size());
  std::vector<double> partial(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    const std::size_t lo = k * kReductionBlock;
    partial[k] = norm_block(a.data() + lo, std::min(kReductionBlock, a.size() - lo));
  }
  return pairwise(partial.data(), nb);
}

void add_outer(std::span<double> out, std::span<const double> gx, std::span<const double> gy,
               double amp) {
  for (std::size_t i = 0; i < gx.size(); ++i) {
    const double ai = amp * gx[i];
    for (std::size_t j = 0; j < gy.size(); ++j) out[i * gy.size() + j] += ai * gy[j];
  }
}

void backproject(std::span<double> image, int points, double half, std::span<const double> rows,
                 int row_len, std::span<const double> cos_a, std::span<const double> sin_a,
                 double s0, double ds, double weight) {
  std::vector<double> scratch(cos_a.size());
  for (int i = 0; i < points; ++i) {
    for (int j = 0; j < points; ++j) {
      image[static_cast<std::size_t>(i) * points + j] =
          weight * pixel_sum(i, j, points, half, rows.data(), row_len, cos_a.data(),
                             sin_a.data(), cos_a.size(), s0, ds, scratch.data());
    }
  }
}

}  // namespace serial
}  // namespace tdho::kernels
