#include "tdho/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "json.hpp"

#include "tdho/binary_io.hpp"
#include "tdho/error.hpp"
#include "tdho/kernels.hpp"

namespace tdho {

namespace {

constexpr int kOversample = 4;
constexpr int kLagrangeOrder = 10;

// Product of per-axis factors over the row-major cube, axis 0 slowest.
fft::CVec outer_product(const std::vector<std::vector<cplx>>& axes) {
  fft::CVec out(1, cplx(1.0, 0.0));
  for (const auto& f : axes) {
    fft::CVec next(out.size() * f.size());
    for (std::size_t i = 0; i < out.size(); ++i)
      for (std::size_t j = 0; j < f.size(); ++j) next[i * f.size() + j] = out[i] * f[j];
    out = std::move(next);
  }
  return out;
}

void apply_axes(WaveFunction& psi, const std::vector<cplx>& axis_factor) {
  std::vector<std::vector<cplx>> axes(psi.grid().n, axis_factor);
  auto full = outer_product(axes);
  kernels::multiply(psi.values(), full);
}

void apply_axes(WaveFunction& psi, const std::vector<std::vector<cplx>>& axes) {
  auto full = outer_product(axes);
  kernels::multiply(psi.values(), full);
}

void require_position(const WaveFunction& psi, const char* op) {
  if (psi.space() != Space::kPosition)
    throw UsageError(std::string(op) + ": expected position-space data");
}

void require_same_grid(const WaveFunction& a, const WaveFunction& b, const char* op) {
  if (!(a.grid() == b.grid())) throw UsageError(std::string(op) + ": grid mismatch");
  if (a.space() != b.space()) throw UsageError(std::string(op) + ": space tag mismatch");
}

double cell_volume(const WaveFunction& psi) {
  const auto& g = psi.grid();
  const double h = psi.space() == Space::kPosition ? g.dx() : g.dp();
  return std::pow(h, g.n);
}

// Unnormalized FFT followed by multiplication with per-axis factors.
void spectral_multiply(WaveFunction& psi, const std::vector<cplx>& axis_factor) {
  const auto dims = psi.grid().dims();
  fft::transform(psi.values(), dims, fft::Direction::kForward);
  apply_axes(psi, axis_factor);
  fft::transform(psi.values(), dims, fft::Direction::kBackward);
}

// Marginal mass per axis index.
std::vector<std::vector<double>> marginals(const WaveFunction& psi) {
  const auto& g = psi.grid();
  const int N = g.points;
  std::vector<std::vector<double>> m(g.n, std::vector<double>(N, 0.0));
  std::vector<int> idx(g.n, 0);
  for (std::size_t flat = 0; flat < psi.size(); ++flat) {
    const double w = std::norm(psi[flat]);
    for (int a = 0; a < g.n; ++a) m[a][idx[a]] += w;
    for (int a = g.n - 1; a >= 0; --a) {
      if (++idx[a] < N) break;
      idx[a] = 0;
    }
  }
  return m;
}

struct LagrangeStencil {
  int base = 0;  // first node index on the fine grid (unwrapped)
  double w[kLagrangeOrder] = {};
  bool inside = false;
};

LagrangeStencil make_stencil(double f) {
  LagrangeStencil s;
  const double fl = std::floor(f);
  const double frac = f - fl;
  s.base = static_cast<int>(fl) - (kLagrangeOrder / 2 - 1);
  for (int j = 0; j < kLagrangeOrder; ++j) {
    const double xj = j - (kLagrangeOrder / 2 - 1);
    double num = 1.0, den = 1.0;
    for (int m = 0; m < kLagrangeOrder; ++m) {
      if (m == j) continue;
      const double xm = m - (kLagrangeOrder / 2 - 1);
      num *= frac - xm;
      den *= xj - xm;
    }
    s.w[j] = num / den;
  }
  s.inside = true;
  return s;
}

// Resamples one periodic line of N points at the targets given by stencils.
void resample_line(std::span<cplx> line, const std::vector<LagrangeStencil>& stencils,
                   fft::CVec& coarse, fft::CVec& fine, double gain) {
  const int N = static_cast<int>(line.size());
  const int F = kOversample * N;
  std::copy(line.begin(), line.end(), coarse.begin());
  const int dims_c[1] = {N};
  const int dims_f[1] = {F};
  fft::transform(coarse, dims_c, fft::Direction::kForward);
  std::fill(fine.begin(), fine.end(), cplx(0.0, 0.0));
  for (int k = 0; k < N / 2; ++k) fine[k] = coarse[k];
  for (int k = N / 2 + 1; k < N; ++k) fine[F - N + k] = coarse[k];
  fine[N / 2] = 0.5 * coarse[N / 2];
  fine[F - N / 2] = 0.5 * coarse[N / 2];
  fft::transform(fine, dims_f, fft::Direction::kBackward);
  const double scale = gain / N;
  for (int i = 0; i < N; ++i) {
    const auto& s = stencils[i];
    if (!s.inside) {
      line[i] = 0.0;
      continue;
    }
    cplx acc = 0.0;
    for (int j = 0; j < kLagrangeOrder; ++j) {
      int m = (s.base + j) % F;
      if (m < 0) m += F;
      acc += s.w[j] * fine[m];
    }
    line[i] = scale * acc;
  }
}

}  // namespace

// --- GridSpec ---------------------------------------------------------------

double GridSpec::dp() const { return std::numbers::pi / half_width; }

double GridSpec::xi(int k) const { return (k < points / 2 ? k : k - points) * dp(); }

std::size_t GridSpec::size() const {
  std::size_t s = 1;
  for (int a = 0; a < n; ++a) s *= static_cast<std::size_t>(points);
  return s;
}

void GridSpec::validate() const {
  if (n < 1) throw ParameterError("grid: n >= 1 required");
  if (points < 8 || points % 2 != 0) throw ParameterError("grid: points must be even and >= 8");
  if (!(half_width > 0.0)) throw ParameterError("grid: half_width > 0 required");
}

WaveFunction::WaveFunction(const GridSpec& grid, Space space)
    : grid_(grid), space_(space), data_(grid.size(), cplx(0.0, 0.0)) {
  grid_.validate();
}

// --- construction and transforms ------------------------------------------

WaveFunction sample(const GridSpec& grid, const std::function<cplx(std::span<const double>)>& f) {
  WaveFunction psi(grid);
  const int N = grid.points;
  std::vector<int> idx(grid.n, 0);
  Vec x(grid.n);
  for (std::size_t flat = 0; flat < psi.size(); ++flat) {
    for (int a = 0; a < grid.n; ++a) x[a] = grid.x(idx[a]);
    psi[flat] = f(x);
    for (int a = grid.n - 1; a >= 0; --a) {
      if (++idx[a] < N) break;
      idx[a] = 0;
    }
  }
  return psi;
}

WaveFunction fft_forward(WaveFunction psi) {
  require_position(psi, "fft_forward");
  const auto& g = psi.grid();
  fft::transform(psi.values(), g.dims(), fft::Direction::kForward);
  // exp(i xi_k L) = (-1)^k for even N.
  const double scale = g.dx() / std::sqrt(2.0 * std::numbers::pi);
  std::vector<cplx> f(g.points);
  for (int k = 0; k < g.points; ++k) f[k] = (k % 2 == 0 ? scale : -scale);
  apply_axes(psi, f);
  psi.set_space(Space::kMomentum);
  return psi;
}

WaveFunction fft_inverse(WaveFunction psi) {
  if (psi.space() != Space::kMomentum)
    throw UsageError("fft_inverse: expected momentum-space data");
  const auto& g = psi.grid();
  const double scale = g.dp() / std::sqrt(2.0 * std::numbers::pi);
  std::vector<cplx> f(g.points);
  for (int k = 0; k < g.points; ++k) f[k] = (k % 2 == 0 ? scale : -scale);
  apply_axes(psi, f);
  fft::transform(psi.values(), g.dims(), fft::Direction::kBackward);
  psi.set_space(Space::kPosition);
  return psi;
}

cplx inner_product(const WaveFunction& phi, const WaveFunction& psi) {
  require_same_grid(phi, psi, "inner_product");
  return kernels::dot(phi.values(), psi.values()) * cell_volume(psi);
}

double norm2(const WaveFunction& psi) { return kernels::norm2(psi.values()) * cell_volume(psi); }

double norm(const WaveFunction& psi) { return std::sqrt(norm2(psi)); }

double l2_distance(const WaveFunction& a, const WaveFunction& b) {
  require_same_grid(a, b, "l2_distance");
  WaveFunction d = a;
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= b[i];
  return norm(d);
}

// --- elementary unitaries ---------------------------------------------------

WaveFunction quadratic_phase(WaveFunction psi, double c) {
  require_position(psi, "quadratic_phase");
  if (c == 0.0) return psi;
  const auto& g = psi.grid();
  std::vector<cplx> f(g.points);
  for (int i = 0; i < g.points; ++i) f[i] = std::polar(1.0, 0.5 * c * g.x(i) * g.x(i));
  apply_axes(psi, f);
  return psi;
}

WaveFunction linear_phase(WaveFunction psi, std::span<const double> v) {
  require_position(psi, "linear_phase");
  const auto& g = psi.grid();
  if (static_cast<int>(v.size()) != g.n) throw UsageError("linear_phase: dimension mismatch");
  if (std::all_of(v.begin(), v.end(), [](double c) { return c == 0.0; })) return psi;
  std::vector<std::vector<cplx>> axes(g.n, std::vector<cplx>(g.points));
  for (int a = 0; a < g.n; ++a)
    for (int i = 0; i < g.points; ++i) axes[a][i] = std::polar(1.0, v[a] * g.x(i));
  apply_axes(psi, axes);
  return psi;
}

WaveFunction free_flow(WaveFunction psi, double tau) {
  require_position(psi, "free_flow");
  if (tau == 0.0) return psi;
  const auto& g = psi.grid();
  const double norm_1d = 1.0 / g.points;
  std::vector<cplx> f(g.points);
  for (int k = 0; k < g.points; ++k) f[k] = std::polar(norm_1d, -0.5 * tau * g.xi(k) * g.xi(k));
  spectral_multiply(psi, f);
  return psi;
}

WaveFunction translate(WaveFunction psi, std::span<const double> a) {
  require_position(psi, "translate");
  const auto& g = psi.grid();
  if (static_cast<int>(a.size()) != g.n) throw UsageError("translate: dimension mismatch");
  if (std::all_of(a.begin(), a.end(), [](double c) { return c == 0.0; })) return psi;
  const auto m = marginals(psi);
  double total = 0.0;
  for (double w : m[0]) total += w;
  for (int ax = 0; ax < g.n; ++ax) {
    double wrapped = 0.0;
    for (int i = 0; i < g.points; ++i) {
      const double y = g.x(i) + a[ax];
      if (y < -g.half_width || y >= g.half_width) wrapped += m[ax][i];
    }
    if (wrapped > 1e-12 * total) {
      const double r = support_radius(psi);
      throw GridOverflow("translate: shifted content leaves the grid",
                         r + std::abs(a[ax]));
    }
  }
  const double norm_1d = 1.0 / g.points;
  std::vector<std::vector<cplx>> axes(g.n, std::vector<cplx>(g.points));
  for (int ax = 0; ax < g.n; ++ax)
    for (int k = 0; k < g.points; ++k) axes[ax][k] = std::polar(norm_1d, -a[ax] * g.xi(k));
  const auto dims = g.dims();
  fft::transform(psi.values(), dims, fft::Direction::kForward);
  apply_axes(psi, axes);
  fft::transform(psi.values(), dims, fft::Direction::kBackward);
  return psi;
}

WaveFunction dilation(WaveFunction psi, double theta) {
  require_position(psi, "dilation");
  if (theta == 0.0) return psi;
  const auto& g = psi.grid();
  const int N = g.points;
  const double L = g.half_width;
  const double shrink = std::exp(-theta);

  if (theta > 0.0) {
    // Content at |x| > L e^(-theta) would be pushed off the grid.
    const auto m = marginals(psi);
    double total = 0.0;
    for (double w : m[0]) total += w;
    for (int ax = 0; ax < g.n; ++ax) {
      double lost = 0.0;
      for (int i = 0; i < N; ++i)
        if (std::abs(g.x(i)) >= L * shrink - g.dx()) lost += m[ax][i];
      if (lost > 1e-12 * total)
        throw GridOverflow("dilation: content leaves the grid",
                           support_radius(psi) / shrink + g.dx());
    }
  }

  const double hf = g.dx() / kOversample;
  std::vector<LagrangeStencil> stencils(N);
  for (int i = 0; i < N; ++i) {
    const double u = shrink * g.x(i);
    if (u < -L || u >= L) continue;
    stencils[i] = make_stencil((u + L) / hf);
  }
  const double gain = std::exp(-0.5 * theta);

  // Resample along each axis in turn.
  const std::size_t total = psi.size();
  fft::CVec line(N), coarse(N), fine(static_cast<std::size_t>(kOversample) * N);
  for (int ax = 0; ax < g.n; ++ax) {
    std::size_t stride = 1;
    for (int b = ax + 1; b < g.n; ++b) stride *= N;
    const std::size_t block = stride * N;
    for (std::size_t outer = 0; outer < total; outer += block) {
      for (std::size_t inner = 0; inner < stride; ++inner) {
        const std::size_t base = outer + inner;
        for (int i = 0; i < N; ++i) line[i] = psi[base + i * stride];
        resample_line(line, stencils, coarse, fine, gain);
        for (int i = 0; i < N; ++i) psi[base + i * stride] = line[i];
      }
    }
  }
  return psi;
}

WaveFunction global_phase(WaveFunction psi, cplx factor) {
  for (auto& z : psi.values()) z *= factor;
  return psi;
}

// --- monitors and moments ---------------------------------------------------

double boundary_mass(const WaveFunction& psi, double band) {
  const auto& g = psi.grid();
  std::vector<char> edge(g.points, 0);
  for (int i = 0; i < g.points; ++i) {
    const double x = g.x(i);
    edge[i] = (x < -g.half_width + band || x > g.half_width - band) ? 1 : 0;
  }
  std::vector<int> idx(g.n, 0);
  double mass = 0.0;
  for (std::size_t flat = 0; flat < psi.size(); ++flat) {
    bool on_edge = false;
    for (int a = 0; a < g.n && !on_edge; ++a) on_edge = edge[idx[a]];
    if (on_edge) mass += std::norm(psi[flat]);
    for (int a = g.n - 1; a >= 0; --a) {
      if (++idx[a] < g.points) break;
      idx[a] = 0;
    }
  }
  return mass * cell_volume(psi);
}

double support_radius(const WaveFunction& psi, double tol) {
  const auto& g = psi.grid();
  const auto m = marginals(psi);
  double total = 0.0;
  for (double w : m[0]) total += w;
  if (total == 0.0) return 0.0;
  double r_max = 0.0;
  for (int a = 0; a < g.n; ++a) {
    // Grow r from the outside in until the excluded mass exceeds tol.
    double outside = 0.0;
    int lo = 0, hi = g.points - 1;
    while (lo <= hi) {
      const double next = std::abs(g.x(lo)) >= std::abs(g.x(hi)) ? m[a][lo] : m[a][hi];
      if (outside + next > tol * total) break;
      outside += next;
      if (std::abs(g.x(lo)) >= std::abs(g.x(hi)))
        ++lo;
      else
        --hi;
    }
    if (lo <= hi) r_max = std::max(r_max, std::max(std::abs(g.x(lo)), std::abs(g.x(hi))));
  }
  return r_max;
}

void check_on_grid(const WaveFunction& psi, const std::string& context, double tol, double band) {
  require_position(psi, "check_on_grid");
  const auto& g = psi.grid();
  if (band < 0.0) band = g.half_width / 8.0;
  const double total = norm2(psi);
  if (total == 0.0) return;
  const double edge = boundary_mass(psi, band);
  if (edge > tol * total) {
    char buf[96];
    std::snprintf(buf, sizeof buf, ": boundary mass %.3e exceeds tolerance %.3e", edge / total,
                  tol);
    throw GridOverflow(context + buf,
                       support_radius(psi) + band);
  }
}

Vec centroid(const WaveFunction& psi) {
  require_position(psi, "centroid");
  const auto& g = psi.grid();
  const auto m = marginals(psi);
  Vec c(g.n, 0.0);
  for (int a = 0; a < g.n; ++a) {
    double s = 0.0, w = 0.0;
    for (int i = 0; i < g.points; ++i) {
      s += g.x(i) * m[a][i];
      w += m[a][i];
    }
    c[a] = w > 0.0 ? s / w : 0.0;
  }
  return c;
}

Vec mean_momentum(const WaveFunction& psi) {
  const WaveFunction hat = fft_forward(psi);
  const auto& g = psi.grid();
  const auto m = marginals(hat);
  Vec c(g.n, 0.0);
  for (int a = 0; a < g.n; ++a) {
    double s = 0.0, w = 0.0;
    for (int k = 0; k < g.points; ++k) {
      s += g.xi(k) * m[a][k];
      w += m[a][k];
    }
    c[a] = w > 0.0 ? s / w : 0.0;
  }
  return c;
}

// --- export -----------------------------------------------------------------

void write_binary(const WaveFunction& psi, const std::string& path) {
  const auto& g = psi.grid();
  std::vector<double> flat(2 * psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) {
    flat[2 * i] = psi[i].real();
    flat[2 * i + 1] = psi[i].imag();
  }
  io::write_f64_le(path, flat);
  nlohmann::json meta;
  meta["shape"] = g.dims();
  meta["dtype"] = "complex128 as interleaved float64 (re, im), little-endian, row-major";
  meta["grid"] = {{"n", g.n}, {"points", g.points}, {"half_width", g.half_width},
                  {"dx", g.dx()}, {"dp", g.dp()}};
  meta["space"] = psi.space() == Space::kPosition ? "position" : "momentum";
  if (psi.space() == Space::kPosition)
    meta["axis_range"] = {-g.half_width, g.half_width};
  else
    meta["axis_layout"] = "fft order, xi_k = k dp for k < points/2, (k - points) dp otherwise";
  std::ofstream(path + ".json") << meta.dump(2) << '\n';
}

void write_csv(const WaveFunction& psi, const std::string& path) {
  const auto& g = psi.grid();
  if (g.n != 1) throw UsageError("write_csv: only one-dimensional wavefunctions");
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  out.precision(17);
  out << (psi.space() == Space::kPosition ? "x" : "xi") << ",re,im\n";
  for (int i = 0; i < g.points; ++i) {
    const double coord = psi.space() == Space::kPosition ? g.x(i) : g.xi(i);
    out << coord << ',' << psi[i].real() << ',' << psi[i].imag() << '\n';
  }
}

}  // namespace tdho
