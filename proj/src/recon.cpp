#include "tdho/recon.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "json.hpp"
#include "tdho/binary_io.hpp"
#include "tdho/error.hpp"
#include "tdho/fft.hpp"
#include "tdho/kernels.hpp"

namespace tdho {

namespace {

using boost::math::quadrature::exp_sinh;
using boost::math::quadrature::gauss_kronrod;
using boost::math::quadrature::tanh_sinh;

constexpr double kQuadTol = 1e-11;
constexpr double kSmearReach = 9.0;  // in units of w

using GK = gauss_kronrod<double, 31>;

double gk(const std::function<double(double)>& f, double a, double b) {
  if (!(b > a)) return 0.0;
  return GK::integrate(f, a, b, 20, kQuadTol);
}

// Integral of V over the line at signed distance `d` from the component
// centre, for each radial component profile.
struct LineIntegral {
  double d;
  double clamp;

  double operator()(const GaussianBump& g) const {
    const double w = g.width;
    const double ed = std::exp(-d * d / (w * w));
    return 2.0 * g.amplitude * ed * gk([&](double t) { return std::exp(-t * t / (w * w)); },
                                       0.0, 7.0 * w);
  }
  double operator()(const SmoothCompactBump& b) const {
    const double R = b.radius;
    if (std::abs(d) >= R) return 0.0;
    const double half = std::sqrt(R * R - d * d);
    return 2.0 * gk(
                     [&](double t) {
                       const double q = (d * d + t * t) / (R * R);
                       return q < 1.0 ? b.amplitude * std::exp(1.0 - 1.0 / (1.0 - q)) : 0.0;
                     },
                     0.0, half);
  }
  double operator()(const TruncatedSingular& s) const {
    const double R = s.radius;
    if (std::abs(d) >= R) return 0.0;
    const double half = std::sqrt(R * R - d * d);
    // r^(-alpha) reaches the clamp at r_c; split there.
    const double rc = std::pow(clamp / std::abs(s.amplitude), -1.0 / s.alpha);
    double t_kink = 0.0;
    if (std::abs(d) < rc) t_kink = std::min(half, std::sqrt(rc * rc - d * d));
    auto f = [&](double t) {
      const double r = std::sqrt(d * d + t * t);
      if (r == 0.0) return std::copysign(clamp, s.amplitude);
      const double v = s.amplitude * std::pow(r, -s.alpha);
      return std::clamp(v, -clamp, clamp);
    };
    tanh_sinh<double> ts;
    double total = 0.0;
    if (t_kink > 0.0) total += t_kink * std::copysign(clamp, s.amplitude);
    if (half > t_kink) total += ts.integrate(f, t_kink, half, kQuadTol);
    return 2.0 * total;
  }
  double operator()(const PowerTail& p) const {
    exp_sinh<double> es;
    return 2.0 * es.integrate(
                     [&](double t) {
                       return p.amplitude * std::pow(1.0 + d * d + t * t, -0.5 * p.rho);
                     },
                     0.0, std::numeric_limits<double>::infinity(), kQuadTol);
  }
};

// Offsets (relative to the component line) where X(sigma) is not smooth.
std::vector<double> kinks(const PotentialComponent& c) {
  if (std::holds_alternative<TruncatedSingular>(c)) {
    const double R = std::get<TruncatedSingular>(c).radius;
    return {-R, 0.0, R};
  }
  return {};
}

double component_xray(const PotentialComponent& c, double angle, double offset, double w,
                      double clamp) {
  const Vec center = component_center(c, 2);
  const double nx = -std::sin(angle), ny = std::cos(angle);
  const double sc = center[0] * nx + center[1] * ny;  // offset of the centre
  auto line = [&](double sigma) { return std::visit(LineIntegral{sigma - sc, clamp}, c); };
  if (w == 0.0) return line(offset);
  const double norm = 1.0 / (w * std::sqrt(std::numbers::pi));
  auto integrand = [&](double u) { return norm * std::exp(-u * u / (w * w)) * line(offset + u); };
  std::vector<double> cuts{-kSmearReach * w};
  for (double k : kinks(c)) {
    const double u = sc + k - offset;
    if (u > cuts.front() && u < kSmearReach * w) cuts.push_back(u);
  }
  cuts.push_back(kSmearReach * w);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += gk(integrand, cuts[i], cuts[i + 1]);
  return total;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Spectral Ram-Lak filter of length P (FFT order), Hann-apodized if asked,
// with the 1/P of the inverse transform folded in.
std::vector<cplx> ramp_response(std::size_t P, double ds, bool hann) {
  fft::CVec h(P, cplx(0.0, 0.0));
  const long half = static_cast<long>(P / 2);
  for (long n = -half + 1; n < half; ++n) {
    double v = 0.0;
    if (n == 0)
      v = 1.0 / (4.0 * ds * ds);
    else if (n % 2 != 0)
      v = -1.0 / (std::numbers::pi * std::numbers::pi * double(n) * n * ds * ds);
    h[(n + static_cast<long>(P)) % P] = v;
  }
  const int dims[1] = {static_cast<int>(P)};
  fft::transform(h, dims, fft::Direction::kForward);
  std::vector<cplx> resp(P);
  for (std::size_t k = 0; k < P; ++k) {
    const long kk = k < P / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(P);
    const double win = hann ? 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * kk / double(P))) : 1.0;
    resp[k] = h[k] * win * ds / double(P);
  }
  return resp;
}

std::vector<double> filter_rows(const Sinogram& sino, bool hann) {
  const int K = sino.num_angles(), M = sino.num_offsets();
  const std::size_t P = next_pow2(2 * static_cast<std::size_t>(M));
  const auto resp = ramp_response(P, sino.ds, hann);
  std::vector<double> rows(static_cast<std::size_t>(K) * M);
  fft::CVec buf(P);
  const int dims[1] = {static_cast<int>(P)};
  for (int k = 0; k < K; ++k) {
    std::fill(buf.begin(), buf.end(), cplx(0.0, 0.0));
    for (int m = 0; m < M; ++m) buf[m] = sino.at(k, m);
    fft::transform(buf, dims, fft::Direction::kForward);
    for (std::size_t i = 0; i < P; ++i) buf[i] *= resp[i];
    fft::transform(buf, dims, fft::Direction::kBackward);
    for (int m = 0; m < M; ++m) rows[static_cast<std::size_t>(k) * M + m] = buf[m].real();
  }
  return rows;
}

void check_coverage(const Sinogram& sino) {
  if (sino.num_angles() < 32 || sino.num_offsets() < 33) {
    std::ostringstream os;
    os << "fbp_invert: insufficient coverage (K=" << sino.num_angles()
       << ", M=" << sino.num_offsets() << "); need K >= 32 angles and M >= 33 offsets";
    throw ParameterError(os.str());
  }
}

template <class Backproject>
FieldGrid fbp_impl(const Sinogram& sino, const FbpOptions& opts, Backproject bp) {
  check_coverage(sino);
  const int K = sino.num_angles(), M = sino.num_offsets();
  const auto rows = filter_rows(sino, opts.hann);
  std::vector<double> ca(K), sa(K);
  for (int k = 0; k < K; ++k) {
    ca[k] = std::cos(sino.angles[k]);
    sa[k] = std::sin(sino.angles[k]);
  }
  FieldGrid f = FieldGrid::zeros(opts.points, opts.half_width);
  bp(f.values, opts.points, opts.half_width, rows, M, ca, sa, sino.offsets.front(), sino.ds,
     std::numbers::pi / K);
  return f;
}

}  // namespace

FieldGrid FieldGrid::zeros(int points, double half_width) {
  if (points < 1 || !(half_width > 0.0)) throw ParameterError("field grid: bad size");
  FieldGrid f;
  f.points = points;
  f.half_width = half_width;
  f.values.assign(static_cast<std::size_t>(points) * points, 0.0);
  return f;
}

double xray_reference(const PotentialSpec& potential, double angle, double offset, double w,
                      double clamp) {
  double total = 0.0;
  for (const auto& c : potential.components)
    total += component_xray(c, angle, offset, w, clamp);
  return total;
}

Sinogram xray_sinogram(const PotentialSpec& potential, int num_angles, int num_offsets, double ds,
                       double w, double clamp) {
  Sinogram s = Sinogram::make(num_angles, num_offsets, ds);
  s.probe_width = w;
  for (int k = 0; k < num_angles; ++k)
    for (int m = 0; m < num_offsets; ++m)
      s.at(k, m) = xray_reference(potential, s.angles[k], s.offsets[m], w, clamp);
  return s;
}

FieldGrid fbp_invert(const Sinogram& sino, const FbpOptions& opts) {
  return fbp_impl(sino, opts, [](auto&&... args) { kernels::backproject(args...); });
}

FieldGrid serial::fbp_invert(const Sinogram& sino, const FbpOptions& opts) {
  return fbp_impl(sino, opts, [](auto&&... args) { kernels::serial::backproject(args...); });
}

Sinogram deconvolve_smear(const Sinogram& sino, double w, double eps) {
  if (!(eps > 0.0)) throw ParameterError("deconvolve_smear: eps > 0 required");
  Sinogram out = sino;
  if (w == 0.0 || std::isinf(eps)) return out;
  const int K = sino.num_angles(), M = sino.num_offsets();
  const std::size_t P = next_pow2(2 * static_cast<std::size_t>(M));
  fft::CVec buf(P);
  const int dims[1] = {static_cast<int>(P)};
  for (int k = 0; k < K; ++k) {
    std::fill(buf.begin(), buf.end(), cplx(0.0, 0.0));
    for (int m = 0; m < M; ++m) buf[m] = sino.at(k, m);
    fft::transform(buf, dims, fft::Direction::kForward);
    for (std::size_t i = 0; i < P; ++i) {
      const long kk = i < P / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(P);
      const double rho = 2.0 * std::numbers::pi * kk / (P * sino.ds);
      const double ph = std::exp(-0.25 * w * w * rho * rho);
      buf[i] *= (ph + eps) / (ph * ph + eps) / double(P);
    }
    fft::transform(buf, dims, fft::Direction::kBackward);
    for (int m = 0; m < M; ++m) out.at(k, m) = buf[m].real();
  }
  out.probe_width = 0.0;
  return out;
}

std::vector<char> support_mask(const PotentialSpec& potential, const FieldGrid& grid) {
  std::vector<char> mask(grid.values.size(), 0);
  for (const auto& c : potential.components) {
    double r = 0.0;
    if (auto* g = std::get_if<GaussianBump>(&c)) r = 2.0 * g->width;
    else if (auto* b = std::get_if<SmoothCompactBump>(&c)) r = b->radius;
    else if (auto* s = std::get_if<TruncatedSingular>(&c)) r = s->radius;
    else r = grid.half_width * std::sqrt(2.0);
    const Vec cc = component_center(c, 2);
    for (int i = 0; i < grid.points; ++i)
      for (int j = 0; j < grid.points; ++j) {
        const double dx = grid.coord(i) - cc[0], dy = grid.coord(j) - cc[1];
        if (dx * dx + dy * dy <= r * r) mask[static_cast<std::size_t>(i) * grid.points + j] = 1;
      }
  }
  return mask;
}

FieldGrid sample_field(const PotentialSpec& potential, int points, double half_width,
                       double clamp) {
  FieldGrid f = FieldGrid::zeros(points, half_width);
  for (int i = 0; i < points; ++i)
    for (int j = 0; j < points; ++j) {
      const double x[2] = {f.coord(i), f.coord(j)};
      f.at(i, j) = evaluate_potential(potential, x, clamp);
    }
  return f;
}

FieldMetrics compare_potentials(const FieldGrid& a, const FieldGrid& b,
                                const std::vector<char>& mask) {
  if (a.points != b.points || a.half_width != b.half_width || mask.size() != a.values.size())
    throw UsageError("compare_potentials: grid mismatch");
  FieldMetrics m;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double d = a.values[i] - b.values[i];
    num += d * d;
    den += b.values[i] * b.values[i];
    m.linf = std::max(m.linf, std::abs(d));
  }
  m.relative_l2 = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  return m;
}

FieldMetrics compare_potentials(const FieldGrid& a, const FieldGrid& b,
                                const std::vector<char>& mask, const Sinogram& sa,
                                const Sinogram& sb) {
  FieldMetrics m = compare_potentials(a, b, mask);
  m.sinogram_rms = sinogram_rms_distance(sa, sb);
  m.has_sinogram = true;
  return m;
}

double sinogram_rms_distance(const Sinogram& a, const Sinogram& b) {
  if (a.values.size() != b.values.size() || a.values.empty())
    throw UsageError("sinogram_rms_distance: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    s += d * d;
  }
  return std::sqrt(s / a.values.size());
}

double sinogram_rms(const Sinogram& s) {
  double acc = 0.0;
  for (double v : s.values) acc += v * v;
  return s.values.empty() ? 0.0 : std::sqrt(acc / s.values.size());
}

// --- writers ------------------------------------------------------------------

void write_pgm(const FieldGrid& f, const std::string& path) {
  const auto [lo_it, hi_it] = std::minmax_element(f.values.begin(), f.values.end());
  const double lo = *lo_it, hi = *hi_it;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path);
  out << "P5\n" << f.points << ' ' << f.points << "\n255\n";
  std::vector<unsigned char> row(f.points);
  for (int r = 0; r < f.points; ++r) {
    const int j = f.points - 1 - r;
    for (int i = 0; i < f.points; ++i) {
      const double t = hi > lo ? (f.at(i, j) - lo) / (hi - lo) : 0.0;
      row[i] = static_cast<unsigned char>(std::clamp(std::floor(255.0 * t + 0.5), 0.0, 255.0));
    }
    out.write(reinterpret_cast<const char*>(row.data()), f.points);
  }
}

void write_field_binary(const FieldGrid& f, const std::string& path) {
  io::write_f64_le(path, f.values);
  nlohmann::json meta;
  meta["shape"] = {f.points, f.points};
  meta["dtype"] = "float64, little-endian, row-major (index i along x, j along y)";
  meta["axis_range"] = {-f.half_width, f.half_width};
  meta["pixel_centres"] = "x_i = -L + (i + 1/2) * 2L/points";
  meta["half_width"] = f.half_width;
  std::ofstream(path + ".json") << meta.dump(2) << '\n';
}

void write_field_csv(const FieldGrid& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  out.precision(17);
  out << "x,y,value\n";
  for (int i = 0; i < f.points; ++i)
    for (int j = 0; j < f.points; ++j)
      out << f.coord(i) << ',' << f.coord(j) << ',' << f.at(i, j) << '\n';
}

FieldGrid read_field_binary(const std::string& path) {
  std::ifstream meta_in(path + ".json");
  if (!meta_in) throw Error("missing sidecar " + path + ".json");
  const auto meta = nlohmann::json::parse(meta_in);
  FieldGrid f = FieldGrid::zeros(meta.at("shape").at(0).get<int>(),
                                 meta.at("half_width").get<double>());
  f.values = io::read_f64_le(path);
  if (f.values.size() != static_cast<std::size_t>(f.points) * f.points)
    throw Error(path + ": size does not match its sidecar");
  return f;
}

void write_sinogram(const Sinogram& s, const std::string& stem) {
  const int K = s.num_angles(), M = s.num_offsets();
  {
    std::ofstream out(stem + ".csv");
    if (!out) throw Error("cannot open " + stem + ".csv");
    out.precision(17);
    out << "angle,offset,value,error,speed\n";
    for (int k = 0; k < K; ++k)
      for (int m = 0; m < M; ++m) {
        const std::size_t i = static_cast<std::size_t>(k) * M + m;
        out << s.angles[k] << ',' << s.offsets[m] << ',' << s.values[i] << ','
            << (s.errors.empty() ? 0.0 : s.errors[i]) << ',' << s.speed << '\n';
      }
  }
  io::write_f64_le(stem + ".bin", s.values);
  nlohmann::json meta;
  meta["shape"] = {K, M};
  meta["dtype"] = "float64, little-endian, row-major (angle index slowest)";
  meta["angles"] = s.angles;
  meta["offsets"] = s.offsets;
  meta["ds"] = s.ds;
  meta["speed"] = s.speed;
  meta["probe_width"] = s.probe_width;
  meta["smear"] = "projected probe density exp(-u^2/w^2)/(w sqrt(pi)), w = probe_width";
  meta["holes"] = s.holes;
  meta["imag"] = s.imag;
  meta["errors"] = s.errors;
  std::ofstream(stem + ".json") << meta.dump(2) << '\n';
}

Sinogram read_sinogram(const std::string& stem) {
  std::ifstream meta_in(stem + ".json");
  if (!meta_in) throw Error("missing sinogram metadata " + stem + ".json");
  const auto meta = nlohmann::json::parse(meta_in);
  Sinogram s;
  s.angles = meta.at("angles").get<std::vector<double>>();
  s.offsets = meta.at("offsets").get<std::vector<double>>();
  s.ds = meta.at("ds").get<double>();
  s.speed = meta.value("speed", 0.0);
  s.probe_width = meta.value("probe_width", 0.0);
  s.holes = meta.value("holes", 0);
  s.values = io::read_f64_le(stem + ".bin");
  if (s.values.size() != s.angles.size() * s.offsets.size())
    throw Error(stem + ".bin: size does not match metadata");
  s.errors = meta.value("errors", std::vector<double>(s.values.size(), 0.0));
  s.imag = meta.value("imag", std::vector<double>(s.values.size(), 0.0));
  return s;
}

}  // namespace tdho
