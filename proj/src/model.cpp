#include "tdho/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tdho/error.hpp"

namespace tdho {

double lambda_from_sigma(double sigma) {
  if (!std::isfinite(sigma) || sigma < 0.0) {
    throw ParameterError("sigma must satisfy 0 <= sigma (got " + std::to_string(sigma) + ")");
  }
  if (sigma >= 0.25) {
    throw ParameterError("sigma must satisfy sigma < 1/4 (got " + std::to_string(sigma) + ")");
  }
  return (1.0 - std::sqrt(1.0 - 4.0 * sigma)) / 2.0;
}

double DecayParams::lambda() const { return lambda_from_sigma(sigma); }

void DecayParams::validate() const {
  lambda_from_sigma(sigma);
  if (!(omega > 0.0) || !std::isfinite(omega)) {
    throw ParameterError("omega must satisfy omega > 0");
  }
  if (!(r0 > 0.0) || !std::isfinite(r0)) {
    throw ParameterError("r0 must satisfy r0 > 0");
  }
}

double k_coeff(double t, const DecayParams& params) {
  if (std::abs(t) < params.r0) return params.omega * params.omega;
  return params.sigma / (t * t);
}

double classical_trajectory(double t, double c1, double c2, const DecayParams& params) {
  if (t < params.r0) {
    throw DomainError("classical_trajectory requires t >= r0");
  }
  const double lam = params.lambda();
  return c1 * std::pow(t, 1.0 - lam) + c2 * std::pow(t, lam);
}

namespace {

// k restricted to one region so RK4 stages never evaluate the other branch.
double k_in_region(double t, bool harmonic, const DecayParams& p) {
  return harmonic ? p.omega * p.omega : p.sigma / (t * t);
}

void rk4_segment(Vec& x, Vec& v, double ta, double tb, double dt, const DecayParams& p) {
  const double span = tb - ta;
  if (span == 0.0) return;
  const bool harmonic = std::abs(0.5 * (ta + tb)) < p.r0;
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(span) / dt - 1e-12)));
  const double h = span / steps;
  const std::size_t n = x.size();
  Vec k1x(n), k1v(n), k2x(n), k2v(n), k3x(n), k3v(n), k4x(n), k4v(n);
  for (int s = 0; s < steps; ++s) {
    const double t = ta + s * h;
    const double ka = k_in_region(t, harmonic, p);
    const double km = k_in_region(t + 0.5 * h, harmonic, p);
    const double kb = k_in_region(t + h, harmonic, p);
    for (std::size_t i = 0; i < n; ++i) {
      k1x[i] = v[i];
      k1v[i] = -ka * x[i];
      k2x[i] = v[i] + 0.5 * h * k1v[i];
      k2v[i] = -km * (x[i] + 0.5 * h * k1x[i]);
      k3x[i] = v[i] + 0.5 * h * k2v[i];
      k3v[i] = -km * (x[i] + 0.5 * h * k2x[i]);
      k4x[i] = v[i] + h * k3v[i];
      k4v[i] = -kb * (x[i] + h * k3x[i]);
      x[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
      v[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
    }
  }
}

}  // namespace

ClassicalState integrate_newton(const ClassicalState& state0, double t1, double dt,
                                const DecayParams& params) {
  if (!(dt > 0.0)) throw ParameterError("integrate_newton requires dt > 0");
  if (state0.x.size() != state0.v.size()) throw UsageError("x and v dimensions differ");
  ClassicalState s = state0;
  std::vector<double> cuts{state0.t};
  const double lo = std::min(state0.t, t1);
  const double hi = std::max(state0.t, t1);
  for (double b : {-params.r0, params.r0}) {
    if (b > lo && b < hi) cuts.push_back(b);
  }
  if (t1 < state0.t) {
    std::sort(cuts.begin() + 1, cuts.end(), std::greater<>());
  } else {
    std::sort(cuts.begin() + 1, cuts.end());
  }
  cuts.push_back(t1);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    rk4_segment(s.x, s.v, cuts[i], cuts[i + 1], dt, params);
  }
  s.t = t1;
  return s;
}

// ---------------------------------------------------------------------------

namespace {

double distance(std::span<const double> x, const Vec& c) {
  double r2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double ci = i < c.size() ? c[i] : 0.0;
    r2 += (x[i] - ci) * (x[i] - ci);
  }
  return std::sqrt(r2);
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

double evaluate_component(const PotentialComponent& comp, std::span<const double> x,
                          double clamp) {
  return std::visit(
      Overloaded{
          [&](const GaussianBump& g) {
            const double r = distance(x, g.center);
            return g.amplitude * std::exp(-(r * r) / (g.width * g.width));
          },
          [&](const SmoothCompactBump& b) {
            const double r = distance(x, b.center);
            const double u = r * r / (b.radius * b.radius);
            if (u >= 1.0) return 0.0;
            return b.amplitude * std::exp(1.0 - 1.0 / (1.0 - u));
          },
          [&](const PowerTail& p) {
            double r2 = 0.0;
            for (double xi : x) r2 += xi * xi;
            return p.amplitude * std::pow(1.0 + r2, -0.5 * p.rho);
          },
          [&](const TruncatedSingular& s) {
            const double r = distance(x, s.center);
            if (r >= s.radius) return 0.0;
            const double sign = s.amplitude < 0.0 ? -1.0 : 1.0;
            if (r == 0.0) return sign * clamp;
            const double v = s.amplitude * std::pow(r, -s.alpha);
            return std::abs(v) > clamp ? sign * clamp : v;
          },
      },
      comp);
}

double evaluate_potential(const PotentialSpec& spec, std::span<const double> x, double clamp) {
  double sum = 0.0;
  for (const auto& c : spec.components) sum += evaluate_component(c, x, clamp);
  return sum;
}

double effective_radius(const PotentialComponent& comp, double tol) {
  const double log_inv = std::log(1.0 / std::min(tol, 0.5));
  return std::visit(Overloaded{
                        [&](const GaussianBump& g) { return g.width * std::sqrt(log_inv); },
                        [&](const SmoothCompactBump& b) { return b.radius; },
                        [&](const PowerTail& p) {
                          return std::sqrt(std::pow(tol, -2.0 / p.rho) - 1.0);
                        },
                        [&](const TruncatedSingular& s) { return s.radius; },
                    },
                    comp);
}

Vec component_center(const PotentialComponent& comp, int dim) {
  Vec c = std::visit(Overloaded{
                         [](const GaussianBump& g) { return g.center; },
                         [](const SmoothCompactBump& b) { return b.center; },
                         [](const PowerTail&) { return Vec{}; },
                         [](const TruncatedSingular& s) { return s.center; },
                     },
                     comp);
  c.resize(dim, 0.0);
  return c;
}

PotentialSpec PotentialSpec::scaled(double factor) const {
  PotentialSpec out = *this;
  for (auto& c : out.components) {
    std::visit([&](auto& comp) { comp.amplitude *= factor; }, c);
  }
  return out;
}

PotentialSpec PotentialSpec::translated(std::span<const double> shift) const {
  PotentialSpec out = *this;
  for (auto& c : out.components) {
    std::visit(Overloaded{
                   [&](PowerTail&) {
                     throw UsageError("PowerTail is anchored at the origin and cannot be translated");
                   },
                   [&](auto& comp) {
                     comp.center.resize(std::max(comp.center.size(), shift.size()), 0.0);
                     for (std::size_t i = 0; i < shift.size(); ++i) comp.center[i] += shift[i];
                   },
               },
               c);
  }
  return out;
}

PotentialSpec PotentialSpec::operator+(const PotentialSpec& other) const {
  PotentialSpec out = *this;
  out.components.insert(out.components.end(), other.components.begin(), other.components.end());
  return out;
}

// ---------------------------------------------------------------------------

bool AdmissibilityReport::passed() const {
  return std::all_of(clauses.begin(), clauses.end(), [](const auto& c) { return c.passed; });
}

std::string AdmissibilityReport::to_string() const {
  std::ostringstream os;
  for (const auto& c : clauses) {
    os << (c.passed ? "PASS " : "FAIL ") << c.clause;
    if (c.component >= 0) os << " [component " << c.component << "]";
    if (!c.detail.empty()) os << ": " << c.detail;
    os << '\n';
  }
  if (diagnostic_mode) os << "NOTE sigma=0 diagnostic mode (not a physical parameter set)\n";
  return os.str();
}

AdmissibilityReport check_admissibility(const PotentialSpec& spec, const DecayParams& params,
                                        int dim) {
  AdmissibilityReport rep;
  rep.diagnostic_mode = params.diagnostic();
  double lam = 0.0;
  {
    AdmissibilityClause c{"0≤σ<1/4, ω>0, r₀>0", -1, true, ""};
    try {
      params.validate();
      lam = params.lambda();
      std::ostringstream d;
      d << "lambda=" << lam;
      c.detail = d.str();
    } catch (const ParameterError& e) {
      c.passed = false;
      c.detail = e.what();
    }
    rep.clauses.push_back(c);
  }
  const double threshold = 1.0 / (1.0 - lam);

  for (std::size_t i = 0; i < spec.components.size(); ++i) {
    const int idx = static_cast<int>(i);
    std::visit(
        Overloaded{
            [&](const GaussianBump& g) {
              const bool ok = g.width > 0.0 && std::isfinite(g.amplitude) &&
                              g.center.size() == static_cast<std::size_t>(dim);
              rep.clauses.push_back({"bounded part, faster than any power", idx, ok,
                                     ok ? "" : "width must be > 0 and center must have dim entries"});
            },
            [&](const SmoothCompactBump& b) {
              const bool ok = b.radius > 0.0 && std::isfinite(b.amplitude) &&
                              b.center.size() == static_cast<std::size_t>(dim);
              rep.clauses.push_back({"bounded part, compact support", idx, ok,
                                     ok ? "" : "radius must be > 0 and center must have dim entries"});
            },
            [&](const PowerTail& p) {
              std::ostringstream d;
              d << "rho=" << p.rho << ", 1/(1-lambda)=" << threshold;
              const bool ok = p.rho > threshold;
              if (!ok) d << " (long-range: decay rate not strictly above the threshold)";
              rep.clauses.push_back({"ρ>1/(1−λ)", idx, ok, d.str()});
            },
            [&](const TruncatedSingular& s) {
              {
                const bool ok = s.radius > 0.0 && s.alpha > 0.0 &&
                                s.center.size() == static_cast<std::size_t>(dim);
                rep.clauses.push_back({"singular part compactly supported", idx, ok,
                                       ok ? "" : "radius, alpha must be > 0 and center must have dim entries"});
              }
              {
                std::ostringstream d;
                d << "alpha*q=" << s.alpha * s.q << ", n=" << dim;
                rep.clauses.push_back({"α·q<n", idx, s.alpha * s.q < dim, d.str()});
              }
              {
                bool ok;
                std::ostringstream d;
                d << "q=" << s.q << ", n=" << dim;
                if (dim <= 3) {
                  ok = s.q == 2.0;
                  d << " (q=2 required for n<=3)";
                } else {
                  ok = std::isfinite(s.q) && s.q > dim / 2.0;
                  d << " (n/2<q<inf required for n>=4)";
                }
                rep.clauses.push_back({"q rule: q=2 (n≤3), q>n/2 (n≥4)", idx, ok, d.str()});
              }
            },
        },
        spec.components[i]);
  }
  return rep;
}

}  // namespace tdho
