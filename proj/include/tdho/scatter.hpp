#pragma once

#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "tdho/gauss.hpp"
#include "tdho/grid.hpp"
#include "tdho/interprop.hpp"
#include "tdho/model.hpp"
#include "tdho/sinogram.hpp"

namespace tdho {

struct ProbeSpec {
  double width = 0.25;  // envelope width w of Phi_0
  Vec center;           // y
  Vec velocity;         // v

  double speed() const;
  Vec direction() const;
  // Effective Fourier radius of the Gaussian envelope.
  double eta() const { return 8.0 / width; }
  void validate() const;
};

// Phi_v = exp(i v.x) Phi_0(x - y), normalized.
GaussianState build_probe(const ProbeSpec& spec);

// kScattering: Phi_in = U0(-t*, 0) Phi_v, Psi_out = U0(t*, 0) Psi_v.
// kTildeBoundary: Phi_in = U0(-t*, -r0) U0~(-r0) Phi_v,
//                 Psi_out = U0(t*, r0) U0~(r0) Psi_v.
enum class Dressing { kScattering, kTildeBoundary };
// kFree subtracts the free evolution of the same boundary state; kNaive
// subtracts (Phi_v, Psi_v).
enum class Subtraction { kFree, kNaive };

struct DressedStates {
  GaussianState in;   // at -t*
  GaussianState out;  // at +t*
  double t_star = 0.0;
};

DressedStates dressed_states(const ProbeSpec& spec, const DecayParams& params, double t_star,
                             Dressing dressing = Dressing::kScattering);

struct ScatterConfig {
  GridSpec frame_grid{2, 128, 6.0};
  // Step rule dt = dt_constant / (1 + |v|).
  double dt_constant = 2e-3;
  EvolveConfig evolve;
  WindowOptions window;
  Dressing dressing = Dressing::kScattering;
  Subtraction subtraction = Subtraction::kFree;
  // t* is rounded up to a multiple of this so free evolutions can be reused.
  double window_quantum = 1.0 / 256.0;
  // When set, windows are computed against this potential instead of the
  // evolved one (noise-floor scans evolve V = 0 over a phantom's windows).
  std::optional<PotentialSpec> window_potential;

  double dt_for(double speed) const { return dt_constant / (1.0 + speed); }
  void validate() const;
};

struct ElementResult {
  std::complex<double> element{0.0, 0.0};
  std::complex<double> scaled{0.0, 0.0};  // |v| * element
  double speed = 0.0;
  double t_star = 0.0;
  bool empty_window = true;
};

// Evaluates i(U - U0) matrix elements in a frame that follows the probe's
// classical free path, so the grid only has to hold the packet envelope.
// Free evolutions are cached per (t*, width) and shared between threads.
class ElementEngine {
 public:
  ElementEngine(PotentialSpec potential, DecayParams params, ScatterConfig cfg);

  ElementResult compute(const ProbeSpec& spec) const;
  // Same, with a caller-chosen window (must be < r0).
  ElementResult compute(const ProbeSpec& spec, double t_star) const;

  const ScatterConfig& config() const { return cfg_; }
  std::size_t cache_size() const;

 private:
  WaveFunction free_evolution(const WaveFunction& chi, double t_star, std::complex<double> width,
                              double dt) const;

  PotentialSpec potential_;
  DecayParams params_;
  ScatterConfig cfg_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::tuple<double, double, double, double>, std::shared_ptr<WaveFunction>>
      cache_;
};

ElementResult scattering_element(const ProbeSpec& spec, const PotentialSpec& potential,
                                 const DecayParams& params, const ScatterConfig& cfg);

// Reference evaluation on a lab-frame grid that holds the whole path.
ElementResult scattering_element_lab(const ProbeSpec& spec, const PotentialSpec& potential,
                                     const DecayParams& params, const ScatterConfig& cfg,
                                     const GridSpec& lab_grid, double t_star = -1.0);

struct HighVelocityFit {
  std::complex<double> limit{0.0, 0.0};  // a in |v| E = a + b / |v|
  std::complex<double> slope_coeff{0.0, 0.0};
  double slope = 0.0;  // log-log slope of | |v| E - a |
  bool slope_defined = false;
  bool monotone = true;
  std::vector<double> speeds;
  std::vector<std::complex<double>> scaled;
  std::vector<double> errors;  // | |v| E - reference | (reference = a unless given)
};

// Least-squares fit of |v| E(v) = a + b/|v| over the given speeds (direction
// taken from spec.velocity).  When `reference` is supplied the errors and
// slope are measured against it instead of the fitted a.
HighVelocityFit highv_extrapolate(const ProbeSpec& spec, const PotentialSpec& potential,
                                  const DecayParams& params, const ScatterConfig& cfg,
                                  const std::vector<double>& speeds,
                                  const std::complex<double>* reference = nullptr);
HighVelocityFit fit_high_velocity(const std::vector<double>& speeds,
                                  const std::vector<std::complex<double>>& scaled,
                                  const std::complex<double>* reference = nullptr);

struct ScanConfig {
  int angles = 48;
  int offsets = 65;
  double ds = 0.125;
  double speed = 32.0;
  double probe_width = 0.25;
  int workers = 1;
  double hole_threshold = 0.05;

  void validate() const;
};

// Probe for sample (k, m) of a scan.
ProbeSpec scan_probe(const ScanConfig& scan, double angle, double offset);

using SampleSink = std::function<void(const RadonSample&)>;

// Evaluates every (angle, offset) sample not already in `completed`.  Samples
// run concurrently on scan.workers threads; `sink` sees each new sample on
// the calling thread only.  Failed samples become holes (value 0, ok false);
// the caller compares Sinogram::holes against hole_threshold.
Sinogram sinogram_scan(const PotentialSpec& potential, const DecayParams& params,
                       const ScatterConfig& cfg, const ScanConfig& scan,
                       const std::vector<RadonSample>& completed = {},
                       const SampleSink& sink = {});

}  // namespace tdho
