#pragma once

#include <string>
#include <vector>

#include "tdho/model.hpp"
#include "tdho/sinogram.hpp"

namespace tdho {

// Square 2-D field on cell-centred pixels x_i = -L + (i + 1/2) h, h = 2L/points.
// values[i * points + j] is the value at (x_i, x_j).
struct FieldGrid {
  int points = 128;
  double half_width = 4.0;
  std::vector<double> values;

  double h() const { return 2.0 * half_width / points; }
  double coord(int i) const { return -half_width + (i + 0.5) * h(); }
  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * points + j]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * points + j]; }

  static FieldGrid zeros(int points, double half_width);
};

// Smeared X-ray value: integral over the line {s n + t d} of V, averaged
// transversally with the projected probe density exp(-u^2/w^2)/(w sqrt(pi)),
// where d = (cos angle, sin angle) and n = (-sin angle, cos angle).  w = 0
// gives the bare line integral.  Adaptive quadrature, component by component.
double xray_reference(const PotentialSpec& potential, double angle, double offset, double w,
                      double clamp = kUnclamped);
// Oracle sinogram on the standard (angle, offset) lattice.
Sinogram xray_sinogram(const PotentialSpec& potential, int num_angles, int num_offsets, double ds,
                       double w, double clamp = kUnclamped);

struct FbpOptions {
  int points = 128;
  double half_width = 4.0;
  bool hann = true;
};

// Ram-Lak filtered backprojection with optional Hann apodization.  Requires
// at least 32 angles and 33 offsets.
FieldGrid fbp_invert(const Sinogram& sino, const FbpOptions& opts = {});
namespace serial {
FieldGrid fbp_invert(const Sinogram& sino, const FbpOptions& opts = {});
}

// Per-angle division by the projected envelope transform exp(-w^2 rho^2/4),
// regularized as (P + eps) / (P^2 + eps): identity for w -> 0 and eps -> inf,
// plain inverse for eps -> 0.
Sinogram deconvolve_smear(const Sinogram& sino, double w, double eps);

// Pixels within 2 widths of a Gaussian centre or within the radius of a
// compactly supported component.
std::vector<char> support_mask(const PotentialSpec& potential, const FieldGrid& grid);
FieldGrid sample_field(const PotentialSpec& potential, int points, double half_width,
                       double clamp = kUnclamped);

struct FieldMetrics {
  double relative_l2 = 0.0;  // ||a - b|| / ||b|| over the mask
  double linf = 0.0;
  double sinogram_rms = 0.0;
  bool has_sinogram = false;
};

FieldMetrics compare_potentials(const FieldGrid& a, const FieldGrid& b,
                                const std::vector<char>& mask);
FieldMetrics compare_potentials(const FieldGrid& a, const FieldGrid& b,
                                const std::vector<char>& mask, const Sinogram& sa,
                                const Sinogram& sb);
double sinogram_rms_distance(const Sinogram& a, const Sinogram& b);
double sinogram_rms(const Sinogram& s);

// Writers.  The PGM maps [min, max] linearly to [0, 255] with rounding half
// up; row r holds j = points - 1 - r (y upwards), column c holds i = c.
void write_pgm(const FieldGrid& f, const std::string& path);
void write_field_binary(const FieldGrid& f, const std::string& path);
void write_field_csv(const FieldGrid& f, const std::string& path);
FieldGrid read_field_binary(const std::string& path);

// Sinogram files: <stem>.csv (angle, offset, value, error, speed),
// <stem>.bin (K x M values) and <stem>.json metadata.
void write_sinogram(const Sinogram& s, const std::string& stem);
Sinogram read_sinogram(const std::string& stem);

}  // namespace tdho
