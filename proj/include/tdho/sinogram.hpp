#pragma once

#include <complex>
#include <string>
#include <vector>

namespace tdho {

// One scattering-derived X-ray sample.  Direction (cos angle, sin angle);
// the offset runs along the normal (-sin angle, cos angle).
struct RadonSample {
  int angle_index = 0;
  int offset_index = 0;
  double angle = 0.0;
  double offset = 0.0;
  std::complex<double> value{0.0, 0.0};  // |v| * element
  double error = 0.0;
  double speed = 0.0;
  double t_star = 0.0;
  bool ok = true;
  std::string reason;
};

// K x M matrix of real values over angles in [0, pi) and symmetric offsets.
struct Sinogram {
  std::vector<double> angles;
  std::vector<double> offsets;
  double ds = 0.0;
  double speed = 0.0;
  double probe_width = 0.0;  // envelope width of the projected smear
  std::vector<double> values;
  std::vector<double> errors;
  std::vector<double> imag;
  std::vector<RadonSample> samples;  // only filled by scans
  int holes = 0;

  int num_angles() const { return static_cast<int>(angles.size()); }
  int num_offsets() const { return static_cast<int>(offsets.size()); }
  double& at(int k, int m) { return values[static_cast<std::size_t>(k) * offsets.size() + m]; }
  double at(int k, int m) const { return values[static_cast<std::size_t>(k) * offsets.size() + m]; }

  // Uniform angles pi k / K and offsets (m - (M-1)/2) ds, zero-filled.
  static Sinogram make(int num_angles, int num_offsets, double ds);
};

}  // namespace tdho
