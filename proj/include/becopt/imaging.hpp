#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "becopt/cloud.hpp"
#include "becopt/trap.hpp"

namespace becopt {

// 2D optical-depth grid, row-major with index ix + nx * iy. The image plane
// maps the two tightly confined lab axes (y, z); the probe integrates along
// the weak axis.
struct AbsorptionImage {
  int nx = 0;
  int ny = 0;
  double pixel_size_um = 1.0;
  double sigma_abs_um2 = 0.1;
  std::vector<double> od;

  double& at(int ix, int iy) { return od[static_cast<std::size_t>(ix) + nx * iy]; }
  double at(int ix, int iy) const { return od[static_cast<std::size_t>(ix) + nx * iy]; }
  double pixel_to_atoms() const { return pixel_size_um * pixel_size_um / sigma_abs_um2; }
};

struct ImagingParams {
  int nx = 96;
  int ny = 96;
  double pixel_size_um = 1.0;
  double sigma_abs_um2 = 0.1;
  double scattering_length_a0 = 140.0;  // sets the Thomas-Fermi radii
  double detection_floor_atoms = 500.0;
  // Plateau detection: the grid step is coarse enough that the pair
  // straddling the condensate edge carries a width change far above tol,
  // while tol itself stays above the fit-noise floor.
  double mask_tol_rel = 0.01;
  double s_grid_max = 4.0;
  double s_grid_step = 0.5;

  std::vector<double> s_grid() const;
};

struct ImageNoise {
  double sigma_od = 0.0;
  std::uint64_t seed = 0;
};

// Forward model: thermal Gaussian column density plus the Thomas-Fermi
// column profile peak * max(0, 1 - x^2/Rx^2 - y^2/Ry^2)^{3/2}, plus i.i.d.
// Gaussian pixel noise. In-trap widths, sigma_i = sqrt(k_B T / (m omega_i^2)).
// Throws std::invalid_argument when the grid cannot contain 4 sigma.
AbsorptionImage synthesize(const CloudState& cloud, const TrapState& trap,
                           const ImagingParams& params, const ImageNoise& noise,
                           double mass_kg);

struct GaussianParams {
  double amplitude = 0.0;
  double cx_px = 0.0;
  double cy_px = 0.0;
  double sigma_x_px = 1.0;
  double sigma_y_px = 1.0;
  double offset = 0.0;
};

// Elliptical exclusion mask centered on the preliminary fit; the semi-axes
// are size_s * sigma_ref (and aspect times that along y).
struct MaskSpec {
  double cx_px = 0.0;
  double cy_px = 0.0;
  double size_s = 0.0;
  double aspect = 1.0;
  double sigma_ref_px = 1.0;

  bool covers(double x_px, double y_px) const;
};

// Raised when the iterative fit fails to converge; carries the last iterate.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& msg, std::vector<double> last_params)
      : std::runtime_error(msg), last_params_(std::move(last_params)) {}
  const std::vector<double>& last_params() const { return last_params_; }

 private:
  std::vector<double> last_params_;
};

// Raised when the mask sweep finds no stable-width plateau; the image is
// unfit for a bimodal decomposition.
class PlateauError : public std::runtime_error {
 public:
  explicit PlateauError(const std::string& msg) : std::runtime_error(msg) {}
};

// 2D Gaussian + offset least squares on the pixels outside the mask.
// Requires at least 6x more unmasked pixels than free parameters.
GaussianParams fit_thermal_masked(const AbsorptionImage& image, const MaskSpec& mask);

struct SweepPoint {
  double s = 0.0;
  double sigma_x_px = 0.0;
};

struct MaskSelection {
  double chosen_s = 0.0;
  std::vector<SweepPoint> sweep;
  GaussianParams preliminary;
  MaskSpec mask;  // at chosen_s
};

// Sweeps the mask size and picks the smallest s past which the fitted
// Gaussian width stops changing (relative change below tol for every later
// consecutive pair).
MaskSelection select_mask_size(const AbsorptionImage& image,
                               const std::vector<double>& s_grid, double tol_rel);

struct TfParams {
  double amplitude = 0.0;
  double cx_px = 0.0;
  double cy_px = 0.0;
  double rx_px = 1.0;
  double ry_px = 1.0;
};

struct BimodalFitResult {
  GaussianParams thermal;
  TfParams tf;
  double n_thermal = 0.0;
  double n_bec = 0.0;
  double chosen_s = 0.0;
  std::vector<SweepPoint> sweep;
};

// Full pipeline: mask-size sweep, masked thermal fit, point-by-point
// subtraction, Thomas-Fermi fit of the residual, atom numbers from the
// closed-form profile integrals. A negative fitted condensate amplitude
// reports n_bec = 0.
BimodalFitResult fit_bimodal(const AbsorptionImage& image, const ImagingParams& params);

// Little-endian binary image file ("BIMG"): dims, pixel size, cross section,
// then the grid.
void save_image(const std::string& path, const AbsorptionImage& image);
AbsorptionImage load_image(const std::string& path);

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& sweep);

}  // namespace becopt
