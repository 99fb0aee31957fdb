#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "becopt/constants.hpp"
#include "becopt/imaging.hpp"
#include "becopt/rng.hpp"

using namespace becopt;

namespace {

TrapState imaging_trap() {
  TrapState t;
  t.depth_uK = 50.0;
  t.omega_x = 2 * kPi * 15.0;   // probe axis
  t.omega_y = 2 * kPi * 100.0;  // image x
  t.omega_z = 2 * kPi * 80.0;   // image y
  t.omega_bar = std::cbrt(t.omega_x * t.omega_y * t.omega_z);
  t.single_beam_omega = {t.omega_x, t.omega_y, t.omega_z};
  t.single_beam_omega_bar = t.omega_bar;
  t.config = TrapConfig::crossed;
  t.trapped = true;
  return t;
}

ImagingParams test_params() {
  ImagingParams p;
  p.nx = 160;
  p.ny = 160;
  p.pixel_size_um = 0.4;
  p.sigma_abs_um2 = 0.1;
  p.scattering_length_a0 = 140.0;
  return p;
}

double image_sum(const AbsorptionImage& img) {
  double s = 0.0;
  for (double v : img.od) s += v;
  return s;
}

}  // namespace

TEST_CASE("Thomas-Fermi column integral equals 2 pi / 5 (quadrature oracle)") {
  CHECK(kTfColumnIntegral == 2.0 * kPi / 5.0);  // the constant the fit uses
  const double rx = 1.7, ry = 0.9;
  const int n = 4000;
  const double hx = 2.0 * rx / n, hy = 2.0 * ry / n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = -rx + (i + 0.5) * hx;
    for (int j = 0; j < n; ++j) {
      const double y = -ry + (j + 0.5) * hy;
      const double u = x * x / (rx * rx) + y * y / (ry * ry);
      if (u < 1.0) sum += std::pow(1.0 - u, 1.5);
    }
  }
  sum *= hx * hy;
  CHECK(sum == doctest::Approx(kTfColumnIntegral * rx * ry).epsilon(1e-6));
}

TEST_CASE("thermal image integrates to the atom number") {
  const TrapState trap = imaging_trap();
  const ImagingParams params = test_params();
  CloudState cloud{2e5, 0.25, 0.0, 0.0};
  const AbsorptionImage img = synthesize(cloud, trap, params, ImageNoise{}, kThuliumMassKg);
  const double atoms = image_sum(img) * img.pixel_to_atoms();
  CHECK(atoms == doctest::Approx(2e5).epsilon(1e-3));
}

TEST_CASE("empty cloud image is pure noise with the requested sigma") {
  const TrapState trap = imaging_trap();
  const ImagingParams params = test_params();
  CloudState cloud{0.0, 0.25, 0.0, 0.0};
  const AbsorptionImage img =
      synthesize(cloud, trap, params, ImageNoise{0.05, 99}, kThuliumMassKg);
  double mean = 0.0;
  for (double v : img.od) mean += v;
  mean /= static_cast<double>(img.od.size());
  double var = 0.0;
  for (double v : img.od) var += (v - mean) * (v - mean);
  var /= static_cast<double>(img.od.size());
  CHECK(std::abs(mean) < 0.002);
  CHECK(var == doctest::Approx(0.05 * 0.05).epsilon(0.05));
}

TEST_CASE("grid too small for the cloud is rejected") {
  const TrapState trap = imaging_trap();
  ImagingParams params = test_params();
  params.nx = 32;
  params.ny = 32;
  CloudState cloud{2e5, 0.25, 0.0, 0.0};
  CHECK_THROWS_AS(synthesize(cloud, trap, params, ImageNoise{}, kThuliumMassKg),
                  std::invalid_argument);
}

TEST_CASE("masked thermal fit recovers a pure Gaussian") {
  const TrapState trap = imaging_trap();
  const ImagingParams params = test_params();
  CloudState cloud{3e5, 0.25, 0.0, 0.0};
  const AbsorptionImage img = synthesize(cloud, trap, params, ImageNoise{}, kThuliumMassKg);

  const GaussianParams open = fit_thermal_masked(img, MaskSpec{});
  const double sigma_truth_px =
      std::sqrt(0.25 * kJoulePerUK / (kThuliumMassKg * trap.omega_y * trap.omega_y)) *
      kMToUm / params.pixel_size_um;
  CHECK(open.sigma_x_px == doctest::Approx(sigma_truth_px).epsilon(0.005));

  // Any mask smaller than the frame leaves the answer unchanged.
  MaskSpec mask{open.cx_px, open.cy_px, 1.5, open.sigma_y_px / open.sigma_x_px,
                open.sigma_x_px};
  const GaussianParams masked = fit_thermal_masked(img, mask);
  CHECK(masked.sigma_x_px == doctest::Approx(sigma_truth_px).epsilon(0.005));

  // A mask swallowing the whole frame violates the pixel-budget precondition.
  MaskSpec everything{open.cx_px, open.cy_px, 1e3, 1.0, open.sigma_x_px};
  CHECK_THROWS_AS(fit_thermal_masked(img, everything), std::invalid_argument);
}

TEST_CASE("mask sweep on a pure thermal image settles immediately") {
  const TrapState trap = imaging_trap();
  const ImagingParams params = test_params();
  CloudState cloud{3e5, 0.25, 0.0, 0.0};
  const AbsorptionImage img = synthesize(cloud, trap, params, ImageNoise{}, kThuliumMassKg);
  const MaskSelection sel = select_mask_size(img, params.s_grid(), params.mask_tol_rel);
  CHECK(sel.chosen_s == params.s_grid().front());
}

TEST_CASE("mask sweep on a bimodal image stops changing only past the condensate") {
  const TrapState trap = imaging_trap();
  const ImagingParams params = test_params();
  CloudState cloud{3e5, 0.25, 4e4, 0.0};
  const AbsorptionImage img = synthesize(cloud, trap, params, ImageNoise{}, kThuliumMassKg);
  const MaskSelection sel = select_mask_size(img, params.s_grid(), params.mask_tol_rel);

  // Ground-truth TF radius in pixels, from the same closed form the
  // generator used.
  const double a_m = params.scattering_length_a0 * kBohrRadius;
  const double abar = std::sqrt(kHbar / (kThuliumMassKg * trap.omega_bar));
  const double mu = 0.5 * kHbar * trap.omega_bar * std::pow(15.0 * 4e4 * a_m / abar, 0.4);
  const double rx_px = std::sqrt(2.0 * mu / (kThuliumMassKg * trap.omega_y * trap.omega_y)) *
                       kMToUm / params.pixel_size_um;
  // The chosen mask must cover the condensate.
  CHECK(sel.chosen_s * sel.preliminary.sigma_x_px >= rx_px);
  // The condensate bump drags the open-mask width down, so the width relaxes
  // monotonically upward until the mask swallows the bump.
  for (std::size_t i = 1; i < sel.sweep.size(); ++i) {
    if (sel.sweep[i].s > sel.chosen_s) break;
    CHECK(sel.sweep[i].sigma_x_px >= sel.sweep[i - 1].sigma_x_px * 0.99);
  }
  // With the Thomas-Fermi region excluded the thermal width comes out right.
  const GaussianParams masked = fit_thermal_masked(img, sel.mask);
  const double sigma_truth_px =
      std::sqrt(0.25 * kJoulePerUK / (kThuliumMassKg * trap.omega_y * trap.omega_y)) *
      kMToUm / params.pixel_size_um;
  CHECK(masked.sigma_x_px == doctest::Approx(sigma_truth_px).epsilon(0.01));
}

TEST_CASE("bimodal fit recovers a noiseless condensate within 1%") {
  const TrapState trap = imaging_trap();
  const ImagingParams params = test_params();
  CloudState cloud{3e5, 0.25, 2e4, 0.0};
  const AbsorptionImage img = synthesize(cloud, trap, params, ImageNoise{}, kThuliumMassKg);
  const BimodalFitResult fit = fit_bimodal(img, params);
  CHECK(fit.n_bec == doctest::Approx(2e4).epsilon(0.01));
  CHECK(fit.n_thermal == doctest::Approx(2.8e5).epsilon(0.01));
}

TEST_CASE("tf-only image round-trips peak and radii within 1%") {
  const TrapState trap = imaging_trap();
  const ImagingParams params = test_params();
  CloudState cloud{5e4, 0.05, 5e4, 0.0};  // everything condensed
  const AbsorptionImage img = synthesize(cloud, trap, params, ImageNoise{}, kThuliumMassKg);
  const BimodalFitResult fit = fit_bimodal(img, params);
  const double a_m = params.scattering_length_a0 * kBohrRadius;
  const double abar = std::sqrt(kHbar / (kThuliumMassKg * trap.omega_bar));
  const double mu = 0.5 * kHbar * trap.omega_bar * std::pow(15.0 * 5e4 * a_m / abar, 0.4);
  const double rx_px = std::sqrt(2.0 * mu / (kThuliumMassKg * trap.omega_y * trap.omega_y)) *
                       kMToUm / params.pixel_size_um;
  const double ry_px = std::sqrt(2.0 * mu / (kThuliumMassKg * trap.omega_z * trap.omega_z)) *
                       kMToUm / params.pixel_size_um;
  CHECK(fit.tf.rx_px == doctest::Approx(rx_px).epsilon(0.01));
  CHECK(fit.tf.ry_px == doctest::Approx(ry_px).epsilon(0.01));
  CHECK(fit.n_bec == doctest::Approx(5e4).epsilon(0.01));
}

TEST_CASE("pure thermal image reports a negligible condensate") {
  const TrapState trap = imaging_trap();
  const ImagingParams params = test_params();
  CloudState cloud{3e5, 0.25, 0.0, 0.0};
  const AbsorptionImage img = synthesize(cloud, trap, params, ImageNoise{}, kThuliumMassKg);
  const BimodalFitResult fit = fit_bimodal(img, params);
  CHECK(fit.n_bec < 0.01 * fit.n_thermal);
}

TEST_CASE("subtraction keeps the signal bookkeeping consistent") {
  const TrapState trap = imaging_trap();
  const ImagingParams params = test_params();
  CloudState cloud{3e5, 0.25, 2e4, 0.0};
  const AbsorptionImage img = synthesize(cloud, trap, params, ImageNoise{0.02, 5}, kThuliumMassKg);
  const BimodalFitResult fit = fit_bimodal(img, params);
  double sum_model = 0.0, sum_residual = 0.0;
  for (int iy = 0; iy < img.ny; ++iy)
    for (int ix = 0; ix < img.nx; ++ix) {
      const double dx = ix - fit.thermal.cx_px;
      const double dy = iy - fit.thermal.cy_px;
      const double g =
          fit.thermal.amplitude *
              std::exp(-0.5 * dx * dx / (fit.thermal.sigma_x_px * fit.thermal.sigma_x_px) -
                       0.5 * dy * dy / (fit.thermal.sigma_y_px * fit.thermal.sigma_y_px)) +
          fit.thermal.offset;
      sum_model += g;
      sum_residual += img.at(ix, iy) - g;
    }
  CHECK(sum_model + sum_residual ==
        doctest::Approx(image_sum(img)).epsilon(1e-12));
}

TEST_CASE("fit is invariant under integer pixel translation") {
  const TrapState trap = imaging_trap();
  const ImagingParams params = test_params();
  CloudState cloud{3e5, 0.25, 2e4, 0.0};
  const AbsorptionImage img = synthesize(cloud, trap, params, ImageNoise{}, kThuliumMassKg);
  AbsorptionImage shifted = img;
  const int dx = 7, dy = -4;
  for (int iy = 0; iy < img.ny; ++iy)
    for (int ix = 0; ix < img.nx; ++ix) {
      const int sx = (ix - dx % img.nx + img.nx) % img.nx;
      const int sy = (iy - dy % img.ny + img.ny) % img.ny;
      shifted.at(ix, iy) = img.at(sx, sy);
    }
  const BimodalFitResult a = fit_bimodal(img, params);
  const BimodalFitResult b = fit_bimodal(shifted, params);
  CHECK(b.n_bec == doctest::Approx(a.n_bec).epsilon(1e-3));
  CHECK(b.n_thermal == doctest::Approx(a.n_thermal).epsilon(1e-3));
  CHECK(b.thermal.cx_px - a.thermal.cx_px == doctest::Approx(dx).epsilon(1e-2));
  CHECK(b.thermal.cy_px - a.thermal.cy_px == doctest::Approx(dy).epsilon(1e-2));
}

TEST_CASE("randomized closed loop stays inside the recovery tolerances") {
  const TrapState trap = imaging_trap();
  ImagingParams params = test_params();
  params.nx = 192;
  params.ny = 192;
  Rng rng(2718);
  int checked = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const double n_th = rng.uniform(6e4, 5e5);
    const double n_bec = rng.uniform() < 0.2 ? 0.0 : rng.uniform(8e3, 1e5);
    CloudState cloud{n_th + n_bec, rng.uniform(0.12, 0.22), n_bec, 0.0};
    const double sigma_px =
        std::sqrt(cloud.temperature_uK * kJoulePerUK /
                  (kThuliumMassKg * trap.omega_y * trap.omega_y)) *
        kMToUm;
    const double sigma_py =
        std::sqrt(cloud.temperature_uK * kJoulePerUK /
                  (kThuliumMassKg * trap.omega_z * trap.omega_z)) *
        kMToUm;
    const double peak = n_th * params.sigma_abs_um2 / (2 * kPi * sigma_px * sigma_py);
    const double noise = peak / rng.uniform(40.0, 150.0);
    const AbsorptionImage img =
        synthesize(cloud, trap, params, ImageNoise{noise, 1000 + trial}, kThuliumMassKg);
    const BimodalFitResult fit = fit_bimodal(img, params);
    CHECK(fit.n_thermal == doctest::Approx(n_th).epsilon(0.03));
    if (n_bec >= params.detection_floor_atoms) {
      CHECK(fit.n_bec == doctest::Approx(n_bec).epsilon(0.05));
      ++checked;
    } else {
      CHECK(fit.n_bec < params.detection_floor_atoms * 4.0);
    }
  }
  CHECK(checked >= 5);
}

TEST_CASE("a strong condensate survives the SNR = 20 floor") {
  const TrapState trap = imaging_trap();
  const ImagingParams params = test_params();
  CloudState cloud{3e5, 0.25, 4e4, 0.0};
  const double sigma_px = std::sqrt(cloud.temperature_uK * kJoulePerUK /
                                    (kThuliumMassKg * trap.omega_y * trap.omega_y)) *
                          kMToUm;
  const double sigma_py = std::sqrt(cloud.temperature_uK * kJoulePerUK /
                                    (kThuliumMassKg * trap.omega_z * trap.omega_z)) *
                          kMToUm;
  const double peak = 2.6e5 * params.sigma_abs_um2 / (2 * kPi * sigma_px * sigma_py);
  const AbsorptionImage img =
      synthesize(cloud, trap, params, ImageNoise{peak / 20.0, 77}, kThuliumMassKg);
  const BimodalFitResult fit = fit_bimodal(img, params);
  CHECK(fit.n_thermal == doctest::Approx(2.6e5).epsilon(0.03));
  CHECK(fit.n_bec == doctest::Approx(4e4).epsilon(0.05));
}

TEST_CASE("binary image file round trip") {
  const TrapState trap = imaging_trap();
  const ImagingParams params = test_params();
  CloudState cloud{1e5, 0.3, 0.0, 0.0};
  const AbsorptionImage img =
      synthesize(cloud, trap, params, ImageNoise{0.01, 7}, kThuliumMassKg);
  const auto path = std::filesystem::temp_directory_path() / "becopt_img_rt.bimg";
  save_image(path.string(), img);
  const AbsorptionImage back = load_image(path.string());
  CHECK(back.nx == img.nx);
  CHECK(back.ny == img.ny);
  CHECK(back.pixel_size_um == img.pixel_size_um);
  CHECK(back.sigma_abs_um2 == img.sigma_abs_um2);
  CHECK(back.od == img.od);
  std::filesystem::remove(path);
  CHECK_THROWS(load_image((std::filesystem::temp_directory_path() / "missing.bimg").string()));
}
