#include "becopt/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>

#include "becopt/constants.hpp"
#include "becopt/lsq.hpp"
#include "becopt/rng.hpp"
#include "becopt/textio.hpp"

namespace becopt {

std::vector<double> ImagingParams::s_grid() const {
  std::vector<double> grid;
  for (double s = 0.0; s <= s_grid_max + 1e-12; s += s_grid_step) grid.push_back(s);
  return grid;
}

bool MaskSpec::covers(double x_px, double y_px) const {
  if (size_s <= 0.0) return false;
  const double ax = size_s * sigma_ref_px;
  const double ay = ax * aspect;
  const double dx = (x_px - cx_px) / ax;
  const double dy = (y_px - cy_px) / ay;
  return dx * dx + dy * dy <= 1.0;
}

namespace {

// In-trap rms size of the thermal cloud along one axis, in um.
double thermal_sigma_um(double t_uK, double omega, double mass_kg) {
  return std::sqrt(t_uK * kJoulePerUK / (mass_kg * omega * omega)) * kMToUm;
}

// Thomas-Fermi radius along one axis, in um.
double tf_radius_um(double n_bec, const TrapState& trap, double omega, double mass_kg,
                    double a_m) {
  const double abar = std::sqrt(kHbar / (mass_kg * trap.omega_bar));
  const double mu = 0.5 * kHbar * trap.omega_bar * std::pow(15.0 * n_bec * a_m / abar, 0.4);
  return std::sqrt(2.0 * mu / (mass_kg * omega * omega)) * kMToUm;
}

}  // namespace

AbsorptionImage synthesize(const CloudState& cloud, const TrapState& trap,
                           const ImagingParams& params, const ImageNoise& noise,
                           double mass_kg) {
  if (!trap.trapped) throw std::invalid_argument("cannot image an untrapped cloud");
  if (params.nx < 8 || params.ny < 8) throw std::invalid_argument("image grid too small");
  const double n_th = cloud.n_total - cloud.n_bec;
  if (n_th < 0.0) throw std::invalid_argument("n_bec exceeds n_total");

  AbsorptionImage img;
  img.nx = params.nx;
  img.ny = params.ny;
  img.pixel_size_um = params.pixel_size_um;
  img.sigma_abs_um2 = params.sigma_abs_um2;
  img.od.assign(static_cast<std::size_t>(params.nx) * params.ny, 0.0);

  const double cx = 0.5 * (params.nx - 1);
  const double cy = 0.5 * (params.ny - 1);
  const double half_x_um = cx * params.pixel_size_um;
  const double half_y_um = cy * params.pixel_size_um;

  // Image x <- lab y (omega_y), image y <- lab z (omega_z); the probe
  // integrates along the weak lab-x axis.
  double sig_x_um = 0.0, sig_y_um = 0.0, amp_th = 0.0;
  if (n_th > 0.0) {
    if (cloud.temperature_uK <= 0.0)
      throw std::invalid_argument("thermal atoms need a positive temperature");
    sig_x_um = thermal_sigma_um(cloud.temperature_uK, trap.omega_y, mass_kg);
    sig_y_um = thermal_sigma_um(cloud.temperature_uK, trap.omega_z, mass_kg);
    if (4.0 * sig_x_um > half_x_um || 4.0 * sig_y_um > half_y_um)
      throw std::invalid_argument("grid cannot contain 4 sigma of the thermal cloud");
    amp_th = n_th * params.sigma_abs_um2 / (2.0 * kPi * sig_x_um * sig_y_um);
  }

  double rx_um = 0.0, ry_um = 0.0, amp_tf = 0.0;
  if (cloud.n_bec > 0.0) {
    const double a_m = params.scattering_length_a0 * kBohrRadius;
    rx_um = tf_radius_um(cloud.n_bec, trap, trap.omega_y, mass_kg, a_m);
    ry_um = tf_radius_um(cloud.n_bec, trap, trap.omega_z, mass_kg, a_m);
    if (rx_um > half_x_um || ry_um > half_y_um)
      throw std::invalid_argument("grid cannot contain the condensate");
    amp_tf = cloud.n_bec * params.sigma_abs_um2 / (kTfColumnIntegral * rx_um * ry_um);
  }

  Rng rng = Rng::stream(noise.seed, "pixels");
  for (int iy = 0; iy < params.ny; ++iy) {
    for (int ix = 0; ix < params.nx; ++ix) {
      const double x_um = (ix - cx) * params.pixel_size_um;
      const double y_um = (iy - cy) * params.pixel_size_um;
      double od = 0.0;
      if (amp_th > 0.0)
        od += amp_th * std::exp(-0.5 * x_um * x_um / (sig_x_um * sig_x_um) -
                                0.5 * y_um * y_um / (sig_y_um * sig_y_um));
      if (amp_tf > 0.0) {
        const double u =
            x_um * x_um / (rx_um * rx_um) + y_um * y_um / (ry_um * ry_um);
        if (u < 1.0) od += amp_tf * std::pow(1.0 - u, 1.5);
      }
      if (noise.sigma_od > 0.0) od += noise.sigma_od * rng.normal();
      img.at(ix, iy) = od;
    }
  }
  return img;
}

namespace {

struct PixelSet {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> od;
};

PixelSet unmasked_pixels(const AbsorptionImage& image, const MaskSpec& mask) {
  PixelSet px;
  px.x.reserve(image.od.size());
  for (int iy = 0; iy < image.ny; ++iy)
    for (int ix = 0; ix < image.nx; ++ix) {
      if (mask.covers(ix, iy)) continue;
      px.x.push_back(ix);
      px.y.push_back(iy);
      px.od.push_back(image.at(ix, iy));
    }
  return px;
}

GaussianParams initial_gaussian_guess(const AbsorptionImage& image) {
  // Offset from the frame border, center and widths from thresholded moments.
  double border_sum = 0.0;
  int border_n = 0;
  for (int ix = 0; ix < image.nx; ++ix) {
    border_sum += image.at(ix, 0) + image.at(ix, image.ny - 1);
    border_n += 2;
  }
  for (int iy = 0; iy < image.ny; ++iy) {
    border_sum += image.at(0, iy) + image.at(image.nx - 1, iy);
    border_n += 2;
  }
  const double offset = border_sum / border_n;
  double peak = offset;
  for (double v : image.od) peak = std::max(peak, v);
  const double amp = std::max(peak - offset, 1e-6);
  const double thresh = offset + 0.1 * amp;
  double w = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0;
  for (int iy = 0; iy < image.ny; ++iy)
    for (int ix = 0; ix < image.nx; ++ix) {
      const double v = image.at(ix, iy) - thresh;
      if (v <= 0.0) continue;
      w += v;
      sx += v * ix;
      sy += v * iy;
    }
  GaussianParams g;
  if (w <= 0.0) {
    g.cx_px = 0.5 * (image.nx - 1);
    g.cy_px = 0.5 * (image.ny - 1);
    g.sigma_x_px = image.nx / 8.0;
    g.sigma_y_px = image.ny / 8.0;
  } else {
    g.cx_px = sx / w;
    g.cy_px = sy / w;
    for (int iy = 0; iy < image.ny; ++iy)
      for (int ix = 0; ix < image.nx; ++ix) {
        const double v = image.at(ix, iy) - thresh;
        if (v <= 0.0) continue;
        sxx += v * (ix - g.cx_px) * (ix - g.cx_px);
        syy += v * (iy - g.cy_px) * (iy - g.cy_px);
      }
    g.sigma_x_px = std::max(std::sqrt(sxx / w), 0.8);
    g.sigma_y_px = std::max(std::sqrt(syy / w), 0.8);
  }
  g.amplitude = amp;
  g.offset = offset;
  return g;
}

}  // namespace

GaussianParams fit_thermal_masked(const AbsorptionImage& image, const MaskSpec& mask) {
  const PixelSet px = unmasked_pixels(image, mask);
  constexpr std::size_t kParams = 6;
  if (px.od.size() < 6 * kParams)
    throw std::invalid_argument("mask leaves too few pixels for the thermal fit");

  const GaussianParams guess = initial_gaussian_guess(image);
  std::vector<double> p0 = {guess.amplitude, guess.cx_px,     guess.cy_px,
                            guess.sigma_x_px, guess.sigma_y_px, guess.offset};

  auto model = [&px](const std::vector<double>& p, std::vector<double>* r,
                     std::vector<double>* j) {
    const double amp = p[0], cx = p[1], cy = p[2];
    const double sx = std::abs(p[3]) + 1e-9, sy = std::abs(p[4]) + 1e-9;
    const double off = p[5];
    const std::size_t n = px.od.size();
    r->resize(n);
    j->resize(n * 6);
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = px.x[i] - cx;
      const double dy = px.y[i] - cy;
      const double ex = std::exp(-0.5 * dx * dx / (sx * sx) - 0.5 * dy * dy / (sy * sy));
      (*r)[i] = amp * ex + off - px.od[i];
      double* row = j->data() + i * 6;
      row[0] = ex;
      row[1] = amp * ex * dx / (sx * sx);
      row[2] = amp * ex * dy / (sy * sy);
      row[3] = amp * ex * dx * dx / (sx * sx * sx);
      row[4] = amp * ex * dy * dy / (sy * sy * sy);
      row[5] = 1.0;
    }
  };

  const LsqResult res = levenberg_marquardt(model, p0);
  GaussianParams out;
  out.amplitude = res.params[0];
  out.cx_px = res.params[1];
  out.cy_px = res.params[2];
  out.sigma_x_px = std::abs(res.params[3]);
  out.sigma_y_px = std::abs(res.params[4]);
  out.offset = res.params[5];
  return out;
}

MaskSelection select_mask_size(const AbsorptionImage& image,
                               const std::vector<double>& s_grid, double tol_rel) {
  if (s_grid.size() < 3) throw std::invalid_argument("mask sweep needs at least 3 sizes");
  for (std::size_t i = 1; i < s_grid.size(); ++i)
    if (s_grid[i] <= s_grid[i - 1])
      throw std::invalid_argument("mask sweep grid must be increasing");

  MaskSelection sel;
  sel.preliminary = fit_thermal_masked(image, MaskSpec{});
  const double aspect = sel.preliminary.sigma_y_px / sel.preliminary.sigma_x_px;

  for (double s : s_grid) {
    MaskSpec mask{sel.preliminary.cx_px, sel.preliminary.cy_px, s, aspect,
                  sel.preliminary.sigma_x_px};
    try {
      const GaussianParams fit = fit_thermal_masked(image, mask);
      sel.sweep.push_back({s, fit.sigma_x_px});
    } catch (const std::invalid_argument&) {
      break;  // mask grew past the usable pixel budget
    }
  }
  if (sel.sweep.size() < 3) throw PlateauError("mask sweep too short to find a plateau");

  // Smallest s at which the width has settled: the two following consecutive
  // pairs must both change by less than tol. A local window, rather than
  // stability through the very largest masks, keeps the choice insensitive
  // to the noisy fits that appear once the mask has swallowed most of the
  // cloud.
  constexpr std::size_t kStableWindow = 2;
  std::size_t chosen = sel.sweep.size();
  for (std::size_t i = 0; i + kStableWindow < sel.sweep.size(); ++i) {
    bool stable = true;
    for (std::size_t j = i; j < i + kStableWindow; ++j) {
      const double rel =
          std::abs(sel.sweep[j + 1].sigma_x_px - sel.sweep[j].sigma_x_px) /
          sel.sweep[j].sigma_x_px;
      if (rel >= tol_rel) {
        stable = false;
        break;
      }
    }
    if (stable) {
      chosen = i;
      break;
    }
  }
  if (chosen == sel.sweep.size())
    throw PlateauError("gaussian width never stops changing over the mask sweep");

  sel.chosen_s = sel.sweep[chosen].s;
  sel.mask = MaskSpec{sel.preliminary.cx_px, sel.preliminary.cy_px, sel.chosen_s, aspect,
                      sel.preliminary.sigma_x_px};
  return sel;
}

namespace {

TfParams fit_tf_residual(const std::vector<double>& residual, const AbsorptionImage& image,
                         double cx0, double cy0, double r0) {
  struct Px {
    double x, y, od;
  };
  std::vector<Px> px;
  px.reserve(residual.size());
  for (int iy = 0; iy < image.ny; ++iy)
    for (int ix = 0; ix < image.nx; ++ix)
      px.push_back({static_cast<double>(ix), static_cast<double>(iy),
                    residual[static_cast<std::size_t>(ix) + image.nx * iy]});

  double peak = 0.0;
  for (const auto& p : px) peak = std::max(peak, p.od);
  std::vector<double> p0 = {std::max(peak, 1e-6), cx0, cy0, std::max(r0, 2.0),
                            std::max(r0, 2.0)};

  auto model = [&px](const std::vector<double>& p, std::vector<double>* r,
                     std::vector<double>* j) {
    const double amp = p[0], cx = p[1], cy = p[2];
    const double rx = std::abs(p[3]) + 1e-9, ry = std::abs(p[4]) + 1e-9;
    const std::size_t n = px.size();
    r->resize(n);
    j->resize(n * 5);
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = px[i].x - cx;
      const double dy = px[i].y - cy;
      const double u = dx * dx / (rx * rx) + dy * dy / (ry * ry);
      double* row = j->data() + i * 5;
      if (u >= 1.0) {
        (*r)[i] = -px[i].od;
        row[0] = row[1] = row[2] = row[3] = row[4] = 0.0;
        continue;
      }
      const double t = 1.0 - u;
      const double t12 = std::sqrt(t);
      const double t32 = t * t12;
      (*r)[i] = amp * t32 - px[i].od;
      const double common = 1.5 * amp * t12;
      row[0] = t32;
      row[1] = common * 2.0 * dx / (rx * rx);
      row[2] = common * 2.0 * dy / (ry * ry);
      row[3] = common * 2.0 * dx * dx / (rx * rx * rx);
      row[4] = common * 2.0 * dy * dy / (ry * ry * ry);
    }
  };

  const LsqResult res = levenberg_marquardt(model, p0);
  TfParams out;
  out.amplitude = res.params[0];
  out.cx_px = res.params[1];
  out.cy_px = res.params[2];
  out.rx_px = std::abs(res.params[3]);
  out.ry_px = std::abs(res.params[4]);
  return out;
}

}  // namespace

BimodalFitResult fit_bimodal(const AbsorptionImage& image, const ImagingParams& params) {
  BimodalFitResult out;
  const MaskSelection sel = select_mask_size(image, params.s_grid(), params.mask_tol_rel);
  out.chosen_s = sel.chosen_s;
  out.sweep = sel.sweep;
  out.thermal = fit_thermal_masked(image, sel.mask);

  // Point-by-point subtraction of the fitted thermal cloud.
  std::vector<double> residual(image.od.size());
  for (int iy = 0; iy < image.ny; ++iy)
    for (int ix = 0; ix < image.nx; ++ix) {
      const double dx = ix - out.thermal.cx_px;
      const double dy = iy - out.thermal.cy_px;
      const double g = out.thermal.amplitude *
                           std::exp(-0.5 * dx * dx / (out.thermal.sigma_x_px * out.thermal.sigma_x_px) -
                                    0.5 * dy * dy / (out.thermal.sigma_y_px * out.thermal.sigma_y_px)) +
                       out.thermal.offset;
      residual[static_cast<std::size_t>(ix) + image.nx * iy] = image.at(ix, iy) - g;
    }

  const double r0 = sel.chosen_s > 0.0 ? sel.chosen_s * sel.preliminary.sigma_x_px
                                       : 0.5 * sel.preliminary.sigma_x_px;
  out.tf = fit_tf_residual(residual, image, out.thermal.cx_px, out.thermal.cy_px, r0);

  out.n_thermal = 2.0 * kPi * out.thermal.sigma_x_px * out.thermal.sigma_y_px *
                  out.thermal.amplitude * image.pixel_to_atoms();
  if (out.tf.amplitude <= 0.0) {
    out.n_bec = 0.0;
  } else {
    out.n_bec = kTfColumnIntegral * out.tf.rx_px * out.tf.ry_px * out.tf.amplitude *
                image.pixel_to_atoms();
  }
  return out;
}

void save_image(const std::string& path, const AbsorptionImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open image file for writing: " + path);
  const char magic[4] = {'B', 'I', 'M', 'G'};
  const std::uint32_t version = 1;
  const std::int32_t nx = image.nx, ny = image.ny;
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&nx), 4);
  out.write(reinterpret_cast<const char*>(&ny), 4);
  out.write(reinterpret_cast<const char*>(&image.pixel_size_um), 8);
  out.write(reinterpret_cast<const char*>(&image.sigma_abs_um2), 8);
  out.write(reinterpret_cast<const char*>(image.od.data()),
            static_cast<std::streamsize>(image.od.size() * 8));
  if (!out) throw std::runtime_error("failed writing image file: " + path);
}

AbsorptionImage load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image file: " + path);
  char magic[4];
  std::uint32_t version = 0;
  AbsorptionImage img;
  std::int32_t nx = 0, ny = 0;
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "BIMG", 4) != 0)
    throw std::runtime_error("not an image file: " + path);
  in.read(reinterpret_cast<char*>(&version), 4);
  if (version != 1) throw std::runtime_error("unsupported image file version");
  in.read(reinterpret_cast<char*>(&nx), 4);
  in.read(reinterpret_cast<char*>(&ny), 4);
  in.read(reinterpret_cast<char*>(&img.pixel_size_um), 8);
  in.read(reinterpret_cast<char*>(&img.sigma_abs_um2), 8);
  if (!in || nx <= 0 || ny <= 0 || nx > 65536 || ny > 65536)
    throw std::runtime_error("corrupt image header: " + path);
  img.nx = nx;
  img.ny = ny;
  img.od.resize(static_cast<std::size_t>(nx) * ny);
  in.read(reinterpret_cast<char*>(img.od.data()),
          static_cast<std::streamsize>(img.od.size() * 8));
  if (!in) throw std::runtime_error("truncated image file: " + path);
  return img;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& sweep) {
  out << "s,sigma_x_px\n";
  for (const auto& p : sweep)
    out << fmt_double(p.s) << ',' << fmt_double(p.sigma_x_px) << '\n';
}

}  // namespace becopt
