#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace becopt {

enum class Beam { horizontal, vertical };

// Piecewise-linear power waveforms for the two beams over a common set of
// breakpoints. times_s[0] == 0 and times are strictly increasing; each power
// list has one value per breakpoint.
struct RampSchedule {
  std::vector<double> times_s;
  std::vector<double> powers_h_W;
  std::vector<double> powers_v_W;

  std::size_t knots() const { return times_s.size(); }
  double total_time_s() const { return times_s.empty() ? 0.0 : times_s.back(); }
  void validate() const;
};

// Linear interpolation of one beam's power; breakpoints are hit exactly.
// Throws std::out_of_range outside [0, t_K].
double power_at(const RampSchedule& schedule, double t_s, Beam beam);

// Appends n_segments breakpoints spaced by segment_s, each carrying the
// previous final powers, so the original time span is untouched.
RampSchedule extend_tail(const RampSchedule& schedule, int n_segments, double segment_s);

// Uniform-grid CSV of (t, P_H, P_V) for plotting.
void write_schedule_csv(std::ostream& out, const RampSchedule& schedule, int n_samples);

// One optimizer coordinate: either a (beam, breakpoint) power or the total
// ramp time. Schedule slots not covered by a layout are frozen and pass
// through decode unchanged.
struct SlotRef {
  enum class Kind { power, total_time };
  Kind kind = Kind::power;
  Beam beam = Beam::horizontal;
  std::size_t knot = 0;
};

// Power slots map [0,1] onto [lo, hi] geometrically (the useful powers span
// decades); the total-time slot maps linearly.
struct ParamLayout {
  std::vector<SlotRef> slots;
  std::vector<double> lo;  // physical lower bound per slot
  std::vector<double> hi;

  std::size_t dim() const { return slots.size(); }
  void validate(const RampSchedule& base) const;
  double to_physical(std::size_t slot, double v01) const;
  double to_normalized(std::size_t slot, double physical) const;
};

// All power knots after the initial one, optionally plus the total time.
ParamLayout full_layout(const RampSchedule& base, double lo_h_W, double hi_h_W,
                        double lo_v_W, double hi_v_W, bool include_time = false,
                        double time_lo_s = 0.0, double time_hi_s = 0.0);

// Only the trailing n_tail power knots of each beam: 2 * n_tail coordinates.
ParamLayout tail_layout(const RampSchedule& base, std::size_t n_tail, double lo_h_W,
                        double hi_h_W, double lo_v_W, double hi_v_W);

// Normalized coordinates in [0,1]^d plus the indices of any coordinates that
// fell outside the box and were clamped; the optimizer's boundary diagnostics
// consume the clamp reports.
struct EncodeResult {
  std::vector<double> values;
  std::vector<std::size_t> clamped;
};

struct DecodeResult {
  RampSchedule schedule;
  std::vector<std::size_t> clamped;
};

EncodeResult encode(const RampSchedule& schedule, const ParamLayout& layout);
DecodeResult decode(const std::vector<double>& values01, const ParamLayout& layout,
                    const RampSchedule& base);

}  // namespace becopt
