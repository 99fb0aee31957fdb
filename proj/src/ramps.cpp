#include "becopt/ramps.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "becopt/textio.hpp"

namespace becopt {

void RampSchedule::validate() const {
  if (times_s.empty()) throw std::invalid_argument("schedule has no breakpoints");
  if (times_s.front() != 0.0) throw std::invalid_argument("schedule must start at t = 0");
  for (std::size_t i = 1; i < times_s.size(); ++i)
    if (times_s[i] <= times_s[i - 1])
      throw std::invalid_argument("breakpoint times must be strictly increasing");
  if (powers_h_W.size() != times_s.size() || powers_v_W.size() != times_s.size())
    throw std::invalid_argument("power lists must match the breakpoint count");
  for (double p : powers_h_W)
    if (p < 0.0) throw std::invalid_argument("powers must be non-negative");
  for (double p : powers_v_W)
    if (p < 0.0) throw std::invalid_argument("powers must be non-negative");
}

double power_at(const RampSchedule& schedule, double t_s, Beam beam) {
  const auto& t = schedule.times_s;
  const auto& p = beam == Beam::horizontal ? schedule.powers_h_W : schedule.powers_v_W;
  if (t.empty()) throw std::out_of_range("empty schedule");
  if (t_s < t.front() || t_s > t.back())
    throw std::out_of_range("time outside the schedule span");
  const auto it = std::upper_bound(t.begin(), t.end(), t_s);
  if (it == t.end()) return p.back();  // t_s == t_K
  const std::size_t hi = static_cast<std::size_t>(it - t.begin());
  if (hi == 0) return p.front();
  const std::size_t lo = hi - 1;
  const double f = (t_s - t[lo]) / (t[hi] - t[lo]);
  return p[lo] + f * (p[hi] - p[lo]);
}

RampSchedule extend_tail(const RampSchedule& schedule, int n_segments, double segment_s) {
  if (n_segments < 1) throw std::invalid_argument("need at least one tail segment");
  if (segment_s <= 0.0) throw std::invalid_argument("segment duration must be positive");
  schedule.validate();
  RampSchedule out = schedule;
  for (int i = 0; i < n_segments; ++i) {
    out.times_s.push_back(out.times_s.back() + segment_s);
    out.powers_h_W.push_back(out.powers_h_W.back());
    out.powers_v_W.push_back(out.powers_v_W.back());
  }
  return out;
}

void write_schedule_csv(std::ostream& out, const RampSchedule& schedule, int n_samples) {
  if (n_samples < 2) throw std::invalid_argument("need at least two samples");
  out << "time_s,P_H_W,P_V_W\n";
  const double t_end = schedule.total_time_s();
  for (int i = 0; i < n_samples; ++i) {
    const double t = t_end * static_cast<double>(i) / (n_samples - 1);
    out << fmt_double(t) << ',' << fmt_double(power_at(schedule, t, Beam::horizontal))
        << ',' << fmt_double(power_at(schedule, t, Beam::vertical)) << '\n';
  }
}

void ParamLayout::validate(const RampSchedule& base) const {
  if (slots.size() != lo.size() || slots.size() != hi.size())
    throw std::invalid_argument("layout bounds must match slot count");
  std::size_t time_slots = 0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (hi[i] <= lo[i]) throw std::invalid_argument("layout box must have lo < hi");
    if (slots[i].kind == SlotRef::Kind::power && lo[i] <= 0.0)
      throw std::invalid_argument("power boxes must be strictly positive");
    if (slots[i].kind == SlotRef::Kind::total_time) {
      ++time_slots;
      continue;
    }
    if (slots[i].knot >= base.knots())
      throw std::invalid_argument("layout references a breakpoint outside the schedule");
    for (std::size_t j = i + 1; j < slots.size(); ++j)
      if (slots[j].kind == SlotRef::Kind::power && slots[j].beam == slots[i].beam &&
          slots[j].knot == slots[i].knot)
        throw std::invalid_argument("layout covers a schedule slot twice");
  }
  if (time_slots > 1) throw std::invalid_argument("at most one total-time slot");
}

ParamLayout full_layout(const RampSchedule& base, double lo_h_W, double hi_h_W,
                        double lo_v_W, double hi_v_W, bool include_time,
                        double time_lo_s, double time_hi_s) {
  base.validate();
  ParamLayout layout;
  for (std::size_t k = 1; k < base.knots(); ++k) {
    layout.slots.push_back({SlotRef::Kind::power, Beam::horizontal, k});
    layout.lo.push_back(lo_h_W);
    layout.hi.push_back(hi_h_W);
  }
  for (std::size_t k = 1; k < base.knots(); ++k) {
    layout.slots.push_back({SlotRef::Kind::power, Beam::vertical, k});
    layout.lo.push_back(lo_v_W);
    layout.hi.push_back(hi_v_W);
  }
  if (include_time) {
    layout.slots.push_back({SlotRef::Kind::total_time, Beam::horizontal, 0});
    layout.lo.push_back(time_lo_s);
    layout.hi.push_back(time_hi_s);
  }
  layout.validate(base);
  return layout;
}

ParamLayout tail_layout(const RampSchedule& base, std::size_t n_tail, double lo_h_W,
                        double hi_h_W, double lo_v_W, double hi_v_W) {
  base.validate();
  if (n_tail == 0 || n_tail >= base.knots())
    throw std::invalid_argument("tail must expose between 1 and knots-1 breakpoints");
  ParamLayout layout;
  const std::size_t first = base.knots() - n_tail;
  for (std::size_t k = first; k < base.knots(); ++k) {
    layout.slots.push_back({SlotRef::Kind::power, Beam::horizontal, k});
    layout.lo.push_back(lo_h_W);
    layout.hi.push_back(hi_h_W);
  }
  for (std::size_t k = first; k < base.knots(); ++k) {
    layout.slots.push_back({SlotRef::Kind::power, Beam::vertical, k});
    layout.lo.push_back(lo_v_W);
    layout.hi.push_back(hi_v_W);
  }
  layout.validate(base);
  return layout;
}

double ParamLayout::to_physical(std::size_t slot, double v01) const {
  if (slots[slot].kind == SlotRef::Kind::power)
    return lo[slot] * std::pow(hi[slot] / lo[slot], v01);
  return lo[slot] + v01 * (hi[slot] - lo[slot]);
}

double ParamLayout::to_normalized(std::size_t slot, double physical) const {
  if (slots[slot].kind == SlotRef::Kind::power)
    return std::log(physical / lo[slot]) / std::log(hi[slot] / lo[slot]);
  return (physical - lo[slot]) / (hi[slot] - lo[slot]);
}

namespace {

double clamp01(double v, bool* clamped) {
  if (v < 0.0) {
    *clamped = true;
    return 0.0;
  }
  if (v > 1.0) {
    *clamped = true;
    return 1.0;
  }
  return v;
}

}  // namespace

EncodeResult encode(const RampSchedule& schedule, const ParamLayout& layout) {
  schedule.validate();
  layout.validate(schedule);
  EncodeResult out;
  out.values.reserve(layout.dim());
  for (std::size_t i = 0; i < layout.dim(); ++i) {
    const SlotRef& s = layout.slots[i];
    double physical;
    if (s.kind == SlotRef::Kind::total_time) {
      physical = schedule.total_time_s();
    } else {
      const auto& p =
          s.beam == Beam::horizontal ? schedule.powers_h_W : schedule.powers_v_W;
      physical = p[s.knot];
    }
    bool was_clamped = false;
    double v;
    if (s.kind == SlotRef::Kind::power && physical <= 0.0) {
      v = 0.0;
      was_clamped = true;
    } else {
      v = clamp01(layout.to_normalized(i, physical), &was_clamped);
    }
    if (was_clamped) out.clamped.push_back(i);
    out.values.push_back(v);
  }
  return out;
}

DecodeResult decode(const std::vector<double>& values01, const ParamLayout& layout,
                    const RampSchedule& base) {
  base.validate();
  layout.validate(base);
  if (values01.size() != layout.dim())
    throw std::invalid_argument("value vector does not match layout dimension");
  DecodeResult out;
  out.schedule = base;
  for (std::size_t i = 0; i < layout.dim(); ++i) {
    bool was_clamped = false;
    const double v = clamp01(values01[i], &was_clamped);
    if (was_clamped) out.clamped.push_back(i);
    const double physical = layout.to_physical(i, v);
    const SlotRef& s = layout.slots[i];
    if (s.kind == SlotRef::Kind::total_time) {
      const double scale = physical / base.total_time_s();
      for (double& t : out.schedule.times_s) t *= scale;
    } else {
      auto& p = s.beam == Beam::horizontal ? out.schedule.powers_h_W
                                           : out.schedule.powers_v_W;
      p[s.knot] = physical;
    }
  }
  out.schedule.validate();
  return out;
}

}  // namespace becopt
