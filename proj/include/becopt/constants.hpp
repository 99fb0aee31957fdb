#pragma once

// Physical constants (SI) and the unit conversions used throughout.
// Quantities cross module boundaries in "lab units": lengths um, powers W,
// temperatures uK, magnetic fields G, three-body rates cm^6/s.

namespace becopt {

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double kPlanck = 6.62607015e-34;         // J s
inline constexpr double kHbar = kPlanck / (2.0 * kPi);    // J s
inline constexpr double kBoltzmann = 1.380649e-23;        // J/K
inline constexpr double kAmu = 1.66053906660e-27;         // kg
inline constexpr double kBohrRadius = 5.29177210903e-11;  // m

inline constexpr double kThuliumMassAmu = 168.93421;
inline constexpr double kThuliumMassKg = kThuliumMassAmu * kAmu;

// k_B times one microkelvin, in joules. Trap depths are quoted in uK.
inline constexpr double kJoulePerUK = kBoltzmann * 1e-6;

// Critical peak phase-space density n0 * lambda_dB^3 at condensation,
// zeta(3/2).
inline constexpr double kCondensationPsd = 2.6123753486854883;

// Column integral of the Thomas-Fermi profile (1 - x^2/Rx^2 - y^2/Ry^2)^{3/2}
// over its supporting ellipse equals kTfColumnIntegral * Rx * Ry.
inline constexpr double kTfColumnIntegral = 2.0 * kPi / 5.0;

inline constexpr double kUmToM = 1e-6;
inline constexpr double kMToUm = 1e6;
inline constexpr double kPerUm3ToPerCm3 = 1e12;   // 1 um^-3 = 1e12 cm^-3
inline constexpr double kCm6ToM6 = 1e-12;         // 1 cm^6 = 1e-12 m^6

}  // namespace becopt
