#pragma once

namespace spherepol {

// CODATA 2018 exact values.
inline constexpr double kPlanck = 6.62607015e-34;       // J s
inline constexpr double kSpeedOfLight = 299792458.0;    // m/s
inline constexpr double kVacuumImpedance = 376.730313668;  // ohm, sqrt(mu0/eps0)
inline constexpr double kPi = 3.141592653589793238462643383279502884;

}  // namespace spherepol
