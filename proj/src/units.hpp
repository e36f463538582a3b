#pragma once

#include <cmath>

namespace sensormesh {

inline constexpr double kBoltzmann = 1.380649e-23;  // J/K
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kRoomTemperatureK = 298.0;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double linear) { return 10.0 * std::log10(linear); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }
inline double wavelength_m(double frequency_hz) { return kSpeedOfLight / frequency_hz; }

// Battery bookkeeping is done in coulombs; radio packets carry uAh.
inline double coulombs_to_uah(double coulombs) { return coulombs * (1e6 / 3600.0); }
inline double uah_to_coulombs(double uah) { return uah * (3600.0 / 1e6); }
inline double mah_to_coulombs(double mah) { return mah * 3.6; }

}  // namespace sensormesh
