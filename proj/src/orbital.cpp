#include "constel/orbital.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace constel::orbital {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void ShellConfig::validate() const {
    if (num_orbits < 1) throw std::domain_error("num_orbits must be >= 1");
    if (sats_per_orbit < 1) throw std::domain_error("sats_per_orbit must be >= 1");
    if (altitude_km < 200.0 || altitude_km > 2000.0)
        throw std::domain_error("altitude_km must lie in [200, 2000], got " +
                                std::to_string(altitude_km));
    if (phase_factor_f < 0 || phase_factor_f >= num_orbits)
        throw std::domain_error("phase_factor_f must be a non-negative integer below num_orbits");
}

double mean_motion(double altitude_km) {
    if (altitude_km < 200.0 || altitude_km > 2000.0)
        throw std::domain_error("altitude_km must lie in [200, 2000], got " +
                                std::to_string(altitude_km));
    const double a = kEarthRadiusKm + altitude_km;
    return std::sqrt(kMuEarthKm3S2 / (a * a * a));
}

EquilibriumState equilibrium(const ShellConfig& config) {
    config.validate();
    return EquilibriumState{kTwoPi / config.sats_per_orbit, mean_motion(config.altitude_km)};
}

double walker_min_spacing(const ShellConfig& config) {
    config.validate();
    const int m = config.num_orbits;
    const int s = config.sats_per_orbit;
    const int f = config.phase_factor_f;
    if (config.total_sats() < 2) return kTwoPi;

    // All pairwise phase differences have the form
    //   2*pi*(dk*m + F*dp) / (m*s)  mod 2*pi,
    // dk in [0, s), dp in [0, m), and every (dk, dp) other than (0, 0) is
    // realized by some pair, so scanning difference classes covers exactly
    // the distinct-pair minimum of the brute force.
    double best = kTwoPi;
    for (int dp = 0; dp < m; ++dp) {
        for (int dk = 0; dk < s; ++dk) {
            if (dp == 0 && dk == 0) continue;
            double d = std::fmod(kTwoPi * (static_cast<double>(dk) * m + static_cast<double>(f) * dp) /
                                     (static_cast<double>(m) * s),
                                 kTwoPi);
            if (d < 0) d += kTwoPi;
            d = std::min(d, kTwoPi - d);
            best = std::min(best, d);
        }
    }
    return best;
}

}  // namespace constel::orbital
