#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace constel::orbital {

// Two-body gravitational parameter and mean equatorial radius of Earth, the
// only physical constants the model needs. Fixed here for reproducibility.
inline constexpr double kMuEarthKm3S2 = 398600.4418;
inline constexpr double kEarthRadiusKm = 6378.137;

/*
 * Geometry of one orbital shell of a Walker constellation: m identical
 * orbits, s satellites per orbit, and the integer phase factor F that sets
 * the phase offset between adjacent orbit planes.
 */
struct ShellConfig {
    int num_orbits = 1;
    int sats_per_orbit = 1;
    double altitude_km = 550.0;
    double inclination_deg = 53.0;
    int phase_factor_f = 0;

    int total_sats() const { return num_orbits * sats_per_orbit; }

    /// Throws std::domain_error when any field is outside its allowed range.
    void validate() const;
};

// Nominal operating point of the shell: uniform in-orbit spacing and the
// circular-orbit mean motion. Every deviation quantity is measured from it.
struct EquilibriumState {
    double spacing_rad = 0.0;
    double mean_motion_rad_s = 0.0;
};

/*
 * Deviation state of the n-satellite ring: per-satellite spacing deviation
 * (radians) and along-track rate deviation (radians/second). The spacing
 * deviations are consecutive differences around a closed ring, so they sum
 * to zero; the simulator checks that identity after every step.
 */
struct RingState {
    double time_s = 0.0;
    std::vector<double> dtheta_dev;
    std::vector<double> omega_dev;

    std::size_t size() const { return dtheta_dev.size(); }
};

/// Circular-orbit mean motion sqrt(mu/a^3) in rad/s for an altitude in
/// [200, 2000] km above the mean equatorial radius.
double mean_motion(double altitude_km);

/// Equilibrium layout of a shell: spacing 2*pi/sats_per_orbit and the
/// mean motion at the shell's altitude.
EquilibriumState equilibrium(const ShellConfig& config);

/*
 * Minimum in-plane angular separation over all distinct satellite pairs of
 * the shell under the Walker phasing rule: satellite k of orbit p sits at
 * phase 2*pi*k/s + 2*pi*F*p/(m*s). Differences are taken modulo 2*pi and
 * symmetrized, so the result lies in [0, pi]. This is the quantity that
 * makes some phase factors F unusable (near-zero separation).
 */
double walker_min_spacing(const ShellConfig& config);

}  // namespace constel::orbital
