#pragma once

#include <complex>
#include <optional>
#include <vector>

namespace constel::stability {

using ComplexGain = std::complex<double>;

/*
 * Sensitivities of the linearized maneuver policy:
 *   alpha1 (1/s^2)  response to spacing deviation,
 *   alpha2 (1/s)    response to own rate deviation,
 *   alpha3 (1/s)    response to the leader's rate deviation.
 * Pairwise analysis assumes alpha1 > 0 and alpha2 > alpha3 > 0; the bilateral
 * results need only alpha1 > 0 and alpha3 > 0.
 */
struct PolicyParams {
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double alpha3 = 0.0;

    void validate_pairwise() const;
    void validate_bilateral() const;
};

// Outcome of the size-independent stability test. margin is the value of
// alpha2^2 - alpha3^2 - 2*alpha1; the ring is stable for every n exactly when
// it is non-negative. max_real_eig carries the finite-n eigenvalue check when
// a ring size was supplied.
struct StabilityVerdict {
    bool stable = false;
    double margin = 0.0;
    std::optional<double> max_real_eig;
};

struct CapacityBound {
    long max_sats = 0;
    double max_capacity_gbps = 0.0;
};

/// Size-independent stability verdict for the pairwise policy.
StabilityVerdict stability_verdict(const PolicyParams& p);

/// Gain the cascade applies to one satellite's rate deviation at mode lambda:
/// H(lambda) = (a1 + a3*lambda) / (a1 + a2*lambda + lambda^2).
ComplexGain transfer_gain(const PolicyParams& p, ComplexGain lambda);

/// Same gain under the bilateral policy:
/// (a1 + a3*lambda) / (2*a1 + 2*a3*lambda + lambda^2).
ComplexGain bilateral_transfer_gain(const PolicyParams& p, ComplexGain lambda);

/*
 * All 2n eigenvalues of the closed ring of n satellites under the pairwise
 * policy, from the block decomposition of the circulant system matrix: block
 * i in 1..n contributes the two roots of
 *   lambda^2 + (a2 - a3*z^k)*lambda + a1*(1 - z^k) = 0,
 * z = exp(2*pi*j/n), k = (n-1)*(i-1) mod n. The i = 1 block always yields the
 * pair {0, -(a2 - a3)}; the zero is the uniform-rotation mode of the ring.
 * Each block's pair is returned in ascending real-part order.
 */
std::vector<ComplexGain> ring_eigenvalues(const PolicyParams& p, int n);

/// Largest eigenvalue real part over the ring of size n, excluding the single
/// structural zero mode. Negative exactly when the finite ring damps every
/// physical perturbation.
double max_real_part(const PolicyParams& p, int n);

/// sup over real mu of |H(i*mu)|: 1 when the margin is non-negative, above 1
/// otherwise (the resonance peak that feeds the cascade).
double sup_imag_axis_gain(const PolicyParams& p);

/*
 * Time at which the N-th cascaded maneuver fires when each hop shrinks the
 * inter-maneuver gap by the gain h: t(N) = t0*(1 - h^-N)/(1 - h^-1). At
 * h = 1 the expression degenerates to N*t0; callers must acknowledge that
 * case explicitly via at_unity, otherwise it is reported as an error.
 */
double lifetime_time_of_nth(double h_gain, double t0, int n_maneuvers, bool at_unity = false);

/// Inverse of lifetime_time_of_nth for h > 1:
/// N(t) = ln(t0/(t0 - t*(1 - 1/h))) / ln(h). Defined for t below the horizon.
double maneuver_count(double h_gain, double t0, double t);

/// Finite time by which the maneuver count diverges for h > 1: t0/(1 - 1/h).
double blowup_horizon(double h_gain, double t0);

/*
 * Smallest spacing that keeps a worst-case avoidance maneuver of rate
 * amplitude c_max from forcing the follower below a safe gap, maximized over
 * the non-structural eigenvalues of the n-ring:
 *   dtheta_safe = c_max * max over lambda of |1 - H(lambda)| / |lambda|.
 * Requires a stable policy.
 */
double safe_distance_bound(const PolicyParams& p, double c_max, int n);

/// Conservative any-n variant of safe_distance_bound: the maximization runs
/// over the whole imaginary axis instead of one ring's eigenvalues.
double safe_distance_bound_any_n(const PolicyParams& p, double c_max);

/*
 * Largest satellite count admitted by the strict spacing inequality
 * n < 2*pi*F/dtheta_safe, and the network capacity those satellites carry.
 * An exact-integer ratio k admits only k - 1 satellites.
 */
CapacityBound capacity_bound(double delta_theta_safe, double phase_factor_f, double per_sat_gbps);

}  // namespace constel::stability
