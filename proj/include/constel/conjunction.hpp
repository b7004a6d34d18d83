#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace constel::conjunction {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

/*
 * One object's state at closest approach: position, velocity, position
 * covariance, and hard-body radius. Velocity covariance plays no role in
 * the probability computation.
 */
struct StateVector {
    Vec3 position_km{};
    Vec3 velocity_km_s{};
    Mat3 covariance{};  // km^2, symmetric PSD
    double radius_km = 0.0;
};

/*
 * The conjunction reduced to two dimensions: the plane orthogonal to the
 * relative velocity, with axes along the principal directions of the
 * combined position covariance. miss_x/miss_y are the relative-position
 * components on those axes, sigma_x/sigma_y the principal standard
 * deviations, combined_radius the sum of the two hard-body radii.
 */
struct ConjunctionGeometry {
    double miss_x_km = 0.0;
    double miss_y_km = 0.0;
    double sigma_x_km = 0.0;
    double sigma_y_km = 0.0;
    double combined_radius_km = 0.0;
};

// Row of a conjunction report exchanged between operators.
struct CdmRecord {
    std::string object_a_id;
    std::string object_b_id;
    double tca_s = 0.0;  // UTC seconds
    double pc = 0.0;
    double miss_distance_km = 0.0;
};

struct McEstimate {
    double pc = 0.0;
    double std_error = 0.0;
};

/*
 * Projects two states onto the conjunction plane: basis e1 along the
 * relative velocity, e2 along v_B x v_A, e3 completing the triad; the
 * combined covariance is restricted to the (e2, e3) plane and rotated into
 * its principal axes, and the relative position is expressed in the same
 * axes. Errors on (near-)parallel velocities and on a combined covariance
 * with a negative principal component.
 */
ConjunctionGeometry project_to_conjunction_plane(const StateVector& a, const StateVector& b);

/*
 * Probability mass of the bivariate normal (centered at the miss components,
 * principal sigmas) inside the disk of the combined radius, by deterministic
 * adaptive quadrature in polar coordinates. The estimated relative error is
 * driven below rel_tol (legal range (0, 1e-3]); failure to converge raises
 * an error that reports the error actually achieved. Result clamped to [0,1].
 */
double collision_probability(const ConjunctionGeometry& geom, double rel_tol = 1e-9);

/// Monte-Carlo estimate of the same mass with binomial standard error.
/// Deterministic for a fixed seed; needs at least 1000 samples.
McEstimate pc_monte_carlo(const ConjunctionGeometry& geom, std::uint64_t samples,
                          std::uint64_t seed);

/// Operator risk rule: true when pc meets or exceeds the threshold.
bool is_high_risk(double pc, double threshold);

}  // namespace constel::conjunction
