#include "constel/conjunction.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace constel::conjunction {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSigmaFloorKm = 1e-9;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
Vec3 scale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

// x^T M y for the symmetrized M.
double quad_form(const Mat3& m, const Vec3& x, const Vec3& y) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s += x[i] * 0.5 * (m[i][j] + m[j][i]) * y[j];
    return s;
}

// Nodes/weights of 16-point Gauss-Legendre on [-1, 1] (positive half; the
// rule is symmetric). Standard tabulated values.
constexpr int kGaussN = 16;
constexpr double kGaussX[kGaussN / 2] = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
constexpr double kGaussW[kGaussN / 2] = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

// Integrand of the polar form at radius r: r times the angular mean of the
// displaced Gaussian, the angular part resolved by an M-point periodic
// trapezoid rule (spectrally accurate for this smooth periodic integrand).
double angular_ring(const ConjunctionGeometry& g, double r, int m_phi) {
    const double inv_sx2 = 1.0 / (g.sigma_x_km * g.sigma_x_km);
    const double inv_sy2 = 1.0 / (g.sigma_y_km * g.sigma_y_km);
    double sum = 0.0;
    for (int j = 0; j < m_phi; ++j) {
        const double phi = kTwoPi * j / m_phi;
        const double dx = r * std::cos(phi) - g.miss_x_km;
        const double dy = r * std::sin(phi) - g.miss_y_km;
        sum += std::exp(-0.5 * (dx * dx * inv_sx2 + dy * dy * inv_sy2));
    }
    return r * sum * (kTwoPi / m_phi);
}

// One resolution level: panels x GL16 in r, m_phi angular nodes.
double quadrature_level(const ConjunctionGeometry& g, int panels, int m_phi) {
    const double R = g.combined_radius_km;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = R * p / panels;
        const double hi = R * (p + 1) / panels;
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        double acc = 0.0;
        for (int q = 0; q < kGaussN / 2; ++q) {
            acc += kGaussW[q] * (angular_ring(g, mid - half * kGaussX[q], m_phi) +
                                 angular_ring(g, mid + half * kGaussX[q], m_phi));
        }
        total += acc * half;
    }
    return total / (kTwoPi * g.sigma_x_km * g.sigma_y_km);
}

ConjunctionGeometry floored(const ConjunctionGeometry& g) {
    ConjunctionGeometry out = g;
    if (out.sigma_x_km < kSigmaFloorKm || out.sigma_y_km < kSigmaFloorKm) {
        std::cerr << "conjunction: near-singular covariance, flooring sigma at " << kSigmaFloorKm
                  << " km\n";
        out.sigma_x_km = std::max(out.sigma_x_km, kSigmaFloorKm);
        out.sigma_y_km = std::max(out.sigma_y_km, kSigmaFloorKm);
    }
    return out;
}

}  // namespace

ConjunctionGeometry project_to_conjunction_plane(const StateVector& a, const StateVector& b) {
    const Vec3 v_rel = sub(b.velocity_km_s, a.velocity_km_s);
    const double v_rel_norm = norm(v_rel);
    const Vec3 plane_normal_raw = cross(b.velocity_km_s, a.velocity_km_s);
    const double cross_norm = norm(plane_normal_raw);
    const double vel_scale = norm(a.velocity_km_s) * norm(b.velocity_km_s);
    if (v_rel_norm == 0.0 || cross_norm <= 1e-12 * vel_scale)
        throw std::domain_error("degenerate conjunction geometry: parallel velocities");

    const Vec3 e1 = scale(v_rel, 1.0 / v_rel_norm);
    const Vec3 e2 = scale(plane_normal_raw, 1.0 / cross_norm);
    const Vec3 e3 = cross(e1, e2);

    // Combined covariance restricted to the (e2, e3) plane.
    Mat3 csum{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) csum[i][j] = a.covariance[i][j] + b.covariance[i][j];
    const double c11 = quad_form(csum, e2, e2);
    const double c12 = quad_form(csum, e2, e3);
    const double c22 = quad_form(csum, e3, e3);

    // Principal axes of the 2x2 restriction.
    const double trace3 = csum[0][0] + csum[1][1] + csum[2][2];
    const double mean = 0.5 * (c11 + c22);
    const double radius = std::sqrt(0.25 * (c11 - c22) * (c11 - c22) + c12 * c12);
    if (mean - radius < -1e-12 * std::max(trace3, 1.0))
        throw std::invalid_argument("combined covariance is not positive semi-definite");
    const double theta = 0.5 * std::atan2(2.0 * c12, c11 - c22);
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    const double var_x = std::max(c11 * ct * ct + 2.0 * c12 * ct * st + c22 * st * st, 0.0);
    const double var_y = std::max(c11 * st * st - 2.0 * c12 * ct * st + c22 * ct * ct, 0.0);

    const Vec3 dp = sub(b.position_km, a.position_km);
    const double px = dot(dp, e2);
    const double py = dot(dp, e3);

    ConjunctionGeometry g;
    g.sigma_x_km = std::sqrt(var_x);
    g.sigma_y_km = std::sqrt(var_y);
    g.miss_x_km = ct * px + st * py;
    g.miss_y_km = -st * px + ct * py;
    g.combined_radius_km = a.radius_km + b.radius_km;
    return floored(g);
}

double collision_probability(const ConjunctionGeometry& geom, double rel_tol) {
    if (!(rel_tol > 0.0) || rel_tol > 1e-3)
        throw std::domain_error("rel_tol must lie in (0, 1e-3]");
    if (!(geom.combined_radius_km > 0.0))
        throw std::domain_error("combined radius must be positive");
    const ConjunctionGeometry g = floored(geom);

    // A miss point 40 sigma clear of the disk boundary decides the integral
    // outright: the stray Gaussian mass is below exp(-800), which underflows
    // double precision entirely. This also keeps floored near-zero
    // covariances out of the quadrature, which could not resolve them.
    const double miss = std::hypot(g.miss_x_km, g.miss_y_km);
    const double sigma_max = std::max(g.sigma_x_km, g.sigma_y_km);
    const double radius = g.combined_radius_km;
    if (radius >= miss + 40.0 * sigma_max) return 1.0;
    if (miss >= radius + 40.0 * sigma_max) return 0.0;

    // Beyond this the disk dwarfs the narrow covariance axis and the fixed
    // node budget cannot sample the density reliably; stopping here beats a
    // spuriously converged zero.
    const double sharpness = radius / std::min(g.sigma_x_km, g.sigma_y_km);
    if (sharpness > 256.0)
        throw std::runtime_error(
            "collision probability quadrature cannot resolve a combined radius above 256 times "
            "the smallest covariance axis (near-singular covariance)");

    // Refine radial panels and angular nodes together until two successive
    // levels agree to rel_tol. The angular grid starts fine enough to place
    // several nodes across the density's footprint on the ring (width ~
    // sigma/R in angle) and to track the oscillation scale r*|m|/sigma^2 of
    // the displaced Gaussian.
    const double drift = std::max(std::fabs(g.miss_x_km) / (g.sigma_x_km * g.sigma_x_km),
                                  std::fabs(g.miss_y_km) / (g.sigma_y_km * g.sigma_y_km)) *
                         radius;
    const double m_phi_need = std::min(std::max({32.0, 4.0 * drift, 8.0 * sharpness}), 16384.0);
    int m_phi = 32;
    while (m_phi < m_phi_need) m_phi *= 2;
    int panels = std::clamp(static_cast<int>(std::ceil(sharpness)), 2, 64);

    double prev = quadrature_level(g, panels, m_phi);
    double achieved = HUGE_VAL;
    for (int level = 0; level < 7; ++level) {
        panels *= 2;
        m_phi *= 2;
        if (static_cast<double>(panels) * kGaussN * m_phi > 4e8) break;
        const double cur = quadrature_level(g, panels, m_phi);
        achieved = std::fabs(cur - prev) / std::max(std::fabs(cur), 1e-300);
        prev = cur;
        if (achieved <= rel_tol) return std::clamp(cur, 0.0, 1.0);
    }
    throw std::runtime_error("collision probability quadrature stalled at relative error " +
                             std::to_string(achieved));
}

McEstimate pc_monte_carlo(const ConjunctionGeometry& geom, std::uint64_t samples,
                          std::uint64_t seed) {
    if (samples < 1000) throw std::domain_error("Monte-Carlo needs at least 1000 samples");
    const ConjunctionGeometry g = floored(geom);

    // Box-Muller on top of the raw engine keeps the draw sequence fully
    // specified, so a seed pins the estimate bit for bit.
    std::mt19937_64 rng(seed);
    auto uniform = [&rng]() {
        return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    };
    const double r2 = g.combined_radius_km * g.combined_radius_km;
    std::uint64_t hits = 0;
    for (std::uint64_t s = 0; s < samples; ++s) {
        // One Box-Muller pair yields one (x, y) draw.
        const double u1 = uniform();
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double x = g.miss_x_km + g.sigma_x_km * mag * std::cos(kTwoPi * u2);
        const double y = g.miss_y_km + g.sigma_y_km * mag * std::sin(kTwoPi * u2);
        if (x * x + y * y <= r2) ++hits;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(samples);
    McEstimate est;
    est.pc = p;
    est.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
    return est;
}

bool is_high_risk(double pc, double threshold) {
    if (pc < 0.0 || pc > 1.0) throw std::domain_error("pc must lie in [0, 1]");
    if (threshold < 0.0 || threshold > 1.0) throw std::domain_error("threshold must lie in [0, 1]");
    return pc >= threshold;
}

}  // namespace constel::conjunction
