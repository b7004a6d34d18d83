#include "constel/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace constel::stability {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Roots of lambda^2 + b*lambda + c = 0 via the cancellation-free form:
// q = -(b + s*sqrt(b^2 - 4c))/2 with s chosen so b and s*sqrt(...) add
// constructively, then the second root is c/q.
std::pair<ComplexGain, ComplexGain> quadratic_roots(ComplexGain b, ComplexGain c) {
    const ComplexGain disc = std::sqrt(b * b - 4.0 * c);
    const double align = b.real() * disc.real() + b.imag() * disc.imag();
    const ComplexGain q = (align >= 0.0) ? (-b - disc) * 0.5 : (-b + disc) * 0.5;
    if (q == ComplexGain{0.0, 0.0}) return {ComplexGain{0.0, 0.0}, ComplexGain{0.0, 0.0}};
    return {q, c / q};
}

void order_by_real(ComplexGain& r1, ComplexGain& r2) {
    if (r2.real() < r1.real() || (r2.real() == r1.real() && r2.imag() < r1.imag()))
        std::swap(r1, r2);
}

// |H(i*mu)|^2 as a function of u = mu^2; shared by the sup computation and
// the safe-distance sweep.
double gain_sq_on_axis(const PolicyParams& p, double u) {
    const double num = p.alpha1 * p.alpha1 + p.alpha3 * p.alpha3 * u;
    const double den =
        u * u + (p.alpha2 * p.alpha2 - 2.0 * p.alpha1) * u + p.alpha1 * p.alpha1;
    return num / den;
}

}  // namespace

void PolicyParams::validate_pairwise() const {
    if (!(alpha1 > 0.0)) throw std::domain_error("alpha1 must be positive");
    if (!(alpha3 > 0.0)) throw std::domain_error("alpha3 must be positive");
    if (!(alpha2 > alpha3)) throw std::domain_error("alpha2 must exceed alpha3");
}

void PolicyParams::validate_bilateral() const {
    if (!(alpha1 > 0.0)) throw std::domain_error("alpha1 must be positive");
    if (!(alpha3 > 0.0)) throw std::domain_error("alpha3 must be positive");
}

StabilityVerdict stability_verdict(const PolicyParams& p) {
    p.validate_pairwise();
    StabilityVerdict v;
    v.margin = p.alpha2 * p.alpha2 - p.alpha3 * p.alpha3 - 2.0 * p.alpha1;
    v.stable = v.margin >= 0.0;
    return v;
}

namespace {

// A denominator is a pole hit when it vanishes relative to the size of its
// own terms; an exact-zero test would miss poles reached through rounded
// inputs by a few ulps.
void require_off_pole(const ComplexGain& den, double term_scale, const char* what) {
    if (std::abs(den) <= 32.0 * std::numeric_limits<double>::epsilon() * term_scale)
        throw std::domain_error(what);
}

}  // namespace

ComplexGain transfer_gain(const PolicyParams& p, ComplexGain lambda) {
    const ComplexGain den = p.alpha1 + p.alpha2 * lambda + lambda * lambda;
    const double mag = std::abs(lambda);
    require_off_pole(den, p.alpha1 + p.alpha2 * mag + mag * mag,
                     "transfer function pole at the requested lambda");
    return (p.alpha1 + p.alpha3 * lambda) / den;
}

ComplexGain bilateral_transfer_gain(const PolicyParams& p, ComplexGain lambda) {
    const ComplexGain den = 2.0 * p.alpha1 + 2.0 * p.alpha3 * lambda + lambda * lambda;
    const double mag = std::abs(lambda);
    require_off_pole(den, 2.0 * p.alpha1 + 2.0 * p.alpha3 * mag + mag * mag,
                     "bilateral transfer function pole at the requested lambda");
    return (p.alpha1 + p.alpha3 * lambda) / den;
}

std::vector<ComplexGain> ring_eigenvalues(const PolicyParams& p, int n) {
    p.validate_pairwise();
    if (n < 2) throw std::domain_error("ring size must be at least 2");

    std::vector<ComplexGain> eigs;
    eigs.reserve(2 * static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
        const int k = static_cast<int>((static_cast<long long>(n - 1) * (i - 1)) % n);
        if (k == 0) {
            // z^0 = 1 zeroes the constant term: the roots are exact.
            eigs.emplace_back(-(p.alpha2 - p.alpha3), 0.0);
            eigs.emplace_back(0.0, 0.0);
            continue;
        }
        const double phi = kTwoPi * k / n;
        const ComplexGain zk{std::cos(phi), std::sin(phi)};
        auto [r1, r2] = quadratic_roots(p.alpha2 - p.alpha3 * zk, p.alpha1 * (1.0 - zk));
        order_by_real(r1, r2);
        eigs.push_back(r1);
        eigs.push_back(r2);
    }
    return eigs;
}

double max_real_part(const PolicyParams& p, int n) {
    const auto eigs = ring_eigenvalues(p, n);
    // Entry 1 of the first block is the structural zero placed by
    // ring_eigenvalues; everything else counts.
    double best = eigs[0].real();
    for (std::size_t j = 2; j < eigs.size(); ++j) best = std::max(best, eigs[j].real());
    return best;
}

double sup_imag_axis_gain(const PolicyParams& p) {
    p.validate_pairwise();
    const double m = p.alpha2 * p.alpha2 - p.alpha3 * p.alpha3 - 2.0 * p.alpha1;
    // |H(i*mu)|^2 - 1 has the sign of -u*(u + m) for u = mu^2, so a
    // non-negative margin pins the supremum at the zero-frequency value 1,
    // and a negative margin puts an interior peak at the root below.
    if (m >= 0.0) return 1.0;
    const double a1 = p.alpha1;
    const double a3 = p.alpha3;
    const double u = a1 * (std::sqrt(a1 * a1 - a3 * a3 * m) - a1) / (a3 * a3);
    return std::sqrt(gain_sq_on_axis(p, u));
}

double lifetime_time_of_nth(double h_gain, double t0, int n_maneuvers, bool at_unity) {
    if (!(h_gain > 0.0)) throw std::domain_error("h_gain must be positive");
    if (!(t0 > 0.0)) throw std::domain_error("t0 must be positive");
    if (n_maneuvers < 1) throw std::domain_error("n_maneuvers must be at least 1");
    if (h_gain == 1.0) {
        if (!at_unity)
            throw std::domain_error("h_gain = 1 is a removable singularity; pass at_unity to get N*t0");
        return static_cast<double>(n_maneuvers) * t0;
    }
    // 1 - h^-N and 1 - h^-1 via expm1 so near-horizon values keep every bit
    // the double format can hold.
    const double log_h = std::log(h_gain);
    const double num = -std::expm1(-static_cast<double>(n_maneuvers) * log_h);
    const double den = -std::expm1(-log_h);
    return t0 * num / den;
}

double maneuver_count(double h_gain, double t0, double t) {
    if (!(h_gain > 1.0)) throw std::domain_error("maneuver_count needs h_gain > 1");
    if (!(t0 > 0.0)) throw std::domain_error("t0 must be positive");
    if (t < 0.0) throw std::domain_error("t must be non-negative");
    // u = (t/t0)*(1 - 1/h); the count is -log1p(-u)/log(h). log1p defers the
    // cancellation 1 - u to the library's extended-precision path. The horizon
    // test and the logarithm share u so they cannot disagree near the edge.
    const double log_h = std::log(h_gain);
    const double u = (t / t0) * -std::expm1(-log_h);
    if (u >= 1.0)
        throw std::domain_error("t is at or beyond the blow-up horizon of the cascade");
    return -std::log1p(-u) / log_h;
}

double blowup_horizon(double h_gain, double t0) {
    if (!(h_gain > 1.0)) throw std::domain_error("blow-up horizon exists only for h_gain > 1");
    if (!(t0 > 0.0)) throw std::domain_error("t0 must be positive");
    return t0 / -std::expm1(-std::log(h_gain));
}

double safe_distance_bound(const PolicyParams& p, double c_max, int n) {
    if (!(c_max > 0.0)) throw std::domain_error("c_max must be positive");
    if (!stability_verdict(p).stable)
        throw std::domain_error("safe distance bound requires a stable policy");

    double best = 0.0;
    for (const ComplexGain lam : ring_eigenvalues(p, n)) {
        if (lam.real() >= 0.0) continue;  // skips the structural zero too
        const double v = std::abs(1.0 - transfer_gain(p, lam)) / std::abs(lam);
        best = std::max(best, v);
    }
    return c_max * best;
}

double safe_distance_bound_any_n(const PolicyParams& p, double c_max) {
    if (!(c_max > 0.0)) throw std::domain_error("c_max must be positive");
    if (!stability_verdict(p).stable)
        throw std::domain_error("safe distance bound requires a stable policy");

    // |1 - H(i*mu)|^2/mu^2 = (u + (a2-a3)^2) / (u^2 + (a2^2-2a1)u + a1^2)
    // with u = mu^2. Its derivative vanishes at the positive root of
    // u^2 + 2cu + (ce - a1^2) with c = (a2-a3)^2, e = a2^2 - 2a1; the sup is
    // the larger of that interior value and the mu -> 0 limit c/a1^2.
    const double c = (p.alpha2 - p.alpha3) * (p.alpha2 - p.alpha3);
    const double e = p.alpha2 * p.alpha2 - 2.0 * p.alpha1;
    const double a1sq = p.alpha1 * p.alpha1;
    auto g = [&](double u) { return (u + c) / (u * u + e * u + a1sq); };
    double sup_sq = c / a1sq;
    const double rad = c * c - c * e + a1sq;
    if (rad > 0.0) {
        const double u_star = -c + std::sqrt(rad);
        if (u_star > 0.0) sup_sq = std::max(sup_sq, g(u_star));
    }
    return c_max * std::sqrt(sup_sq);
}

CapacityBound capacity_bound(double delta_theta_safe, double phase_factor_f, double per_sat_gbps) {
    if (!(delta_theta_safe > 0.0)) throw std::domain_error("delta_theta_safe must be positive");
    if (!(phase_factor_f >= 1.0)) throw std::domain_error("phase_factor_f must be at least 1");
    if (per_sat_gbps < 0.0) throw std::domain_error("per_sat_gbps must be non-negative");

    const double ratio = kTwoPi * phase_factor_f / delta_theta_safe;
    double fl = std::floor(ratio);
    if (ratio == fl) fl -= 1.0;  // the inequality is strict
    CapacityBound b;
    b.max_sats = std::max(0L, static_cast<long>(fl));
    b.max_capacity_gbps = static_cast<double>(b.max_sats) * per_sat_gbps;
    return b;
}

}  // namespace constel::stability
