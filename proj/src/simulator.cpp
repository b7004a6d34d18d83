#include "constel/simulator.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace constel::sim {

namespace {

// Derivative over a flat [dtheta | omega | phase?] vector; the phase block
// (integral of omega deviations) is carried only by run_cascade.
void flat_derivative(const std::vector<double>& y, std::vector<double>& dy, int n,
                     const stability::PolicyParams& p, PolicyKind kind, bool with_phase) {
    const double* dtheta = y.data();
    const double* omega = y.data() + n;
    double* d_dtheta = dy.data();
    double* d_omega = dy.data() + n;

    for (int i = 0; i < n; ++i) {
        const int prev = (i + n - 1) % n;
        d_dtheta[i] = omega[prev] - omega[i];
    }
    if (kind == PolicyKind::pairwise) {
        for (int i = 0; i < n; ++i) {
            const int prev = (i + n - 1) % n;
            d_omega[i] = p.alpha1 * dtheta[i] - p.alpha2 * omega[i] + p.alpha3 * omega[prev];
        }
    } else {
        for (int i = 0; i < n; ++i) {
            const int prev = (i + n - 1) % n;
            const int next = (i + 1) % n;
            d_omega[i] = p.alpha1 * (dtheta[i] - dtheta[next]) +
                         p.alpha3 * ((omega[prev] - omega[i]) - (omega[i] - omega[next]));
        }
    }
    if (with_phase) {
        double* d_phase = dy.data() + 2 * n;
        for (int i = 0; i < n; ++i) d_phase[i] = omega[i];
    }
}

// Classical RK4 over the flat vector.
void rk4_step(std::vector<double>& y, int n, const stability::PolicyParams& p, PolicyKind kind,
              bool with_phase, double dt,
              std::vector<double>& k1, std::vector<double>& k2, std::vector<double>& k3,
              std::vector<double>& k4, std::vector<double>& tmp) {
    const std::size_t len = y.size();
    flat_derivative(y, k1, n, p, kind, with_phase);
    for (std::size_t j = 0; j < len; ++j) tmp[j] = y[j] + 0.5 * dt * k1[j];
    flat_derivative(tmp, k2, n, p, kind, with_phase);
    for (std::size_t j = 0; j < len; ++j) tmp[j] = y[j] + 0.5 * dt * k2[j];
    flat_derivative(tmp, k3, n, p, kind, with_phase);
    for (std::size_t j = 0; j < len; ++j) tmp[j] = y[j] + dt * k3[j];
    flat_derivative(tmp, k4, n, p, kind, with_phase);
    for (std::size_t j = 0; j < len; ++j)
        y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
}

void check_state(const orbital::RingState& state) {
    if (state.dtheta_dev.size() != state.omega_dev.size())
        throw std::invalid_argument("deviation arrays must have equal length");
    if (state.size() < 2) throw std::invalid_argument("ring needs at least two satellites");
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

void SimConfig::validate() const {
    if (n < 3) throw std::domain_error("ring size must be at least 3");
    if (!(dt_s > 0.0)) throw std::domain_error("dt_s must be positive");
    if (!(trigger_threshold_rad > 0.0))
        throw std::domain_error("trigger_threshold_rad must be positive");
    if (duration_s < dt_s) throw std::domain_error("duration_s must cover at least one step");
    if (!(decouple_altitude_km > 0.0))
        throw std::domain_error("decouple_altitude_km must be positive");
    if (record_stride < 1) throw std::domain_error("record_stride must be at least 1");
    if (perturbation.sat_index < 0 || perturbation.sat_index >= n)
        throw std::domain_error("perturbation sat_index out of range");
    if (policy == PolicyKind::pairwise)
        params.validate_pairwise();
    else
        params.validate_bilateral();
    (void)orbital::mean_motion(altitude_km);  // altitude band check
}

RingDeriv derivative(const orbital::RingState& state, const stability::PolicyParams& p,
                     PolicyKind kind) {
    check_state(state);
    const int n = static_cast<int>(state.size());
    std::vector<double> y(2 * static_cast<std::size_t>(n));
    std::copy(state.dtheta_dev.begin(), state.dtheta_dev.end(), y.begin());
    std::copy(state.omega_dev.begin(), state.omega_dev.end(), y.begin() + n);
    std::vector<double> dy(y.size());
    flat_derivative(y, dy, n, p, kind, false);

    RingDeriv d;
    d.dtheta_rate.assign(dy.begin(), dy.begin() + n);
    d.omega_rate.assign(dy.begin() + n, dy.end());
    return d;
}

orbital::RingState step(const orbital::RingState& state, const stability::PolicyParams& p,
                        PolicyKind kind, double dt_s) {
    check_state(state);
    if (!(dt_s > 0.0)) throw std::domain_error("dt_s must be positive");
    const int n = static_cast<int>(state.size());
    std::vector<double> y(2 * static_cast<std::size_t>(n));
    std::copy(state.dtheta_dev.begin(), state.dtheta_dev.end(), y.begin());
    std::copy(state.omega_dev.begin(), state.omega_dev.end(), y.begin() + n);
    std::vector<double> k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()), tmp(y.size());
    rk4_step(y, n, p, kind, false, dt_s, k1, k2, k3, k4, tmp);

    orbital::RingState out;
    out.time_s = state.time_s + dt_s;
    out.dtheta_dev.assign(y.begin(), y.begin() + n);
    out.omega_dev.assign(y.begin() + n, y.end());
    return out;
}

orbital::RingState inject_perturbation(orbital::RingState state, int sat_index,
                                       double impulse_rad_s) {
    check_state(state);
    if (sat_index < 0 || sat_index >= static_cast<int>(state.size()))
        throw std::out_of_range("sat_index out of range");
    state.omega_dev[static_cast<std::size_t>(sat_index)] += impulse_rad_s;
    return state;
}

SimResult run_cascade(const SimConfig& config) {
    config.validate();
    const int n = config.n;
    const std::size_t len = config.track_phase ? 3 * static_cast<std::size_t>(n)
                                               : 2 * static_cast<std::size_t>(n);
    std::vector<double> y(len, 0.0);
    std::vector<double> k1(len), k2(len), k3(len), k4(len), tmp(len);

    // Altitude offset per unit rate deviation, from the linearized Kepler
    // relation delta_a = -(2a/(3w)) * delta_w.
    const double a_km = orbital::kEarthRadiusKm + config.altitude_km;
    const double decouple_scale = 2.0 * a_km / (3.0 * orbital::mean_motion(config.altitude_km));

    SimResult result;
    const long total_steps = static_cast<long>(std::ceil(config.duration_s / config.dt_s));

    auto record_sample = [&](double t) {
        orbital::RingState s;
        s.time_s = t;
        s.dtheta_dev.assign(y.begin(), y.begin() + n);
        s.omega_dev.assign(y.begin() + n, y.begin() + 2 * n);
        result.samples.push_back(std::move(s));
        if (config.track_phase)
            result.phase_samples.emplace_back(y.begin() + 2 * n, y.end());
    };

    bool perturbed = false;
    int watch = -1;            // satellite whose threshold crossing fires next
    double watch_prev_abs = 0.0;
    double last_event_time = 0.0;
    int external_events = 0;
    int cascaded_events = 0;

    // Quiescence bookkeeping: checked on a fixed cadence, requires every
    // spacing deviation below a tenth of the trigger and a shrinking peak.
    constexpr long kQuiescenceCadence = 128;
    double prev_peak = -1.0;

    auto apply_perturbation = [&](double t) {
        y[static_cast<std::size_t>(n) + config.perturbation.sat_index] +=
            config.perturbation.impulse_rad_s;
        result.events.push_back(ManeuverEvent{config.perturbation.sat_index, t,
                                              config.perturbation.impulse_rad_s,
                                              EventCause::external});
        ++external_events;
        watch = (config.perturbation.sat_index + 1) % n;
        watch_prev_abs = std::fabs(y[static_cast<std::size_t>(watch)]);
        last_event_time = t;
        perturbed = true;
    };

    double t = 0.0;
    if (config.perturbation.start_time_s <= 0.0) apply_perturbation(0.0);
    record_sample(0.0);

    result.terminated_by = Termination::duration;
    for (long s = 1; s <= total_steps; ++s) {
        rk4_step(y, n, config.params, config.policy, config.track_phase, config.dt_s, k1, k2, k3,
                 k4, tmp);
        t = static_cast<double>(s) * config.dt_s;

        if (!perturbed && config.perturbation.start_time_s <= t) apply_perturbation(t);

        if (!all_finite(y)) {
            result.blew_up = true;
            result.terminated_by = Termination::duration;
            record_sample(t);
            break;
        }

        // Event layer: one watched satellite at a time, ring order.
        if (perturbed && watch >= 0) {
            const double cur_abs = std::fabs(y[static_cast<std::size_t>(watch)]);
            if (watch_prev_abs < config.trigger_threshold_rad &&
                cur_abs >= config.trigger_threshold_rad && t > last_event_time) {
                result.events.push_back(ManeuverEvent{watch, t, 0.0, EventCause::cascaded});
                ++cascaded_events;
                last_event_time = t;
                watch = (watch + 1) % n;
                watch_prev_abs = std::fabs(y[static_cast<std::size_t>(watch)]);
            } else {
                watch_prev_abs = cur_abs;
            }
        }

        const bool keep = (s % config.record_stride == 0) || s == total_steps;
        if (keep) record_sample(t);

        // Altitude decoupling ends the cascade: the drifted satellite has
        // left the shell and its follower is safe.
        bool decoupled = false;
        for (int i = 0; i < n && !decoupled; ++i)
            if (decouple_scale * std::fabs(y[static_cast<std::size_t>(n) + i]) >=
                config.decouple_altitude_km)
                decoupled = true;
        if (decoupled) {
            if (!keep) record_sample(t);
            result.terminated_by = Termination::decoupling;
            break;
        }

        if (perturbed && s % kQuiescenceCadence == 0) {
            double peak = 0.0;
            for (int i = 0; i < n; ++i) peak = std::max(peak, std::fabs(y[static_cast<std::size_t>(i)]));
            if (prev_peak >= 0.0 && peak < config.trigger_threshold_rad / 10.0 &&
                peak < prev_peak) {
                if (!keep) record_sample(t);
                result.terminated_by = Termination::quiescence;
                break;
            }
            prev_peak = peak;
        }
    }

    result.chain_hops = cascaded_events;
    result.amplification_factor =
        external_events > 0 ? static_cast<double>(cascaded_events) / external_events : 0.0;
    return result;
}

double amplification_factor(const SimResult& result) {
    int external = 0, cascaded = 0;
    for (const auto& e : result.events)
        (e.cause == EventCause::external ? external : cascaded)++;
    if (external == 0)
        throw std::domain_error("amplification factor needs at least one external event");
    return static_cast<double>(cascaded) / external;
}

}  // namespace constel::sim
