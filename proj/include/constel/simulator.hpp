#pragma once

#include "constel/orbital.hpp"
#include "constel/stability.hpp"

#include <vector>

namespace constel::sim {

enum class PolicyKind { pairwise, bilateral };

// One injected avoidance maneuver: which satellite, how hard it brakes or
// accelerates (rad/s of along-track rate), and when.
struct Perturbation {
    int sat_index = 0;
    double impulse_rad_s = 0.0;
    double start_time_s = 0.0;
};

/*
 * Full description of one cascade run. The ring has n satellites at the
 * given altitude; events fire when a spacing deviation crosses
 * trigger_threshold_rad; a satellite whose rate deviation corresponds to an
 * altitude offset of decouple_altitude_km (through delta_a = -(2a/(3w))*dw)
 * has drifted out of the shell and ends the cascade. record_stride thins the
 * stored trajectory; track_phase additionally stores per-satellite phase
 * deviations, which the ephemeris synthesizer needs.
 */
struct SimConfig {
    int n = 32;
    PolicyKind policy = PolicyKind::pairwise;
    stability::PolicyParams params;
    double dt_s = 1.0;
    double duration_s = 10000.0;
    double trigger_threshold_rad = 0.0;
    double decouple_altitude_km = 1.0;
    double altitude_km = 550.0;
    Perturbation perturbation;
    int record_stride = 1;
    bool track_phase = false;

    void validate() const;
};

enum class EventCause { external, cascaded };

struct ManeuverEvent {
    int sat_index = 0;
    double time_s = 0.0;
    double impulse_rad_s = 0.0;  // zero for cascaded events: the policy acts continuously
    EventCause cause = EventCause::cascaded;
};

enum class Termination { duration, decoupling, quiescence };

struct SimResult {
    std::vector<orbital::RingState> samples;
    // Per-satellite phase deviations aligned with samples; empty unless
    // track_phase was set.
    std::vector<std::vector<double>> phase_samples;
    std::vector<ManeuverEvent> events;
    double amplification_factor = 0.0;
    int chain_hops = 0;
    Termination terminated_by = Termination::duration;
    bool blew_up = false;
};

// Time derivative of the deviation state under one policy.
struct RingDeriv {
    std::vector<double> dtheta_rate;
    std::vector<double> omega_rate;
};

/*
 * Pairwise policy: each satellite reacts to its spacing deviation, its own
 * rate deviation, and its leader's rate deviation. Bilateral policy: the
 * same reaction minus the mirrored reaction to the follower side, which
 * couples each satellite to both neighbors and conserves the total rate
 * deviation. Spacing deviations evolve as rate differences in both cases.
 */
RingDeriv derivative(const orbital::RingState& state, const stability::PolicyParams& p,
                     PolicyKind kind);

/// One classical fourth-order Runge-Kutta step of size dt_s.
orbital::RingState step(const orbital::RingState& state, const stability::PolicyParams& p,
                        PolicyKind kind, double dt_s);

/// Adds an along-track rate impulse to one satellite.
orbital::RingState inject_perturbation(orbital::RingState state, int sat_index,
                                       double impulse_rad_s);

/*
 * Integrates the configured policy, applies the perturbation at its start
 * time, and layers discrete maneuver events on top of the continuous
 * dynamics: the satellite after the latest event is watched, and the first
 * time its spacing deviation magnitude crosses the trigger threshold from
 * below a cascaded event fires and the watch advances one satellite along
 * the ring. The run ends at the configured duration, when any satellite
 * decouples in altitude, or when every spacing deviation has fallen below a
 * tenth of the threshold and is still shrinking.
 */
SimResult run_cascade(const SimConfig& config);

/// Cascaded events per external event. Errors when the run had no external
/// event to amplify.
double amplification_factor(const SimResult& result);

}  // namespace constel::sim
