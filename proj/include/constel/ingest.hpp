#pragma once

#include "constel/conjunction.hpp"
#include "constel/orbital.hpp"
#include "constel/simulator.hpp"
#include "constel/stability.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace constel::ingest {

/// Parse failure with location context: which line or row, what was wrong.
class ParseError : public std::runtime_error {
  public:
    ParseError(std::string message, long row = -1)
        : std::runtime_error(std::move(message)), row_(row) {}
    /// 1-based data-row index when the failure is tied to a row, else -1.
    long row() const { return row_; }

  private:
    long row_;
};

/*
 * Orbital elements of one public two-line element set. The epoch keeps the
 * native TLE representation (two-digit year plus fractional day of year);
 * epoch_utc_s() converts it, mapping years below 57 to 2000+yy per the usual
 * century convention.
 */
struct TleRecord {
    int norad_id = 0;
    int epoch_year = 0;       // two-digit year as printed
    double epoch_day = 0.0;   // fractional day of year, 1.0 = Jan 1 00:00
    double inclination_deg = 0.0;
    double raan_deg = 0.0;
    double eccentricity = 0.0;
    double arg_perigee_deg = 0.0;
    double mean_anomaly_deg = 0.0;
    double mean_motion_rev_day = 0.0;
    int line1_checksum = 0;
    int line2_checksum = 0;

    double epoch_utc_s() const;
    bool operator==(const TleRecord&) const = default;
};

// One row of the ephemeris CSV: inertial state at an epoch, with optional
// diagonal position covariance.
struct EphemerisRecord {
    std::string sat_id;
    double epoch_s = 0.0;  // UTC seconds
    conjunction::Vec3 position_km{};
    conjunction::Vec3 velocity_km_s{};
    std::optional<conjunction::Vec3> covariance_diag_km2;
};

struct PolicyEstimate {
    stability::PolicyParams params;
    double residual_rms = 0.0;  // rad/s^2
    long sample_count = 0;
};

// Satellite-epoch flagged as an externally triggered avoidance maneuver.
struct ManeuverDetection {
    std::string sat_id;
    double epoch_s = 0.0;
    double sma_jump_km = 0.0;  // deviation from the rolling-median prediction
};

struct ChainHop {
    std::string sat_id;
    double epoch_s = 0.0;
    double dtheta_before_rad = 0.0;  // spacing at its tightest
    double dtheta_after_rad = 0.0;   // spacing once reopened
};

struct CascadeChain {
    ManeuverDetection seed;
    std::vector<ChainHop> hops;
    int hop_count() const { return static_cast<int>(hops.size()); }
};

struct CdmParseResult {
    std::vector<conjunction::CdmRecord> records;
    bool tca_out_of_order = false;  // accepted, but worth surfacing
};

// --- epochs ------------------------------------------------------------

/// "2024-03-17T12:00:05.250Z" -> UTC seconds. Fractional seconds optional.
double parse_iso8601(std::string_view text);

/// Inverse of parse_iso8601, millisecond precision, trailing zeros trimmed
/// to whole seconds when exact.
std::string format_iso8601(double epoch_s);

// --- TLE ---------------------------------------------------------------

/// Decodes and checksum-verifies one element set given its two 69-column
/// lines.
TleRecord parse_tle(std::string_view line1, std::string_view line2);

/// Renders a record to the fixed-column two-line format, computing both
/// checksum digits. parse_tle(emit_tle(r)) reproduces r exactly when the
/// record's values carry no more precision than the columns hold.
std::pair<std::string, std::string> emit_tle(const TleRecord& rec);

/// Line checksum: (sum of digits + count of '-') mod 10 over columns 1..68.
int tle_checksum(std::string_view line);

// --- CSV ---------------------------------------------------------------

/*
 * Ephemeris CSV: header sat_id,epoch_iso8601,x_km,y_km,z_km,vx_km_s,
 * vy_km_s,vz_km_s[,cxx,cyy,czz], one record per row. Rows outside the LEO
 * sanity bands (|position| in [6578, 8378] km, |velocity| in [6, 9] km/s)
 * raise a ParseError naming the row.
 */
std::vector<EphemerisRecord> parse_ephemeris(std::istream& stream);
void emit_ephemeris(std::ostream& stream, const std::vector<EphemerisRecord>& records);

/*
 * CDM CSV: header object_a_id,object_b_id,tca_iso8601,pc,miss_distance_km.
 * pc accepts decimal or scientific notation and must lie in [0, 1]. Rows
 * need not be chronological; the result flags out-of-order tca values.
 */
CdmParseResult parse_cdm(std::istream& stream);
void emit_cdm(std::ostream& stream, const std::vector<conjunction::CdmRecord>& records);

// --- analysis pipeline ---------------------------------------------------

/// Vis-viva semi-major axis 1/(2/r - v^2/mu) of one record.
double semi_major_axis(const EphemerisRecord& rec);

/*
 * Flags satellite-epochs where the vis-viva semi-major axis jumps away from
 * its trailing 24-sample rolling median by at least sma_dev_km while a
 * conjunction report with pc at or above pc_threshold involves the satellite
 * within window_s before the epoch. Only the first sample of a deviating
 * stretch is flagged. Series must be time-sorted per satellite.
 */
std::vector<ManeuverDetection> detect_external_maneuvers(
    const std::vector<EphemerisRecord>& records, const std::vector<conjunction::CdmRecord>& cdms,
    double pc_threshold = 1e-5, double sma_dev_km = 1.0, double window_s = 5400.0);

/*
 * Recovers the maneuver-policy sensitivities from a shell-wide trace: per
 * sample and satellite it forms the spacing deviation to the ring leader,
 * the own and leader rate deviations, and a smoothed finite-difference rate
 * derivative, then least-squares fits the linearized policy law
 *   domega_i/dt = a1*dtheta_i - a2*omega_i + a3*omega_leader.
 * Needs a common epoch grid across satellites and enough maneuver-active
 * samples to fix all three parameters.
 */
PolicyEstimate infer_policy(const std::vector<EphemerisRecord>& records,
                            const orbital::EquilibriumState& eq);

/*
 * Walks each seed's follower chain: a hop is appended when the follower's
 * spacing to the current satellite first closes past trigger_threshold_rad
 * and the follower brakes (its smoothed rate derivative swings below zero,
 * or already sits there when its watch opens) and the spacing reopens.
 * Stops when no qualifying follower maneuver occurs within window_s of the
 * previous hop.
 */
std::vector<CascadeChain> extract_cascade_chains(const std::vector<EphemerisRecord>& records,
                                                 const std::vector<ManeuverDetection>& seeds,
                                                 double trigger_threshold_rad,
                                                 double window_s = 20000.0);

/*
 * Maps a phase-tracked cascade run onto a circular one-plane shell:
 * satellite i flies at radius a with phase phase0 - i*spacing + w*t plus its
 * simulated phase deviation, so the synthesized trace embodies exactly the
 * ring dynamics the run produced. The bridge between the simulator and the
 * ingest pipeline used by the inference round trip.
 */
std::vector<EphemerisRecord> synthesize_ephemeris(const sim::SimResult& result,
                                                  const sim::SimConfig& config,
                                                  const orbital::EquilibriumState& eq,
                                                  double epoch0_s = 0.0);

}  // namespace constel::ingest
