#include "constel/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace constel::ingest {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// --- small numeric/text helpers -----------------------------------------

double parse_double_field(std::string_view text, const std::string& what, long row = -1) {
    std::string trimmed;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) trimmed += c;
    if (trimmed.empty()) throw ParseError("empty numeric field: " + what, row);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(trimmed.c_str(), &end);
    if (end != trimmed.c_str() + trimmed.size() || errno == ERANGE)
        throw ParseError("cannot parse " + what + " from '" + trimmed + "'", row);
    return v;
}

long parse_int_field(std::string_view text, const std::string& what, long row = -1) {
    const double v = parse_double_field(text, what, row);
    if (v != std::floor(v)) throw ParseError(what + " must be an integer", row);
    return static_cast<long>(v);
}

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

double vec_norm(const conjunction::Vec3& v) {
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

// Days from 1970-01-01 for a civil date (Gregorian, proleptic).
long long days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const long long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long long>(doe) - 719468;
}

void civil_from_days(long long z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const long long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

}  // namespace

// --- epochs --------------------------------------------------------------

double parse_iso8601(std::string_view text) {
    // YYYY-MM-DDTHH:MM:SS[.fff]Z
    if (text.size() < 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
        text[13] != ':' || text[16] != ':' || text.back() != 'Z')
        throw ParseError("bad ISO-8601 epoch: '" + std::string(text) + "'");
    auto num = [&](int from, int len) {
        int v = 0;
        auto res = std::from_chars(text.data() + from, text.data() + from + len, v);
        if (res.ec != std::errc{} || res.ptr != text.data() + from + len)
            throw ParseError("bad ISO-8601 epoch: '" + std::string(text) + "'");
        return v;
    };
    const int year = num(0, 4);
    const int month = num(5, 2);
    const int day = num(8, 2);
    const int hh = num(11, 2);
    const int mm = num(14, 2);
    const std::string_view sec_text = text.substr(17, text.size() - 18);
    const double ss = parse_double_field(sec_text, "ISO-8601 seconds");
    if (month < 1 || month > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 || ss >= 61.0)
        throw ParseError("out-of-range ISO-8601 component: '" + std::string(text) + "'");
    return static_cast<double>(days_from_civil(year, month, day)) * 86400.0 + hh * 3600.0 +
           mm * 60.0 + ss;
}

std::string format_iso8601(double epoch_s) {
    double day_floor = std::floor(epoch_s / 86400.0);
    double sec_of_day = epoch_s - day_floor * 86400.0;
    // Guard the edge where rounding to milliseconds spills into the next day.
    double ms = std::round(sec_of_day * 1000.0);
    if (ms >= 86400000.0) {
        day_floor += 1.0;
        ms -= 86400000.0;
    }
    int y;
    unsigned mo, d;
    civil_from_days(static_cast<long long>(day_floor), y, mo, d);
    const long msl = static_cast<long>(ms);
    const int hh = static_cast<int>(msl / 3600000);
    const int mi = static_cast<int>((msl / 60000) % 60);
    const int ss = static_cast<int>((msl / 1000) % 60);
    const int frac = static_cast<int>(msl % 1000);
    char buf[40];
    if (frac == 0)
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", y, mo, d, hh, mi, ss);
    else
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", y, mo, d, hh, mi,
                      ss, frac);
    return buf;
}

// --- TLE -----------------------------------------------------------------

int tle_checksum(std::string_view line) {
    int sum = 0;
    const std::size_t upto = std::min<std::size_t>(line.size(), 68);
    for (std::size_t i = 0; i < upto; ++i) {
        const char c = line[i];
        if (c >= '0' && c <= '9') sum += c - '0';
        if (c == '-') sum += 1;
    }
    return sum % 10;
}

double TleRecord::epoch_utc_s() const {
    const int year = epoch_year < 57 ? 2000 + epoch_year : 1900 + epoch_year;
    return static_cast<double>(days_from_civil(year, 1, 1)) * 86400.0 +
           (epoch_day - 1.0) * 86400.0;
}

namespace {

void check_tle_line(std::string_view line, int which) {
    if (line.size() != 69)
        throw ParseError("TLE line " + std::to_string(which) + " must be 69 characters, got " +
                         std::to_string(line.size()));
    const char want = which == 1 ? '1' : '2';
    if (line[0] != want)
        throw ParseError(std::string("TLE line ") + std::to_string(which) +
                         " must start with '" + want + "'");
    const int found = line[68] - '0';
    const int expect = tle_checksum(line);
    if (found != expect)
        throw ParseError("TLE line " + std::to_string(which) + " checksum mismatch: expected " +
                         std::to_string(expect) + ", found " + std::to_string(found));
}

}  // namespace

TleRecord parse_tle(std::string_view line1, std::string_view line2) {
    check_tle_line(line1, 1);
    check_tle_line(line2, 2);

    TleRecord r;
    r.norad_id = static_cast<int>(parse_int_field(line1.substr(2, 5), "satellite number"));
    const int norad2 = static_cast<int>(parse_int_field(line2.substr(2, 5), "satellite number"));
    if (norad2 != r.norad_id)
        throw ParseError("TLE line 2 names satellite " + std::to_string(norad2) +
                         " but line 1 names " + std::to_string(r.norad_id));
    r.epoch_year = static_cast<int>(parse_int_field(line1.substr(18, 2), "epoch year"));
    r.epoch_day = parse_double_field(line1.substr(20, 12), "epoch day");
    r.inclination_deg = parse_double_field(line2.substr(8, 8), "inclination");
    r.raan_deg = parse_double_field(line2.substr(17, 8), "RAAN");
    r.eccentricity =
        static_cast<double>(parse_int_field(line2.substr(26, 7), "eccentricity")) * 1e-7;
    r.arg_perigee_deg = parse_double_field(line2.substr(34, 8), "argument of perigee");
    r.mean_anomaly_deg = parse_double_field(line2.substr(43, 8), "mean anomaly");
    r.mean_motion_rev_day = parse_double_field(line2.substr(52, 11), "mean motion");
    r.line1_checksum = line1[68] - '0';
    r.line2_checksum = line2[68] - '0';
    return r;
}

std::pair<std::string, std::string> emit_tle(const TleRecord& rec) {
    char l1[70];
    char l2[70];
    // Line 1 carries fixed placeholder drag/ephemeris fields; the record
    // does not model them.
    std::snprintf(l1, sizeof l1, "1 %05dU 00000A   %02d%012.8f  .00000000  00000-0  00000-0 0  999",
                  rec.norad_id, rec.epoch_year, rec.epoch_day);
    std::snprintf(l2, sizeof l2, "2 %05d %8.4f %8.4f %07ld %8.4f %8.4f %11.8f    1",
                  rec.norad_id, rec.inclination_deg, rec.raan_deg,
                  std::lround(rec.eccentricity * 1e7), rec.arg_perigee_deg,
                  rec.mean_anomaly_deg, rec.mean_motion_rev_day);
    std::string line1(l1);
    std::string line2(l2);
    line1 += static_cast<char>('0' + tle_checksum(line1));
    line2 += static_cast<char>('0' + tle_checksum(line2));
    return {line1, line2};
}

// --- CSV -----------------------------------------------------------------

namespace {

const std::string kEphemerisHeaderFull =
    "sat_id,epoch_iso8601,x_km,y_km,z_km,vx_km_s,vy_km_s,vz_km_s,cxx,cyy,czz";
const std::string kEphemerisHeaderBare =
    "sat_id,epoch_iso8601,x_km,y_km,z_km,vx_km_s,vy_km_s,vz_km_s";
const std::string kCdmHeader = "object_a_id,object_b_id,tca_iso8601,pc,miss_distance_km";

std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::vector<EphemerisRecord> parse_ephemeris(std::istream& stream) {
    std::string line;
    if (!std::getline(stream, line)) throw ParseError("empty ephemeris stream: header required");
    line = strip_cr(line);
    bool with_cov;
    if (line == kEphemerisHeaderFull)
        with_cov = true;
    else if (line == kEphemerisHeaderBare)
        with_cov = false;
    else
        throw ParseError("unexpected ephemeris header: '" + line + "'");

    std::vector<EphemerisRecord> out;
    long row = 0;
    while (std::getline(stream, line)) {
        line = strip_cr(line);
        ++row;
        if (line.empty()) continue;
        const auto cells = split_csv_row(line);
        const std::size_t expected = with_cov ? 11u : 8u;
        if (cells.size() != expected)
            throw ParseError("ephemeris row has " + std::to_string(cells.size()) +
                                 " cells, expected " + std::to_string(expected),
                             row);
        EphemerisRecord r;
        r.sat_id = cells[0];
        if (r.sat_id.empty()) throw ParseError("empty sat_id", row);
        try {
            r.epoch_s = parse_iso8601(cells[1]);
        } catch (const ParseError& e) {
            throw ParseError(std::string(e.what()), row);
        }
        for (int k = 0; k < 3; ++k)
            r.position_km[k] = parse_double_field(cells[2 + k], "position", row);
        for (int k = 0; k < 3; ++k)
            r.velocity_km_s[k] = parse_double_field(cells[5 + k], "velocity", row);
        if (with_cov && !(cells[8].empty() && cells[9].empty() && cells[10].empty())) {
            conjunction::Vec3 cov{};
            for (int k = 0; k < 3; ++k)
                cov[k] = parse_double_field(cells[8 + k], "covariance", row);
            r.covariance_diag_km2 = cov;
        }
        const double rn = vec_norm(r.position_km);
        const double vn = vec_norm(r.velocity_km_s);
        if (rn < 6578.0 || rn > 8378.0)
            throw ParseError("position magnitude " + std::to_string(rn) +
                                 " km outside the LEO band [6578, 8378]",
                             row);
        if (vn < 6.0 || vn > 9.0)
            throw ParseError("velocity magnitude " + std::to_string(vn) +
                                 " km/s outside the band [6, 9]",
                             row);
        out.push_back(std::move(r));
    }
    return out;
}

void emit_ephemeris(std::ostream& stream, const std::vector<EphemerisRecord>& records) {
    stream << kEphemerisHeaderFull << '\n';
    for (const auto& r : records) {
        stream << r.sat_id << ',' << format_iso8601(r.epoch_s);
        for (double v : r.position_km) stream << ',' << g17(v);
        for (double v : r.velocity_km_s) stream << ',' << g17(v);
        if (r.covariance_diag_km2) {
            for (double v : *r.covariance_diag_km2) stream << ',' << g17(v);
        } else {
            stream << ",,,";
        }
        stream << '\n';
    }
}

CdmParseResult parse_cdm(std::istream& stream) {
    std::string line;
    if (!std::getline(stream, line)) throw ParseError("empty CDM stream: header required");
    if (strip_cr(line) != kCdmHeader)
        throw ParseError("unexpected CDM header: '" + strip_cr(line) + "'");

    CdmParseResult out;
    long row = 0;
    double prev_tca = -HUGE_VAL;
    while (std::getline(stream, line)) {
        line = strip_cr(line);
        ++row;
        if (line.empty()) continue;
        const auto cells = split_csv_row(line);
        if (cells.size() != 5)
            throw ParseError("CDM row has " + std::to_string(cells.size()) + " cells, expected 5",
                             row);
        conjunction::CdmRecord r;
        r.object_a_id = cells[0];
        r.object_b_id = cells[1];
        if (r.object_a_id.empty() || r.object_b_id.empty())
            throw ParseError("empty object id", row);
        try {
            r.tca_s = parse_iso8601(cells[2]);
        } catch (const ParseError& e) {
            throw ParseError(std::string(e.what()), row);
        }
        r.pc = parse_double_field(cells[3], "pc", row);
        if (r.pc < 0.0 || r.pc > 1.0)
            throw ParseError("pc " + std::to_string(r.pc) + " outside [0, 1]", row);
        r.miss_distance_km = parse_double_field(cells[4], "miss distance", row);
        if (r.miss_distance_km < 0.0) throw ParseError("negative miss distance", row);
        if (r.tca_s < prev_tca) out.tca_out_of_order = true;
        prev_tca = r.tca_s;
        out.records.push_back(std::move(r));
    }
    return out;
}

void emit_cdm(std::ostream& stream, const std::vector<conjunction::CdmRecord>& records) {
    stream << kCdmHeader << '\n';
    for (const auto& r : records)
        stream << r.object_a_id << ',' << r.object_b_id << ',' << format_iso8601(r.tca_s) << ','
               << g17(r.pc) << ',' << g17(r.miss_distance_km) << '\n';
}

// --- analysis pipeline -----------------------------------------------------

double semi_major_axis(const EphemerisRecord& rec) {
    const double r = vec_norm(rec.position_km);
    const double v = vec_norm(rec.velocity_km_s);
    const double inv_a = 2.0 / r - v * v / orbital::kMuEarthKm3S2;
    if (inv_a == 0.0) throw std::domain_error("parabolic state has no finite semi-major axis");
    return 1.0 / inv_a;
}

namespace {

// Per-satellite time series extracted from the flat record list.
struct SatSeries {
    std::string sat_id;
    std::vector<double> epoch_s;
    std::vector<double> theta_rad;   // wrapped in-plane phase
    std::vector<double> omega_rad_s; // in-plane angular rate |r x v|/r^2
    std::vector<double> sma_km;
    double mean_phase = 0.0;  // circular mean of theta, for ring ordering
};

std::vector<SatSeries> build_series(const std::vector<EphemerisRecord>& records,
                                    bool require_sorted) {
    std::map<std::string, std::vector<const EphemerisRecord*>> by_sat;
    for (const auto& r : records) by_sat[r.sat_id].push_back(&r);

    std::vector<SatSeries> series;
    for (auto& [id, rows] : by_sat) {
        if (require_sorted) {
            for (std::size_t k = 1; k < rows.size(); ++k)
                if (rows[k]->epoch_s < rows[k - 1]->epoch_s)
                    throw std::invalid_argument("ephemeris series for " + id +
                                                " is not time-sorted");
        } else {
            std::stable_sort(rows.begin(), rows.end(),
                             [](auto* a, auto* b) { return a->epoch_s < b->epoch_s; });
        }
        SatSeries s;
        s.sat_id = id;
        double cs = 0.0, sn = 0.0;
        for (const auto* r : rows) {
            const double theta = std::atan2(r->position_km[1], r->position_km[0]);
            const conjunction::Vec3& p = r->position_km;
            const conjunction::Vec3& v = r->velocity_km_s;
            const double hx = p[1] * v[2] - p[2] * v[1];
            const double hy = p[2] * v[0] - p[0] * v[2];
            const double hz = p[0] * v[1] - p[1] * v[0];
            const double r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
            s.epoch_s.push_back(r->epoch_s);
            s.theta_rad.push_back(theta);
            s.omega_rad_s.push_back(std::sqrt(hx * hx + hy * hy + hz * hz) / r2);
            s.sma_km.push_back(semi_major_axis(*r));
            cs += std::cos(theta);
            sn += std::sin(theta);
        }
        s.mean_phase = std::atan2(sn, cs);
        series.push_back(std::move(s));
    }
    return series;
}

// 5-point Savitzky-Golay first derivative (quadratic fit), the smoothed
// central difference used on rate series. Endpoints reuse the nearest
// interior stencil; callers that care trim them.
std::vector<double> smoothed_derivative(const std::vector<double>& f, double dt) {
    const std::size_t n = f.size();
    std::vector<double> d(n, 0.0);
    if (n < 5) return d;
    for (std::size_t k = 2; k + 2 < n; ++k)
        d[k] = (-2.0 * f[k - 2] - f[k - 1] + f[k + 1] + 2.0 * f[k + 2]) / (10.0 * dt);
    d[0] = d[1] = d[2];
    d[n - 1] = d[n - 2] = d[n - 3];
    return d;
}

double positive_mod_2pi(double x) {
    double m = std::fmod(x, kTwoPi);
    if (m < 0) m += kTwoPi;
    return m;
}

// Ring order: ascending mean phase; the leader of entry j is entry j+1.
std::vector<std::size_t> ring_order(const std::vector<SatSeries>& series) {
    std::vector<std::size_t> order(series.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return series[a].mean_phase < series[b].mean_phase;
    });
    return order;
}

}  // namespace

std::vector<ManeuverDetection> detect_external_maneuvers(
    const std::vector<EphemerisRecord>& records, const std::vector<conjunction::CdmRecord>& cdms,
    double pc_threshold, double sma_dev_km, double window_s) {
    const auto series = build_series(records, /*require_sorted=*/true);

    std::vector<ManeuverDetection> out;
    for (const auto& s : series) {
        constexpr std::size_t kWindow = 24;
        bool prev_deviating = false;
        std::vector<double> scratch;
        for (std::size_t k = 1; k < s.sma_km.size(); ++k) {
            const std::size_t from = k > kWindow ? k - kWindow : 0;
            scratch.assign(s.sma_km.begin() + from, s.sma_km.begin() + k);
            if (scratch.size() < 4) continue;  // too little history to predict
            std::nth_element(scratch.begin(), scratch.begin() + scratch.size() / 2,
                             scratch.end());
            double med = scratch[scratch.size() / 2];
            if (scratch.size() % 2 == 0) {
                const double hi = med;
                std::nth_element(scratch.begin(), scratch.begin() + scratch.size() / 2 - 1,
                                 scratch.end());
                med = 0.5 * (scratch[scratch.size() / 2 - 1] + hi);
            }
            const double jump = s.sma_km[k] - med;
            const bool deviating = std::fabs(jump) >= sma_dev_km;
            if (deviating && !prev_deviating) {
                const double epoch = s.epoch_s[k];
                const bool risky = std::any_of(cdms.begin(), cdms.end(), [&](const auto& c) {
                    return c.pc >= pc_threshold &&
                           (c.object_a_id == s.sat_id || c.object_b_id == s.sat_id) &&
                           c.tca_s <= epoch && c.tca_s >= epoch - window_s;
                });
                if (risky) out.push_back(ManeuverDetection{s.sat_id, epoch, jump});
            }
            prev_deviating = deviating;
        }
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.epoch_s < b.epoch_s; });
    return out;
}

PolicyEstimate infer_policy(const std::vector<EphemerisRecord>& records,
                            const orbital::EquilibriumState& eq) {
    const auto series = build_series(records, /*require_sorted=*/false);
    if (series.size() < 2)
        throw std::invalid_argument("policy inference needs at least two satellites");

    // A common uniform epoch grid keeps the finite differences honest.
    const auto& grid = series.front().epoch_s;
    if (grid.size() < 7)
        throw std::invalid_argument("policy inference needs at least 7 samples per satellite");
    for (const auto& s : series)
        if (s.epoch_s != grid)
            throw std::invalid_argument("satellites must share one epoch grid");
    const double dt = grid[1] - grid[0];
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (std::fabs(grid[k] - grid[k - 1] - dt) > 1e-6 * dt)
            throw std::invalid_argument("epoch grid must be uniform");

    const auto order = ring_order(series);
    const std::size_t n_sats = series.size();
    const std::size_t n_t = grid.size();

    // Regression rows: target omega_dot, regressors (dtheta_dev, -omega_dev,
    // omega_dev of the leader). Columns are rescaled to unit RMS before the
    // normal equations to tame the huge scale spread between the alphas.
    std::vector<std::array<double, 3>> rows;
    std::vector<double> target;
    std::vector<std::size_t> row_sat;
    for (std::size_t j = 0; j < n_sats; ++j) {
        const SatSeries& self = series[order[j]];
        const SatSeries& lead = series[order[(j + 1) % n_sats]];
        std::vector<double> omega_dev(n_t), lead_dev(n_t), dtheta_dev(n_t);
        for (std::size_t k = 0; k < n_t; ++k) {
            omega_dev[k] = self.omega_rad_s[k] - eq.mean_motion_rad_s;
            lead_dev[k] = lead.omega_rad_s[k] - eq.mean_motion_rad_s;
            const double gap = positive_mod_2pi(lead.theta_rad[k] - self.theta_rad[k]);
            dtheta_dev[k] = gap - eq.spacing_rad;
        }
        const auto omega_dot = smoothed_derivative(omega_dev, dt);

        // An impulsive maneuver changes omega across a single step by far
        // more than the neighboring steps. The smoothed derivative is
        // meaningless across such a jump, and a handful of spike targets
        // would dominate the least squares, so rows whose stencil spans a
        // jump are dropped. The 100x local contrast never triggers on a
        // smooth trace, where consecutive steps differ by O(dt) factors.
        std::vector<bool> skip(n_t, false);
        for (std::size_t k = 1; k < n_t; ++k) {
            const double step = std::fabs(omega_dev[k] - omega_dev[k - 1]);
            double nearby = 0.0;
            const std::size_t m_lo = (k >= 3) ? k - 3 : 1;
            const std::size_t m_hi = std::min(n_t - 1, k + 3);
            for (std::size_t m = m_lo; m <= m_hi; ++m) {
                if (m == k) continue;
                nearby = std::max(nearby,
                                  std::fabs(omega_dev[m] - omega_dev[m - 1]));
            }
            if (step > 100.0 * nearby + 1e-15) {
                const std::size_t lo = (k >= 3) ? k - 3 : 0;
                const std::size_t hi = std::min(n_t - 1, k + 2);
                for (std::size_t m = lo; m <= hi; ++m) skip[m] = true;
            }
        }

        for (std::size_t k = 2; k + 2 < n_t; ++k) {
            if (skip[k]) continue;
            rows.push_back({dtheta_dev[k], -omega_dev[k], lead_dev[k]});
            target.push_back(omega_dot[k]);
            row_sat.push_back(j);
        }
    }

    // Count samples that actually carry signal; an all-quiescent trace is
    // rank-deficient no matter how long it is. The floors sit well above the
    // ~1e-15 rad angle noise a km-scale state round trip leaves behind, or a
    // quiescent trace's noise rows would count as signal and the fit would
    // interpolate noise with huge coefficients and a tiny residual.
    long active = 0;
    std::vector<bool> sat_active(n_sats, false);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (std::fabs(rows[r][0]) > 1e-12 || std::fabs(rows[r][1]) > 1e-12 ||
            std::fabs(rows[r][2]) > 1e-12) {
            ++active;
            sat_active[row_sat[r]] = true;
        }
    }
    const long active_sats = std::count(sat_active.begin(), sat_active.end(), true);
    if (active < 10 || active_sats < 2)
        throw std::invalid_argument(
            "policy inference needs at least 10 maneuver-active samples across 2 satellites");

    // Column scaling, then 3x3 normal equations in extended precision.
    double scale[3] = {0.0, 0.0, 0.0};
    for (const auto& r : rows)
        for (int c = 0; c < 3; ++c) scale[c] += r[c] * r[c];
    for (int c = 0; c < 3; ++c) {
        scale[c] = std::sqrt(scale[c] / static_cast<double>(rows.size()));
        if (!(scale[c] > 0.0))
            throw std::invalid_argument("rank-deficient inference design matrix");
    }
    long double ata[3][3] = {};
    long double atb[3] = {};
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const long double x0 = rows[r][0] / scale[0];
        const long double x1 = rows[r][1] / scale[1];
        const long double x2 = rows[r][2] / scale[2];
        const long double y = target[r];
        ata[0][0] += x0 * x0; ata[0][1] += x0 * x1; ata[0][2] += x0 * x2;
        ata[1][1] += x1 * x1; ata[1][2] += x1 * x2; ata[2][2] += x2 * x2;
        atb[0] += x0 * y; atb[1] += x1 * y; atb[2] += x2 * y;
    }
    ata[1][0] = ata[0][1]; ata[2][0] = ata[0][2]; ata[2][1] = ata[1][2];

    // Gaussian elimination with partial pivoting on the 3x3 system.
    int piv[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int best = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(static_cast<double>(ata[piv[r]][col])) >
                std::fabs(static_cast<double>(ata[piv[best]][col])))
                best = r;
        std::swap(piv[col], piv[best]);
        const long double diag = ata[piv[col]][col];
        if (std::fabs(static_cast<double>(diag)) < 1e-13)
            throw std::invalid_argument("rank-deficient inference design matrix");
        for (int r = col + 1; r < 3; ++r) {
            const long double f = ata[piv[r]][col] / diag;
            for (int c = col; c < 3; ++c) ata[piv[r]][c] -= f * ata[piv[col]][c];
            atb[piv[r]] -= f * atb[piv[col]];
        }
    }
    long double beta[3];
    for (int col = 2; col >= 0; --col) {
        long double acc = atb[piv[col]];
        for (int c = col + 1; c < 3; ++c) acc -= ata[piv[col]][c] * beta[c];
        beta[col] = acc / ata[piv[col]][col];
    }

    PolicyEstimate est;
    est.params.alpha1 = static_cast<double>(beta[0]) / scale[0];
    est.params.alpha2 = static_cast<double>(beta[1]) / scale[1];
    est.params.alpha3 = static_cast<double>(beta[2]) / scale[2];
    est.sample_count = static_cast<long>(rows.size());

    long double ss = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const long double fit = static_cast<long double>(est.params.alpha1) * rows[r][0] +
                                static_cast<long double>(est.params.alpha2) * rows[r][1] +
                                static_cast<long double>(est.params.alpha3) * rows[r][2];
        const long double res = target[r] - fit;
        ss += res * res;
    }
    est.residual_rms = std::sqrt(static_cast<double>(ss / static_cast<long double>(rows.size())));
    return est;
}

std::vector<CascadeChain> extract_cascade_chains(const std::vector<EphemerisRecord>& records,
                                                 const std::vector<ManeuverDetection>& seeds,
                                                 double trigger_threshold_rad, double window_s) {
    const auto series = build_series(records, /*require_sorted=*/true);
    const auto order = ring_order(series);
    const std::size_t n_sats = series.size();

    // Position of each satellite in the ring ordering.
    std::map<std::string, std::size_t> ring_pos;
    for (std::size_t j = 0; j < n_sats; ++j) ring_pos[series[order[j]].sat_id] = j;

    std::vector<CascadeChain> chains;
    for (const auto& seed : seeds) {
        CascadeChain chain;
        chain.seed = seed;
        auto it = ring_pos.find(seed.sat_id);
        if (it == ring_pos.end()) {
            chains.push_back(std::move(chain));
            continue;
        }
        std::size_t cur = it->second;
        double t_cur = seed.epoch_s;

        while (true) {
            // Follower: the satellite whose leader is the current one.
            const std::size_t fol = (cur + n_sats - 1) % n_sats;
            const SatSeries& follower = series[order[fol]];
            const SatSeries& current = series[order[cur]];
            if (fol == ring_pos[seed.sat_id] && chain.hop_count() > 0) break;  // wrapped around

            const std::size_t n_t = follower.epoch_s.size();
            if (current.epoch_s.size() != n_t) break;  // mismatched coverage, stop walking

            // Spacing of the follower to the current satellite over time,
            // with its pre-seed median as the baseline.
            std::vector<double> gap(n_t);
            for (std::size_t k = 0; k < n_t; ++k)
                gap[k] = positive_mod_2pi(current.theta_rad[k] - follower.theta_rad[k]);
            std::vector<double> pre;
            for (std::size_t k = 0; k < n_t && follower.epoch_s[k] < seed.epoch_s; ++k)
                pre.push_back(gap[k]);
            if (pre.size() < 3) pre.assign(gap.begin(), gap.begin() + std::min<std::size_t>(8, n_t));
            std::sort(pre.begin(), pre.end());
            const double baseline = pre[pre.size() / 2];

            // First closing past the threshold after the previous hop.
            std::size_t k_close = n_t;
            for (std::size_t k = 0; k < n_t; ++k) {
                if (follower.epoch_s[k] <= t_cur) continue;
                if (follower.epoch_s[k] > t_cur + window_s) break;
                if (gap[k] - baseline <= -trigger_threshold_rad) {
                    k_close = k;
                    break;
                }
            }
            if (k_close == n_t) break;

            // Deceleration onset: smoothed rate derivative swings negative. A
            // follower already braking when its watch opens counts too: the
            // policy reacts to the leader's rate instantly, so the sampled
            // series may never show the positive side of the swing.
            const double dt = n_t > 1 ? follower.epoch_s[1] - follower.epoch_s[0] : 1.0;
            const auto omega_dot = smoothed_derivative(follower.omega_rad_s, dt);
            double floor = 0.0;
            for (double v : omega_dot) floor = std::max(floor, std::fabs(v));
            floor *= 1e-3;
            std::size_t k_dec = n_t;
            bool scanned = false;
            for (std::size_t k = 1; k < n_t; ++k) {
                if (follower.epoch_s[k] <= t_cur) continue;
                if (follower.epoch_s[k] > follower.epoch_s[k_close] + window_s) break;
                if (omega_dot[k] <= -floor && (!scanned || omega_dot[k - 1] > -floor)) {
                    k_dec = k;
                    break;
                }
                scanned = true;
            }
            if (k_dec == n_t) break;

            // The gap must reopen after the brake for the hop to count.
            double tightest = gap[k_close];
            std::size_t k_tight = k_close;
            for (std::size_t k = k_close; k < n_t && follower.epoch_s[k] <=
                                                         follower.epoch_s[k_dec] + window_s;
                 ++k)
                if (gap[k] < tightest) {
                    tightest = gap[k];
                    k_tight = k;
                }
            double reopened = tightest;
            for (std::size_t k = k_tight; k < n_t && follower.epoch_s[k] <=
                                                         follower.epoch_s[k_tight] + window_s;
                 ++k)
                reopened = std::max(reopened, gap[k]);
            if (reopened <= tightest) break;

            ChainHop hop;
            hop.sat_id = follower.sat_id;
            hop.epoch_s = follower.epoch_s[k_dec];
            hop.dtheta_before_rad = tightest;
            hop.dtheta_after_rad = reopened;
            chain.hops.push_back(hop);
            cur = fol;
            t_cur = hop.epoch_s;
        }
        chains.push_back(std::move(chain));
    }
    return chains;
}

std::vector<EphemerisRecord> synthesize_ephemeris(const sim::SimResult& result,
                                                  const sim::SimConfig& config,
                                                  const orbital::EquilibriumState& eq,
                                                  double epoch0_s) {
    if (result.phase_samples.size() != result.samples.size())
        throw std::invalid_argument("synthesize_ephemeris needs a phase-tracked run "
                                    "(set track_phase in the simulator config)");
    const double a_km = orbital::kEarthRadiusKm + config.altitude_km;
    const int n = config.n;

    std::vector<EphemerisRecord> out;
    out.reserve(result.samples.size() * static_cast<std::size_t>(n));
    char id[16];
    for (std::size_t s = 0; s < result.samples.size(); ++s) {
        const auto& state = result.samples[s];
        const auto& phases = result.phase_samples[s];
        for (int i = 0; i < n; ++i) {
            // Ring index i trails index i-1: equilibrium phase decreases
            // with i so that each satellite's leader sits ahead of it.
            const double theta = -i * eq.spacing_rad + eq.mean_motion_rad_s * state.time_s +
                                 phases[static_cast<std::size_t>(i)];
            const double omega = eq.mean_motion_rad_s + state.omega_dev[static_cast<std::size_t>(i)];
            std::snprintf(id, sizeof id, "SAT-%03d", i);
            EphemerisRecord r;
            r.sat_id = id;
            r.epoch_s = epoch0_s + state.time_s;
            r.position_km = {a_km * std::cos(theta), a_km * std::sin(theta), 0.0};
            r.velocity_km_s = {-a_km * omega * std::sin(theta), a_km * omega * std::cos(theta),
                               0.0};
            out.push_back(std::move(r));
        }
    }
    return out;
}

}  // namespace constel::ingest
