// constel: command-line front end tying the analysis library together.
//
// Subcommands: stability, pc, simulate, sweep, infer, chains, lifetime,
// capacity. Every run is deterministic given its flags (and seed, where a
// seed applies); all floating-point output carries 9 significant digits so
// repeated runs are byte-identical. Options may come from an INI config
// file (--config, one section per subcommand); explicit flags win.
//
// Exit codes: 0 success, 1 usage or input error, 2 analysis-negative
// verdict (only `stability` on an unstable triple).

#include "CLI11.hpp"
#include "json.hpp"

#include "constel/conjunction.hpp"
#include "constel/ingest.hpp"
#include "constel/orbital.hpp"
#include "constel/simulator.hpp"
#include "constel/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

using ojson = nlohmann::ordered_json;

namespace conj = constel::conjunction;
namespace ing = constel::ingest;
namespace orb = constel::orbital;
namespace sim = constel::sim;
namespace stab = constel::stability;

// Documented default for every option that seeds a random number generator.
constexpr std::uint64_t kDefaultSeed = 1729;

// Rounds through the printed form so a value computed here and the value a
// reader parses back are the same double.
double sig9(double v) {
    if (!std::isfinite(v)) return v;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::strtod(buf, nullptr);
}

std::string fmt9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

// JSON has no inf/nan literals; non-finite values become null.
ojson jnum(double v) {
    if (!std::isfinite(v)) return nullptr;
    return sig9(v);
}

void write_text(const std::string& path, const std::string& body) {
    if (path.empty() || path == "-") {
        std::cout << body;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << body;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string dump_json(const ojson& j) { return j.dump(2) + "\n"; }

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open input file: " + path);
    return in;
}

// --- stability -----------------------------------------------------------

struct StabilityOpts {
    double alpha1 = 0.0, alpha2 = 0.0, alpha3 = 0.0;
    int n = 0;  // 0 = no per-ring eigenvalue check
    std::string output;
};

int run_stability(const StabilityOpts& o) {
    const stab::PolicyParams p{o.alpha1, o.alpha2, o.alpha3};
    const stab::StabilityVerdict v = stab::stability_verdict(p);

    ojson j;
    j["alpha1"] = jnum(p.alpha1);
    j["alpha2"] = jnum(p.alpha2);
    j["alpha3"] = jnum(p.alpha3);
    j["margin"] = jnum(v.margin);
    j["stable"] = v.stable;
    j["sup_gain"] = jnum(stab::sup_imag_axis_gain(p));
    if (o.n > 0) {
        j["n"] = o.n;
        j["max_real_part"] = jnum(stab::max_real_part(p, o.n));
    }
    write_text(o.output, dump_json(j));
    return v.stable ? 0 : 2;
}

// --- pc --------------------------------------------------------------------

struct PcOpts {
    double miss_x = 0.0, miss_y = 0.0;
    double sigma_x = 0.0, sigma_y = 0.0;
    double radius = 0.0;
    double rel_tol = 1e-9;
    std::string cdm_path;
    std::uint64_t mc_samples = 0;
    std::uint64_t seed = kDefaultSeed;
    std::string output;
};

int run_pc(const PcOpts& o) {
    if (!o.cdm_path.empty()) {
        // A conjunction report carries only the scalar miss distance, so the
        // recomputation places it along the first principal axis of the
        // covariance the caller supplies.
        std::ifstream in = open_input(o.cdm_path);
        const ing::CdmParseResult parsed = ing::parse_cdm(in);

        ojson rows = ojson::array();
        for (const conj::CdmRecord& rec : parsed.records) {
            conj::ConjunctionGeometry g;
            g.miss_x_km = rec.miss_distance_km;
            g.miss_y_km = 0.0;
            g.sigma_x_km = o.sigma_x;
            g.sigma_y_km = o.sigma_y;
            g.combined_radius_km = o.radius;
            const double pc = conj::collision_probability(g, o.rel_tol);
            ojson row;
            row["object_a_id"] = rec.object_a_id;
            row["object_b_id"] = rec.object_b_id;
            row["tca"] = ing::format_iso8601(rec.tca_s);
            row["miss_distance_km"] = jnum(rec.miss_distance_km);
            row["stated_pc"] = jnum(rec.pc);
            row["recomputed_pc"] = jnum(pc);
            row["abs_diff"] = jnum(std::fabs(pc - rec.pc));
            rows.push_back(std::move(row));
        }
        ojson j;
        j["sigma_x_km"] = jnum(o.sigma_x);
        j["sigma_y_km"] = jnum(o.sigma_y);
        j["combined_radius_km"] = jnum(o.radius);
        j["tca_out_of_order"] = parsed.tca_out_of_order;
        j["rows"] = std::move(rows);
        write_text(o.output, dump_json(j));
        return 0;
    }

    conj::ConjunctionGeometry g;
    g.miss_x_km = o.miss_x;
    g.miss_y_km = o.miss_y;
    g.sigma_x_km = o.sigma_x;
    g.sigma_y_km = o.sigma_y;
    g.combined_radius_km = o.radius;

    ojson j;
    j["geometry"] = {{"miss_x_km", jnum(g.miss_x_km)},
                     {"miss_y_km", jnum(g.miss_y_km)},
                     {"sigma_x_km", jnum(g.sigma_x_km)},
                     {"sigma_y_km", jnum(g.sigma_y_km)},
                     {"combined_radius_km", jnum(g.combined_radius_km)}};
    j["rel_tol"] = jnum(o.rel_tol);
    j["pc"] = jnum(conj::collision_probability(g, o.rel_tol));
    if (o.mc_samples > 0) {
        const conj::McEstimate mc = conj::pc_monte_carlo(g, o.mc_samples, o.seed);
        j["monte_carlo"] = {{"pc", jnum(mc.pc)},
                            {"std_error", jnum(mc.std_error)},
                            {"samples", o.mc_samples},
                            {"seed", o.seed}};
    }
    write_text(o.output, dump_json(j));
    return 0;
}

// --- simulate ----------------------------------------------------------------

struct SimulateOpts {
    int n = 32;
    std::string policy = "pairwise";
    double alpha1 = 0.0, alpha2 = 0.0, alpha3 = 0.0;
    double dt = 1.0;
    double duration = 10000.0;
    double threshold = 0.0;
    double decouple_km = 1.0;
    double altitude_km = 550.0;
    double impulse = 0.0;
    int impulse_sat = 0;
    double impulse_time = 0.0;
    int stride = 1;
    bool track_phase = false;
    bool paired = false;
    std::string epoch0 = "2000-01-01T00:00:00Z";
    std::string summary_out;
    std::string trajectory_out;
    std::string ephemeris_out;
};

sim::PolicyKind parse_policy(const std::string& name) {
    if (name == "pairwise") return sim::PolicyKind::pairwise;
    if (name == "bilateral") return sim::PolicyKind::bilateral;
    throw std::domain_error("policy must be pairwise or bilateral, got " + name);
}

const char* policy_name(sim::PolicyKind k) {
    return k == sim::PolicyKind::pairwise ? "pairwise" : "bilateral";
}

const char* termination_name(sim::Termination t) {
    switch (t) {
        case sim::Termination::duration: return "duration";
        case sim::Termination::decoupling: return "decoupling";
        case sim::Termination::quiescence: return "quiescence";
    }
    return "duration";
}

sim::SimConfig build_sim_config(const SimulateOpts& o, sim::PolicyKind kind) {
    sim::SimConfig c;
    c.n = o.n;
    c.policy = kind;
    c.params = stab::PolicyParams{o.alpha1, o.alpha2, o.alpha3};
    c.dt_s = o.dt;
    c.duration_s = o.duration;
    c.trigger_threshold_rad = o.threshold;
    c.decouple_altitude_km = o.decouple_km;
    c.altitude_km = o.altitude_km;
    c.perturbation = sim::Perturbation{o.impulse_sat, o.impulse, o.impulse_time};
    c.record_stride = o.stride;
    c.track_phase = o.track_phase || !o.ephemeris_out.empty();
    return c;
}

ojson summarize_run(const sim::SimConfig& c, const sim::SimResult& r) {
    int external = 0, cascaded = 0;
    for (const sim::ManeuverEvent& e : r.events)
        (e.cause == sim::EventCause::external ? external : cascaded) += 1;

    double peak = 0.0;
    for (const orb::RingState& s : r.samples)
        for (double d : s.dtheta_dev) peak = std::max(peak, std::fabs(d));

    ojson events = ojson::array();
    for (const sim::ManeuverEvent& e : r.events) {
        events.push_back({{"sat_index", e.sat_index},
                          {"time_s", jnum(e.time_s)},
                          {"impulse_rad_s", jnum(e.impulse_rad_s)},
                          {"cause", e.cause == sim::EventCause::external ? "external" : "cascaded"}});
    }

    ojson j;
    j["policy"] = policy_name(c.policy);
    j["n"] = c.n;
    j["alpha1"] = jnum(c.params.alpha1);
    j["alpha2"] = jnum(c.params.alpha2);
    j["alpha3"] = jnum(c.params.alpha3);
    j["dt_s"] = jnum(c.dt_s);
    j["duration_s"] = jnum(c.duration_s);
    j["trigger_threshold_rad"] = jnum(c.trigger_threshold_rad);
    j["decouple_altitude_km"] = jnum(c.decouple_altitude_km);
    j["altitude_km"] = jnum(c.altitude_km);
    j["impulse_rad_s"] = jnum(c.perturbation.impulse_rad_s);
    j["impulse_sat"] = c.perturbation.sat_index;
    j["impulse_time_s"] = jnum(c.perturbation.start_time_s);
    j["samples"] = static_cast<long>(r.samples.size());
    j["final_time_s"] = jnum(r.samples.empty() ? 0.0 : r.samples.back().time_s);
    j["external_events"] = external;
    j["cascaded_events"] = cascaded;
    j["chain_hops"] = r.chain_hops;
    j["amplification_factor"] = jnum(r.amplification_factor);
    j["terminated_by"] = termination_name(r.terminated_by);
    j["blew_up"] = r.blew_up;
    j["peak_dtheta_rad"] = jnum(peak);
    j["events"] = std::move(events);
    return j;
}

std::string trajectory_csv(const sim::SimConfig& c, const sim::SimResult& r) {
    std::ostringstream out;
    out << "time_s";
    for (int i = 0; i < c.n; ++i) out << ",dtheta_" << i;
    for (int i = 0; i < c.n; ++i) out << ",omega_" << i;
    const bool phases = !r.phase_samples.empty();
    if (phases)
        for (int i = 0; i < c.n; ++i) out << ",phase_" << i;
    out << "\n";
    for (std::size_t k = 0; k < r.samples.size(); ++k) {
        const orb::RingState& s = r.samples[k];
        out << fmt9(s.time_s);
        for (double v : s.dtheta_dev) out << ',' << fmt9(v);
        for (double v : s.omega_dev) out << ',' << fmt9(v);
        if (phases)
            for (double v : r.phase_samples[k]) out << ',' << fmt9(v);
        out << "\n";
    }
    return out.str();
}

int run_simulate(const SimulateOpts& o) {
    const sim::PolicyKind primary = parse_policy(o.policy);

    if (!o.paired) {
        const sim::SimConfig c = build_sim_config(o, primary);
        const sim::SimResult r = sim::run_cascade(c);
        if (!o.trajectory_out.empty()) write_text(o.trajectory_out, trajectory_csv(c, r));
        if (!o.ephemeris_out.empty()) {
            orb::ShellConfig shell;
            shell.num_orbits = 1;
            shell.sats_per_orbit = c.n;
            shell.altitude_km = c.altitude_km;
            const auto eph =
                ing::synthesize_ephemeris(r, c, orb::equilibrium(shell), ing::parse_iso8601(o.epoch0));
            std::ostringstream buf;
            ing::emit_ephemeris(buf, eph);
            write_text(o.ephemeris_out, buf.str());
        }
        write_text(o.summary_out, dump_json(summarize_run(c, r)));
        return 0;
    }

    // Paired mode: identical scenario under both policies, whichever order;
    // the trajectory and ephemeris outputs follow the --policy run.
    const sim::SimConfig cp = build_sim_config(o, sim::PolicyKind::pairwise);
    const sim::SimConfig cb = build_sim_config(o, sim::PolicyKind::bilateral);
    const sim::SimResult rp = sim::run_cascade(cp);
    const sim::SimResult rb = sim::run_cascade(cb);

    const sim::SimConfig& csel = primary == sim::PolicyKind::pairwise ? cp : cb;
    const sim::SimResult& rsel = primary == sim::PolicyKind::pairwise ? rp : rb;
    if (!o.trajectory_out.empty()) write_text(o.trajectory_out, trajectory_csv(csel, rsel));
    if (!o.ephemeris_out.empty()) {
        orb::ShellConfig shell;
        shell.num_orbits = 1;
        shell.sats_per_orbit = csel.n;
        shell.altitude_km = csel.altitude_km;
        const auto eph = ing::synthesize_ephemeris(rsel, csel, orb::equilibrium(shell),
                                                   ing::parse_iso8601(o.epoch0));
        std::ostringstream buf;
        ing::emit_ephemeris(buf, eph);
        write_text(o.ephemeris_out, buf.str());
    }

    ojson cmp;
    cmp["pairwise_amplification"] = jnum(rp.amplification_factor);
    cmp["bilateral_amplification"] = jnum(rb.amplification_factor);
    cmp["amplification_ratio"] = rb.amplification_factor > 0.0
                                     ? jnum(rp.amplification_factor / rb.amplification_factor)
                                     : ojson(nullptr);
    cmp["bilateral_not_worse"] = rb.amplification_factor <= rp.amplification_factor;

    ojson j;
    j["pairwise"] = summarize_run(cp, rp);
    j["bilateral"] = summarize_run(cb, rb);
    j["comparison"] = std::move(cmp);
    write_text(o.summary_out, dump_json(j));
    return 0;
}

// --- sweep ---------------------------------------------------------------

struct SweepOpts {
    double alpha2 = 0.0;
    double a1_min = 0.0, a1_max = 0.0;
    int a1_steps = 1;
    double a3_min = 0.0, a3_max = 0.0;
    int a3_steps = 1;
    int n = 64;
    double c_max = 0.0;
    double phase_factor = 1.0;
    double per_sat_gbps = 20.0;
    double t0 = 1.0;
    std::string output;
};

double grid_value(double lo, double hi, int steps, int idx) {
    if (steps == 1) return lo;
    return lo + (hi - lo) * static_cast<double>(idx) / static_cast<double>(steps - 1);
}

int run_sweep(const SweepOpts& o) {
    if (o.a1_steps < 1 || o.a3_steps < 1) throw std::domain_error("step counts must be at least 1");
    if (!(o.a1_min > 0.0)) throw std::domain_error("alpha1 grid must stay positive");
    if (!(o.a3_min > 0.0)) throw std::domain_error("alpha3 grid must stay positive");
    if (!(std::max(o.a3_min, o.a3_max) < o.alpha2))
        throw std::domain_error("alpha3 grid must stay below alpha2");

    std::ostringstream out;
    out << "alpha1,alpha2,alpha3,margin,stable,sup_gain,dtheta_safe_rad,max_sats,"
           "max_capacity_gbps,blowup_horizon_s\n";
    for (int i = 0; i < o.a1_steps; ++i) {
        const double a1 = grid_value(o.a1_min, o.a1_max, o.a1_steps, i);
        for (int k = 0; k < o.a3_steps; ++k) {
            const double a3 = grid_value(o.a3_min, o.a3_max, o.a3_steps, k);
            const stab::PolicyParams p{a1, o.alpha2, a3};
            const stab::StabilityVerdict v = stab::stability_verdict(p);
            const double gain = stab::sup_imag_axis_gain(p);
            out << fmt9(a1) << ',' << fmt9(o.alpha2) << ',' << fmt9(a3) << ',' << fmt9(v.margin)
                << ',' << (v.stable ? "true" : "false") << ',' << fmt9(gain) << ',';
            // Safe spacing and capacity exist only for stable cells, the
            // blow-up horizon only for amplifying ones; the rest stay empty.
            if (v.stable) {
                const double safe = stab::safe_distance_bound(p, o.c_max, o.n);
                const stab::CapacityBound cap =
                    stab::capacity_bound(safe, o.phase_factor, o.per_sat_gbps);
                out << fmt9(safe) << ',' << cap.max_sats << ',' << fmt9(cap.max_capacity_gbps)
                    << ',';
            } else {
                out << ",,,";
            }
            if (gain > 1.0) out << fmt9(stab::blowup_horizon(gain, o.t0));
            out << "\n";
        }
    }
    write_text(o.output, out.str());
    return 0;
}

// --- infer -----------------------------------------------------------------

struct InferOpts {
    std::string ephemeris_path;
    int sats_per_orbit = 0;
    int num_orbits = 1;
    double altitude_km = 550.0;
    int phase_factor = 0;
    std::string output;
};

int run_infer(const InferOpts& o) {
    orb::ShellConfig shell;
    shell.num_orbits = o.num_orbits;
    shell.sats_per_orbit = o.sats_per_orbit;
    shell.altitude_km = o.altitude_km;
    shell.phase_factor_f = o.phase_factor;
    const orb::EquilibriumState eq = orb::equilibrium(shell);

    std::ifstream in = open_input(o.ephemeris_path);
    const auto records = ing::parse_ephemeris(in);
    const ing::PolicyEstimate est = ing::infer_policy(records, eq);

    // Margin and verdict are arithmetic on the estimates; no positivity
    // screening, the caller sees exactly what the fit produced.
    const double margin = est.params.alpha2 * est.params.alpha2 -
                          est.params.alpha3 * est.params.alpha3 - 2.0 * est.params.alpha1;

    ojson j;
    j["alpha1"] = jnum(est.params.alpha1);
    j["alpha2"] = jnum(est.params.alpha2);
    j["alpha3"] = jnum(est.params.alpha3);
    j["residual_rms_rad_s2"] = jnum(est.residual_rms);
    j["sample_count"] = est.sample_count;
    j["margin"] = jnum(margin);
    j["stable"] = margin >= 0.0;
    write_text(o.output, dump_json(j));
    return 0;
}

// --- chains -----------------------------------------------------------------

struct ChainsOpts {
    std::string ephemeris_path;
    std::string cdm_path;
    double pc_threshold = 1e-5;
    double sma_dev_km = 1.0;
    double detect_window_s = 5400.0;
    double threshold = 0.0;
    double chain_window_s = 20000.0;
    std::string output;
};

int run_chains(const ChainsOpts& o) {
    std::ifstream eph_in = open_input(o.ephemeris_path);
    const auto records = ing::parse_ephemeris(eph_in);
    std::ifstream cdm_in = open_input(o.cdm_path);
    const ing::CdmParseResult cdms = ing::parse_cdm(cdm_in);

    const auto seeds = ing::detect_external_maneuvers(records, cdms.records, o.pc_threshold,
                                                      o.sma_dev_km, o.detect_window_s);
    const auto chains = ing::extract_cascade_chains(records, seeds, o.threshold, o.chain_window_s);

    ojson jchains = ojson::array();
    for (const ing::CascadeChain& c : chains) {
        ojson hops = ojson::array();
        for (const ing::ChainHop& h : c.hops) {
            hops.push_back({{"sat_id", h.sat_id},
                            {"epoch", ing::format_iso8601(h.epoch_s)},
                            {"epoch_s", jnum(h.epoch_s)},
                            {"dtheta_before_rad", jnum(h.dtheta_before_rad)},
                            {"dtheta_after_rad", jnum(h.dtheta_after_rad)}});
        }
        jchains.push_back({{"seed",
                            {{"sat_id", c.seed.sat_id},
                             {"epoch", ing::format_iso8601(c.seed.epoch_s)},
                             {"epoch_s", jnum(c.seed.epoch_s)},
                             {"sma_jump_km", jnum(c.seed.sma_jump_km)}}},
                           {"hop_count", c.hop_count()},
                           {"hops", std::move(hops)}});
    }

    ojson j;
    j["seed_count"] = static_cast<long>(seeds.size());
    j["tca_out_of_order"] = cdms.tca_out_of_order;
    j["chains"] = std::move(jchains);
    write_text(o.output, dump_json(j));
    return 0;
}

// --- lifetime / capacity --------------------------------------------------

struct LifetimeOpts {
    double h = 0.0;
    double t0 = 1.0;
    int n_maneuvers = 0;  // 0 = not requested
    double t = -1.0;      // negative = not requested
    bool at_unity = false;
    std::string output;
};

int run_lifetime(const LifetimeOpts& o) {
    ojson j;
    j["h"] = jnum(o.h);
    j["t0_s"] = jnum(o.t0);
    if (o.n_maneuvers > 0) {
        j["n_maneuvers"] = o.n_maneuvers;
        j["time_of_nth_s"] = jnum(stab::lifetime_time_of_nth(o.h, o.t0, o.n_maneuvers, o.at_unity));
    }
    if (o.t >= 0.0) {
        j["t_s"] = jnum(o.t);
        if (o.at_unity && o.h == 1.0) {
            // Linear growth: one maneuver per interval t0, no horizon.
            if (!(o.t0 > 0.0)) throw std::domain_error("t0 must be positive");
            j["maneuver_count"] = jnum(o.t / o.t0);
        } else {
            j["maneuver_count"] = jnum(stab::maneuver_count(o.h, o.t0, o.t));
        }
    }
    j["horizon_s"] = o.h > 1.0 ? jnum(stab::blowup_horizon(o.h, o.t0)) : ojson(nullptr);
    write_text(o.output, dump_json(j));
    return 0;
}

struct CapacityOpts {
    double dtheta_safe = 0.0;
    double phase_factor = 1.0;
    double per_sat_gbps = 20.0;
    std::string output;
};

int run_capacity(const CapacityOpts& o) {
    const stab::CapacityBound cap =
        stab::capacity_bound(o.dtheta_safe, o.phase_factor, o.per_sat_gbps);
    ojson j;
    j["dtheta_safe_rad"] = jnum(o.dtheta_safe);
    j["phase_factor"] = jnum(o.phase_factor);
    j["per_sat_gbps"] = jnum(o.per_sat_gbps);
    j["max_sats"] = cap.max_sats;
    j["max_capacity_gbps"] = jnum(cap.max_capacity_gbps);
    write_text(o.output, dump_json(j));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cascaded collision-avoidance analysis for LEO constellations"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "INI config file, one section per subcommand; explicit flags override it");

    int rc = 0;

    StabilityOpts st;
    CLI::App* c_st = app.add_subcommand("stability", "policy stability verdict and margin");
    c_st->add_option("--alpha1", st.alpha1, "spacing sensitivity (1/s^2)")->required();
    c_st->add_option("--alpha2", st.alpha2, "own-rate sensitivity (1/s)")->required();
    c_st->add_option("--alpha3", st.alpha3, "leader-rate sensitivity (1/s)")->required();
    c_st->add_option("--n", st.n, "also report the max eigenvalue real part on an n-ring")
        ->check(CLI::Range(2, 1 << 20));
    c_st->add_option("-o,--output", st.output, "write JSON here instead of stdout");
    c_st->callback([&] { rc = run_stability(st); });

    PcOpts pc;
    CLI::App* c_pc = app.add_subcommand("pc", "collision probability of a conjunction");
    c_pc->add_option("--miss-x", pc.miss_x, "miss component on the first principal axis (km)");
    c_pc->add_option("--miss-y", pc.miss_y, "miss component on the second principal axis (km)");
    c_pc->add_option("--sigma-x", pc.sigma_x, "first principal sigma (km)")->required();
    c_pc->add_option("--sigma-y", pc.sigma_y, "second principal sigma (km)")->required();
    c_pc->add_option("--radius", pc.radius, "combined hard-body radius (km)")->required();
    c_pc->add_option("--rel-tol", pc.rel_tol, "quadrature relative tolerance")
        ->capture_default_str();
    c_pc->add_option("--cdm", pc.cdm_path,
                     "CDM CSV to recompute row by row (miss distance placed on the x axis)")
        ->check(CLI::ExistingFile);
    c_pc->add_option("--mc-samples", pc.mc_samples,
                     "also run a Monte-Carlo cross-check with this many samples");
    c_pc->add_option("--seed", pc.seed, "Monte-Carlo seed")->capture_default_str();
    c_pc->add_option("-o,--output", pc.output, "write JSON here instead of stdout");
    c_pc->callback([&] { rc = run_pc(pc); });

    SimulateOpts si;
    CLI::App* c_si = app.add_subcommand("simulate", "cascade run under one or both policies");
    c_si->add_option("--n", si.n, "ring size")->capture_default_str();
    c_si->add_option("--policy", si.policy, "pairwise or bilateral")
        ->check(CLI::IsMember({"pairwise", "bilateral"}))
        ->capture_default_str();
    c_si->add_option("--alpha1", si.alpha1, "spacing sensitivity (1/s^2)")->required();
    c_si->add_option("--alpha2", si.alpha2, "own-rate sensitivity (1/s)")->required();
    c_si->add_option("--alpha3", si.alpha3, "leader-rate sensitivity (1/s)")->required();
    c_si->add_option("--dt", si.dt, "integrator step (s)")->capture_default_str();
    c_si->add_option("--duration", si.duration, "run length (s)")->capture_default_str();
    c_si->add_option("--threshold", si.threshold, "maneuver trigger threshold (rad)")->required();
    c_si->add_option("--decouple-km", si.decouple_km, "altitude offset that ends the cascade (km)")
        ->capture_default_str();
    c_si->add_option("--altitude-km", si.altitude_km, "shell altitude (km)")->capture_default_str();
    c_si->add_option("--impulse", si.impulse, "injected rate impulse (rad/s)")->required();
    c_si->add_option("--impulse-sat", si.impulse_sat, "satellite receiving the impulse")
        ->capture_default_str();
    c_si->add_option("--impulse-time", si.impulse_time, "impulse time (s)")->capture_default_str();
    c_si->add_option("--stride", si.stride, "record every k-th step")->capture_default_str();
    c_si->add_flag("--track-phase", si.track_phase, "record per-satellite phase deviations");
    c_si->add_flag("--paired", si.paired, "run both policies and emit a comparison block");
    c_si->add_option("--epoch0", si.epoch0, "ISO-8601 epoch of t=0 for --ephemeris-out")
        ->capture_default_str();
    c_si->add_option("--summary-out", si.summary_out, "write the JSON summary here");
    c_si->add_option("--trajectory-out", si.trajectory_out, "write the trajectory CSV here");
    c_si->add_option("--ephemeris-out", si.ephemeris_out,
                     "synthesize an ephemeris CSV of the run (implies --track-phase)");
    c_si->callback([&] { rc = run_simulate(si); });

    SweepOpts sw;
    CLI::App* c_sw = app.add_subcommand("sweep", "grid sweep over alpha1 and alpha3");
    c_sw->add_option("--alpha2", sw.alpha2, "fixed own-rate sensitivity (1/s)")->required();
    c_sw->add_option("--alpha1-min", sw.a1_min, "alpha1 grid start")->required();
    c_sw->add_option("--alpha1-max", sw.a1_max, "alpha1 grid end")->required();
    c_sw->add_option("--alpha1-steps", sw.a1_steps, "alpha1 grid points")->required();
    c_sw->add_option("--alpha3-min", sw.a3_min, "alpha3 grid start")->required();
    c_sw->add_option("--alpha3-max", sw.a3_max, "alpha3 grid end")->required();
    c_sw->add_option("--alpha3-steps", sw.a3_steps, "alpha3 grid points")->required();
    c_sw->add_option("--n", sw.n, "ring size for the safe-spacing bound")->capture_default_str();
    c_sw->add_option("--c-max", sw.c_max, "worst-case rate deviation amplitude (rad/s)")
        ->required();
    c_sw->add_option("--phase-factor", sw.phase_factor, "Walker phase factor for capacity")
        ->capture_default_str();
    c_sw->add_option("--per-sat-gbps", sw.per_sat_gbps, "per-satellite capacity (Gbps)")
        ->capture_default_str();
    c_sw->add_option("--t0", sw.t0, "first maneuver-interval scale for the horizon (s)")
        ->capture_default_str();
    c_sw->add_option("-o,--output", sw.output, "write CSV here instead of stdout");
    c_sw->callback([&] { rc = run_sweep(sw); });

    InferOpts inf;
    CLI::App* c_inf = app.add_subcommand("infer", "recover policy parameters from an ephemeris");
    c_inf->add_option("--ephemeris", inf.ephemeris_path, "ephemeris CSV path")
        ->required()
        ->check(CLI::ExistingFile);
    c_inf->add_option("--sats-per-orbit", inf.sats_per_orbit, "satellites per orbit")->required();
    c_inf->add_option("--num-orbits", inf.num_orbits, "orbit planes")->capture_default_str();
    c_inf->add_option("--altitude-km", inf.altitude_km, "shell altitude (km)")
        ->capture_default_str();
    c_inf->add_option("--phase-factor", inf.phase_factor, "Walker phase factor")
        ->capture_default_str();
    c_inf->add_option("-o,--output", inf.output, "write JSON here instead of stdout");
    c_inf->callback([&] { rc = run_infer(inf); });

    ChainsOpts ch;
    CLI::App* c_ch = app.add_subcommand("chains", "extract cascade chains from traces and CDMs");
    c_ch->add_option("--ephemeris", ch.ephemeris_path, "ephemeris CSV path")
        ->required()
        ->check(CLI::ExistingFile);
    c_ch->add_option("--cdm", ch.cdm_path, "CDM CSV path")->required()->check(CLI::ExistingFile);
    c_ch->add_option("--pc-threshold", ch.pc_threshold, "seed detection pc floor")
        ->capture_default_str();
    c_ch->add_option("--sma-dev-km", ch.sma_dev_km, "seed detection SMA jump floor (km)")
        ->capture_default_str();
    c_ch->add_option("--detect-window-s", ch.detect_window_s,
                     "CDM lookback window for seed detection (s)")
        ->capture_default_str();
    c_ch->add_option("--threshold", ch.threshold, "spacing-closure trigger threshold (rad)")
        ->required();
    c_ch->add_option("--chain-window-s", ch.chain_window_s, "max hop-to-hop delay (s)")
        ->capture_default_str();
    c_ch->add_option("-o,--output", ch.output, "write JSON here instead of stdout");
    c_ch->callback([&] { rc = run_chains(ch); });

    LifetimeOpts lt;
    CLI::App* c_lt = app.add_subcommand("lifetime", "maneuver-count and blow-up-horizon arithmetic");
    c_lt->add_option("--h-gain", lt.h, "per-hop amplification gain h")->required();
    c_lt->add_option("--t0", lt.t0, "first maneuver-interval scale (s)")->capture_default_str();
    c_lt->add_option("--n", lt.n_maneuvers, "report the time of the n-th maneuver")
        ->check(CLI::PositiveNumber);
    c_lt->add_option("--t", lt.t, "report the maneuver count by time t (s)")
        ->check(CLI::NonNegativeNumber);
    c_lt->add_flag("--at-unity", lt.at_unity, "accept h = 1 and use the linear-growth form");
    c_lt->add_option("-o,--output", lt.output, "write JSON here instead of stdout");
    c_lt->callback([&] { rc = run_lifetime(lt); });

    CapacityOpts cap;
    CLI::App* c_cap = app.add_subcommand("capacity", "shell capacity bound from a safe spacing");
    c_cap->add_option("--dtheta-safe", cap.dtheta_safe, "safe spacing deviation (rad)")->required();
    c_cap->add_option("--phase-factor", cap.phase_factor, "Walker phase factor")
        ->capture_default_str();
    c_cap->add_option("--per-sat-gbps", cap.per_sat_gbps, "per-satellite capacity (Gbps)")
        ->capture_default_str();
    c_cap->add_option("-o,--output", cap.output, "write JSON here instead of stdout");
    c_cap->callback([&] { rc = run_capacity(cap); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ing::ParseError& e) {
        std::cerr << "error: " << e.what();
        if (e.row() >= 0) std::cerr << " [row " << e.row() << "]";
        std::cerr << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}
