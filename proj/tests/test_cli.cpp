// End-to-end tests of the constel binary: exit codes, JSON/CSV contracts,
// schema conformance, determinism, and the documented worked examples. The
// binary path arrives as the first program argument; schemas come from the
// directory baked in at compile time.

#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include "json.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using njson = nlohmann::json;

namespace {

std::string g_cli;

const fs::path& scratch() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("constel_cli_" + std::to_string(getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

// Runs the binary with the given argument string, captures both streams,
// returns the exit code (negative on abnormal termination).
int run_cli(const std::string& args, std::string* out_text = nullptr,
            std::string* err_text = nullptr) {
    const fs::path out = scratch() / "stdout.txt";
    const fs::path err = scratch() / "stderr.txt";
    const std::string cmd = "\"" + g_cli + "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                            err.string() + "\"";
    const int status = std::system(cmd.c_str());
    if (out_text) *out_text = slurp(out);
    if (err_text) *err_text = slurp(err);
    if (status == -1) return -1;
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    return -2;
}

// --- minimal JSON-schema subset: type, required, properties, items, enum ---

bool type_matches(const njson& inst, const std::string& t) {
    if (t == "object") return inst.is_object();
    if (t == "array") return inst.is_array();
    if (t == "string") return inst.is_string();
    if (t == "boolean") return inst.is_boolean();
    if (t == "null") return inst.is_null();
    if (t == "integer") return inst.is_number_integer() || inst.is_number_unsigned();
    if (t == "number") return inst.is_number();
    return false;
}

void validate_schema(const njson& inst, const njson& schema, const std::string& where,
                     std::vector<std::string>& errs) {
    if (schema.contains("type")) {
        const njson& ty = schema["type"];
        bool ok = false;
        if (ty.is_string()) {
            ok = type_matches(inst, ty.get<std::string>());
        } else {
            for (const njson& t : ty) ok = ok || type_matches(inst, t.get<std::string>());
        }
        if (!ok) {
            errs.push_back(where + ": type mismatch, got " + std::string(inst.type_name()));
            return;
        }
    }
    if (schema.contains("enum")) {
        bool ok = false;
        for (const njson& v : schema["enum"]) ok = ok || (v == inst);
        if (!ok) errs.push_back(where + ": value not in enum: " + inst.dump());
    }
    if (inst.is_object()) {
        if (schema.contains("required"))
            for (const njson& name : schema["required"])
                if (!inst.contains(name.get<std::string>()))
                    errs.push_back(where + ": missing required member " + name.get<std::string>());
        if (schema.contains("properties"))
            for (auto it = schema["properties"].begin(); it != schema["properties"].end(); ++it)
                if (inst.contains(it.key()))
                    validate_schema(inst[it.key()], it.value(), where + "." + it.key(), errs);
    }
    if (inst.is_array() && schema.contains("items")) {
        for (std::size_t i = 0; i < inst.size(); ++i)
            validate_schema(inst[i], schema["items"], where + "[" + std::to_string(i) + "]", errs);
    }
}

njson load_schema(const std::string& name) {
    const fs::path p = fs::path(CONSTEL_SCHEMA_DIR) / name;
    std::ifstream in(p);
    REQUIRE_MESSAGE(in.good(), "schema file missing: " << p.string());
    return njson::parse(in);
}

void check_schema(const njson& inst, const std::string& schema_name) {
    std::vector<std::string> errs;
    validate_schema(inst, load_schema(schema_name), "$", errs);
    std::string joined;
    for (const std::string& e : errs) joined += e + "; ";
    CHECK_MESSAGE(errs.empty(), schema_name << ": " << joined);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

}  // namespace

TEST_CASE("usage and exit codes") {
    std::string out, err;
    CHECK(run_cli("", &out, &err) == 1);
    CHECK(run_cli("no-such-command", &out, &err) == 1);
    CHECK(run_cli("--help", &out, &err) == 0);

    CHECK(run_cli("stability --alpha1 0.05 --alpha2 0.5 --alpha3 0.2") == 0);
    CHECK(run_cli("stability --alpha1 0.3 --alpha2 0.5 --alpha3 0.2") == 2);

    CHECK(run_cli("stability --alpha1 0.05 --alpha2 0.5", &out, &err) == 1);
    CHECK(err.find("alpha3") != std::string::npos);

    // Invalid parameter domain is an input error, not a verdict.
    CHECK(run_cli("stability --alpha1 0.05 --alpha2 0.2 --alpha3 0.5", &out, &err) == 1);
    CHECK(err.find("error:") != std::string::npos);

    // Referenced input paths must exist at invocation.
    CHECK(run_cli("infer --ephemeris /no/such/file.csv --sats-per-orbit 8", &out, &err) == 1);
}

TEST_CASE("stability verdict json") {
    std::string out;
    REQUIRE(run_cli("stability --alpha1 0.05 --alpha2 0.5 --alpha3 0.2 --n 8", &out) == 0);
    const njson j = njson::parse(out);
    check_schema(j, "stability.json");
    CHECK(j["margin"].get<double>() == doctest::Approx(0.11).epsilon(1e-12));
    CHECK(j["stable"].get<bool>());
    CHECK(j["sup_gain"].get<double>() == 1.0);
    CHECK(j["n"].get<int>() == 8);
    CHECK(j["max_real_part"].get<double>() < 0.0);
    CHECK(out.back() == '\n');

    REQUIRE(run_cli("stability --alpha1 0.3 --alpha2 0.5 --alpha3 0.2", &out) == 2);
    const njson u = njson::parse(out);
    check_schema(u, "stability.json");
    CHECK_FALSE(u["stable"].get<bool>());
    CHECK(u["sup_gain"].get<double>() > 1.0);
}

TEST_CASE("pc flags") {
    std::string out;
    // Centered isotropic case with the closed form 1 - exp(-R^2 / (2 sigma^2)).
    REQUIRE(run_cli("pc --sigma-x 1 --sigma-y 1 --radius 1", &out) == 0);
    njson j = njson::parse(out);
    check_schema(j, "pc.json");
    CHECK(j["pc"].get<double>() == doctest::Approx(0.3934693).epsilon(1e-6));

    REQUIRE(run_cli("pc --miss-x 3 --sigma-x 1 --sigma-y 2 --radius 1", &out) == 0);
    j = njson::parse(out);
    CHECK(j["pc"].get<double>() == doctest::Approx(0.005810896709330099).epsilon(1e-7));

    // Monte-Carlo block appears on request and brackets the quadrature.
    REQUIRE(run_cli("pc --miss-x 1 --sigma-x 1 --sigma-y 1 --radius 0.8 --mc-samples 200000 "
                    "--seed 7",
                    &out) == 0);
    j = njson::parse(out);
    check_schema(j, "pc.json");
    REQUIRE(j.contains("monte_carlo"));
    const double pc = j["pc"].get<double>();
    const double mc = j["monte_carlo"]["pc"].get<double>();
    const double se = j["monte_carlo"]["std_error"].get<double>();
    CHECK(std::fabs(mc - pc) < 5.0 * se);

    // Bad geometry is an input error.
    CHECK(run_cli("pc --sigma-x 0 --sigma-y 1 --radius 1") == 1);
}

TEST_CASE("pc cdm recomputation") {
    const fs::path cdm = scratch() / "pc_rows.csv";
    spit(cdm,
         "object_a_id,object_b_id,tca_iso8601,pc,miss_distance_km\n"
         "SAT-001,DEB-900,2024-03-17T12:00:00Z,1e-04,1.5\n"
         "SAT-002,DEB-901,2024-03-17T13:30:00Z,2e-05,3.0\n");

    std::string out;
    REQUIRE(run_cli("pc --sigma-x 1 --sigma-y 2 --radius 1 --cdm \"" + cdm.string() + "\"",
                    &out) == 0);
    const njson j = njson::parse(out);
    check_schema(j, "pc_cdm.json");
    REQUIRE(j["rows"].size() == std::size_t{2});
    CHECK_FALSE(j["tca_out_of_order"].get<bool>());

    // Row recomputation matches the flag path on the same geometry.
    std::string direct;
    REQUIRE(run_cli("pc --miss-x 1.5 --sigma-x 1 --sigma-y 2 --radius 1", &direct) == 0);
    const double want = njson::parse(direct)["pc"].get<double>();
    CHECK(j["rows"][0]["recomputed_pc"].get<double>() == want);
    CHECK(j["rows"][0]["abs_diff"].get<double>() ==
          doctest::Approx(std::fabs(want - 1e-4)).epsilon(1e-8));
    CHECK(j["rows"][1]["miss_distance_km"].get<double>() == 3.0);

    // Malformed rows come back as input errors naming the row.
    const fs::path bad = scratch() / "pc_bad.csv";
    spit(bad,
         "object_a_id,object_b_id,tca_iso8601,pc,miss_distance_km\n"
         "SAT-001,DEB-900,2024-03-17T12:00:00Z,1.5,1.5\n");
    std::string err;
    CHECK(run_cli("pc --sigma-x 1 --sigma-y 2 --radius 1 --cdm \"" + bad.string() + "\"", &out,
                  &err) == 1);
    CHECK(err.find("row 1") != std::string::npos);
}

TEST_CASE("simulate summary and determinism") {
    const std::string base =
        "simulate --n 8 --alpha1 0.05 --alpha2 0.5 --alpha3 0.2 --dt 0.05 --duration 120 "
        "--threshold 0.002 --decouple-km 1e9 --impulse 1e-3 --stride 10";
    const fs::path traj1 = scratch() / "traj1.csv";
    const fs::path traj2 = scratch() / "traj2.csv";

    std::string out1, out2;
    REQUIRE(run_cli(base + " --trajectory-out \"" + traj1.string() + "\"", &out1) == 0);
    REQUIRE(run_cli(base + " --trajectory-out \"" + traj2.string() + "\"", &out2) == 0);
    CHECK(out1 == out2);
    CHECK(slurp(traj1) == slurp(traj2));

    const njson j = njson::parse(out1);
    check_schema(j, "simulate.json");
    CHECK(j["policy"] == "pairwise");
    CHECK(j["external_events"].get<int>() == 1);
    CHECK(j["events"][0]["cause"] == "external");
    CHECK_FALSE(j["blew_up"].get<bool>());

    const std::string traj = slurp(traj1);
    const auto lines = split(traj, '\n');
    REQUIRE(lines.size() > 2);
    const auto header = split(lines[0], ',');
    REQUIRE(header.size() == std::size_t{1 + 2 * 8});
    CHECK(header[0] == "time_s");
    CHECK(header[1] == "dtheta_0");
    CHECK(header[9] == "omega_0");
    CHECK(split(lines[1], ',')[0] == "0");

    // Phase columns appear when tracked.
    std::string out3;
    REQUIRE(run_cli(base + " --track-phase --trajectory-out \"" + traj1.string() + "\"", &out3) ==
            0);
    CHECK(split(split(slurp(traj1), '\n')[0], ',').size() == std::size_t{1 + 3 * 8});
}

TEST_CASE("simulate blow-up reporting") {
    // A step size far beyond the stability region of the integrator drives
    // the state non-finite; the tool reports that as data, not failure.
    std::string out;
    REQUIRE(run_cli("simulate --n 4 --alpha1 2.0 --alpha2 0.5 --alpha3 0.2 --dt 100 "
                    "--duration 20000 --threshold 0.1 --decouple-km 1e308 --impulse 1e-3",
                    &out) == 0);
    const njson j = njson::parse(out);
    check_schema(j, "simulate.json");
    CHECK(j["blew_up"].get<bool>());
}

TEST_CASE("simulate paired comparison") {
    std::string out;
    REQUIRE(run_cli("simulate --n 16 --alpha1 0.3 --alpha2 0.5 --alpha3 0.2 --dt 0.05 "
                    "--duration 200 --threshold 0.002 --decouple-km 1e9 --impulse 1e-3 --paired",
                    &out) == 0);
    const njson j = njson::parse(out);
    check_schema(j, "simulate_paired.json");
    check_schema(j["pairwise"], "simulate.json");
    check_schema(j["bilateral"], "simulate.json");
    CHECK(j["pairwise"]["policy"] == "pairwise");
    CHECK(j["bilateral"]["policy"] == "bilateral");

    const njson& cmp = j["comparison"];
    const double pa = cmp["pairwise_amplification"].get<double>();
    const double ba = cmp["bilateral_amplification"].get<double>();
    CHECK(pa == j["pairwise"]["amplification_factor"].get<double>());
    CHECK(ba == j["bilateral"]["amplification_factor"].get<double>());
    CHECK(cmp["bilateral_not_worse"].get<bool>() == (ba <= pa));
    if (ba > 0.0) {
        CHECK(cmp["amplification_ratio"].get<double>() == doctest::Approx(pa / ba).epsilon(1e-9));
    } else {
        CHECK(cmp["amplification_ratio"].is_null());
    }
}

TEST_CASE("sweep grid") {
    // Single-cell sweep agrees with the stability and capacity subcommands.
    std::string csv;
    REQUIRE(run_cli("sweep --alpha2 0.5 --alpha1-min 0.05 --alpha1-max 0.05 --alpha1-steps 1 "
                    "--alpha3-min 0.2 --alpha3-max 0.2 --alpha3-steps 1 --c-max 1e-5",
                    &csv) == 0);
    auto lines = split(csv, '\n');
    REQUIRE(lines.size() >= 2);
    CHECK(lines[0] ==
          "alpha1,alpha2,alpha3,margin,stable,sup_gain,dtheta_safe_rad,max_sats,"
          "max_capacity_gbps,blowup_horizon_s");
    const auto row = split(lines[1], ',');
    REQUIRE(row.size() == 10);

    std::string sj;
    REQUIRE(run_cli("stability --alpha1 0.05 --alpha2 0.5 --alpha3 0.2", &sj) == 0);
    const njson sv = njson::parse(sj);
    CHECK(std::strtod(row[3].c_str(), nullptr) == sv["margin"].get<double>());
    CHECK(row[4] == "true");
    CHECK(std::strtod(row[5].c_str(), nullptr) == sv["sup_gain"].get<double>());
    CHECK(row[9] == "");  // stable cell has no blow-up horizon

    std::string cj;
    REQUIRE(run_cli("capacity --dtheta-safe " + row[6], &cj) == 0);
    const njson cv = njson::parse(cj);
    CHECK(std::strtol(row[7].c_str(), nullptr, 10) == cv["max_sats"].get<long>());
    CHECK(std::strtod(row[8].c_str(), nullptr) == cv["max_capacity_gbps"].get<double>());

    // A grid straddling the margin boundary: 100x100 cells, monotone margin
    // along the alpha1 axis, sign change present.
    const fs::path grid = scratch() / "grid.csv";
    REQUIRE(run_cli("sweep --alpha2 0.5 --alpha1-min 0.01 --alpha1-max 0.2 --alpha1-steps 100 "
                    "--alpha3-min 0.05 --alpha3-max 0.45 --alpha3-steps 100 --c-max 1e-5 "
                    "-o \"" + grid.string() + "\"") == 0);
    lines = split(slurp(grid), '\n');
    REQUIRE(lines.size() == std::size_t{1 + 10000 + 1});  // header + rows + trailing newline

    bool saw_positive = false, saw_negative = false;
    double prev = 0.0;
    for (int i = 0; i < 100; ++i) {
        // alpha3 index 0 within each alpha1 block: margins strictly decrease.
        const auto r = split(lines[1 + static_cast<std::size_t>(i) * 100], ',');
        const double margin = std::strtod(r[3].c_str(), nullptr);
        if (i > 0) CHECK(margin < prev);
        prev = margin;
        saw_positive = saw_positive || margin > 0.0;
        saw_negative = saw_negative || margin < 0.0;
    }
    CHECK(saw_positive);
    CHECK(saw_negative);

    // Grid domain violations are usage errors.
    CHECK(run_cli("sweep --alpha2 0.5 --alpha1-min 0.05 --alpha1-max 0.05 --alpha1-steps 1 "
                  "--alpha3-min 0.2 --alpha3-max 0.6 --alpha3-steps 2 --c-max 1e-5") == 1);
}

TEST_CASE("infer round trip through synthesized ephemeris") {
    const fs::path eph = scratch() / "infer_eph.csv";
    REQUIRE(run_cli("simulate --n 8 --alpha1 9e-9 --alpha2 2e-4 --alpha3 1e-4 --dt 0.5 "
                    "--duration 4000 --threshold 1e-12 --decouple-km 1e9 --impulse -1e-6 "
                    "--stride 4 --summary-out /dev/null --ephemeris-out \"" +
                    eph.string() + "\"") == 0);

    std::string out;
    REQUIRE(run_cli("infer --ephemeris \"" + eph.string() + "\" --sats-per-orbit 8", &out) == 0);
    const njson j = njson::parse(out);
    check_schema(j, "infer.json");
    CHECK(j["alpha1"].get<double>() == doctest::Approx(9e-9).epsilon(1e-5));
    CHECK(j["alpha2"].get<double>() == doctest::Approx(2e-4).epsilon(1e-5));
    CHECK(j["alpha3"].get<double>() == doctest::Approx(1e-4).epsilon(1e-5));
    CHECK(j["stable"].get<bool>());
    CHECK(j["sample_count"].get<long>() > 1000);
}

TEST_CASE("chains pipeline") {
    // Unstable ring, braking impulse at t=6000; one conjunction report puts
    // the seed inside the detection window.
    const fs::path eph = scratch() / "chain_eph.csv";
    const fs::path cdm = scratch() / "chain_cdm.csv";
    REQUIRE(run_cli("simulate --n 8 --alpha1 2.4e-8 --alpha2 2e-4 --alpha3 1e-4 --dt 5 "
                    "--duration 120000 --threshold 0.02 --decouple-km 1e9 --impulse -1e-4 "
                    "--impulse-time 6000 --stride 20 --summary-out /dev/null "
                    "--ephemeris-out \"" + eph.string() + "\"") == 0);
    spit(cdm,
         "object_a_id,object_b_id,tca_iso8601,pc,miss_distance_km\n"
         "SAT-000,DEB-042,2000-01-01T01:36:40Z,5e-05,0.25\n");

    std::string out;
    REQUIRE(run_cli("chains --ephemeris \"" + eph.string() + "\" --cdm \"" + cdm.string() +
                    "\" --threshold 0.03 --chain-window-s 60000",
                    &out) == 0);
    const njson j = njson::parse(out);
    check_schema(j, "chains.json");
    REQUIRE(j["seed_count"].get<int>() == 1);
    REQUIRE(j["chains"].size() == std::size_t{1});
    const njson& chain = j["chains"][0];
    CHECK(chain["seed"]["sat_id"] == "SAT-000");
    CHECK(std::fabs(chain["seed"]["sma_jump_km"].get<double>()) > 1.0);
    REQUIRE(chain["hop_count"].get<int>() >= 2);
    double prev_epoch = chain["seed"]["epoch_s"].get<double>();
    for (const njson& hop : chain["hops"]) {
        CHECK(hop["epoch_s"].get<double>() > prev_epoch);
        prev_epoch = hop["epoch_s"].get<double>();
        CHECK(hop["dtheta_before_rad"].get<double>() < hop["dtheta_after_rad"].get<double>());
    }

    // The trigger threshold is required.
    CHECK(run_cli("chains --ephemeris \"" + eph.string() + "\" --cdm \"" + cdm.string() + "\"") ==
          1);
}

TEST_CASE("lifetime scalars") {
    std::string out;
    REQUIRE(run_cli("lifetime --h-gain 2 --t0 1 --n 2", &out) == 0);
    njson j = njson::parse(out);
    check_schema(j, "lifetime.json");
    CHECK(j["time_of_nth_s"].get<double>() == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(j["horizon_s"].get<double>() == doctest::Approx(2.0).epsilon(1e-12));

    REQUIRE(run_cli("lifetime --h-gain 2 --t0 1 --t 1.875", &out) == 0);
    j = njson::parse(out);
    check_schema(j, "lifetime.json");
    CHECK(j["maneuver_count"].get<double>() == doctest::Approx(4.0).epsilon(1e-9));

    // h = 1 needs the explicit linear-growth opt-in.
    CHECK(run_cli("lifetime --h-gain 1 --t0 1 --n 5") == 1);
    REQUIRE(run_cli("lifetime --h-gain 1 --t0 1 --n 5 --at-unity", &out) == 0);
    j = njson::parse(out);
    CHECK(j["time_of_nth_s"].get<double>() == 5.0);
    CHECK(j["horizon_s"].is_null());

    // Decaying cascades have no horizon.
    REQUIRE(run_cli("lifetime --h-gain 0.5 --t0 1 --n 3", &out) == 0);
    CHECK(njson::parse(out)["horizon_s"].is_null());
}

TEST_CASE("capacity scalars") {
    std::string out;
    REQUIRE(run_cli("capacity --dtheta-safe 0.1", &out) == 0);
    njson j = njson::parse(out);
    check_schema(j, "capacity.json");
    CHECK(j["max_sats"].get<long>() == 62);
    CHECK(j["max_capacity_gbps"].get<double>() == 1240.0);

    REQUIRE(run_cli("capacity --dtheta-safe 0.2", &out) == 0);
    j = njson::parse(out);
    CHECK(j["max_sats"].get<long>() == 31);
    CHECK(j["max_capacity_gbps"].get<double>() == 620.0);

    CHECK(run_cli("capacity --dtheta-safe 0") == 1);
}

TEST_CASE("config file with flag override") {
    const fs::path cfg = scratch() / "run.ini";
    spit(cfg,
         "[stability]\n"
         "alpha1=0.05\n"
         "alpha2=0.5\n"
         "alpha3=0.2\n");

    std::string out;
    REQUIRE(run_cli("--config \"" + cfg.string() + "\" stability", &out) == 0);
    CHECK(njson::parse(out)["alpha1"].get<double>() == 0.05);

    // Explicit flags win over file values; here they flip the verdict.
    CHECK(run_cli("--config \"" + cfg.string() + "\" stability --alpha1 0.4", &out) == 2);
    CHECK(njson::parse(out)["alpha1"].get<double>() == 0.4);

    CHECK(run_cli("--config /no/such/file.ini stability --alpha1 0.05 --alpha2 0.5 "
                  "--alpha3 0.2") == 1);

    // -o sends the report to a file and keeps stdout quiet.
    const fs::path report = scratch() / "verdict.json";
    REQUIRE(run_cli("stability --alpha1 0.05 --alpha2 0.5 --alpha3 0.2 -o \"" + report.string() +
                    "\"", &out) == 0);
    CHECK(out.empty());
    CHECK(njson::parse(slurp(report))["stable"].get<bool>());
}

int main(int argc, char** argv) {
    std::vector<char*> pass;
    pass.push_back(argv[0]);
    for (int i = 1; i < argc; ++i) {
        if (g_cli.empty() && argv[i][0] != '-') {
            g_cli = argv[i];
            continue;
        }
        pass.push_back(argv[i]);
    }
    if (g_cli.empty()) {
        std::fprintf(stderr, "usage: test_cli <path-to-constel-binary> [doctest options]\n");
        return 2;
    }
    doctest::Context ctx;
    ctx.applyCommandLine(static_cast<int>(pass.size()), pass.data());
    return ctx.run();
}
