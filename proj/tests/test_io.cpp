#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fraccap/io.hpp"
#include "fraccap/simulator.hpp"

using namespace fraccap;
using doctest::Approx;

namespace {

InstrumentLog log_from_trace(const std::vector<TraceSample>& trace) {
    InstrumentLog log;
    for (const auto& s : trace) log.rows.push_back({s.t, s.v_terminal, s.i});
    return log;
}

bool mentions(const std::vector<std::string>& warnings, const std::string& needle) {
    for (const auto& w : warnings) {
        if (w.find(needle) != std::string::npos) return true;
    }
    return false;
}

const MorrisonNetwork& anchored_network() {
    static const MorrisonNetwork net =
        synthesize({{0.9711, 9203.0}, 30, 1.4}, {}, {Placement::StepAnchored, 1.0, 21});
    return net;
}

}  // namespace

TEST_CASE("config JSON") {
    ExperimentConfig c;
    apply_config_json(c, R"({"alpha": 0.95, "currents": [1, 0.5], "placement": "step-anchored",
                             "v_init": 4.1, "network_file": "net.txt", "seed": 7})");
    CHECK(c.alpha == 0.95);
    CHECK(c.currents == std::vector<double>{1.0, 0.5});
    CHECK(c.placement == Placement::StepAnchored);
    CHECK(c.v_init == 4.1);
    CHECK(c.network_file == "net.txt");
    CHECK(c.seed == 7);
    CHECK(c.c_f == 9203.0);  // untouched keys keep their defaults

    CHECK_THROWS_AS(apply_config_json(c, R"({"alhpa": 0.9})"), ConfigError);
    CHECK_THROWS_AS(apply_config_json(c, R"({"alpha": "high"})"), ConfigError);
    CHECK_THROWS_AS(apply_config_json(c, R"({"placement": "middle"})"), ConfigError);
    CHECK_THROWS_AS(apply_config_json(c, "[1, 2]"), ConfigError);
    CHECK_THROWS_AS(apply_config_json(c, "{"), ConfigError);
    CHECK_THROWS_AS(load_config_file("/nonexistent/config.json"), ConfigError);
    CHECK(placement_name(parse_placement("centered")) == "centered");
}

TEST_CASE("config validation") {
    ExperimentConfig c;
    CHECK_NOTHROW(c.validate_cycling());
    c.currents.clear();
    CHECK_THROWS_WITH_AS(c.validate_cycling(), doctest::Contains("empty"), ConfigError);
    c = {};
    c.v_l = 4.5;
    CHECK_THROWS_AS(c.validate_cycling(), ConfigError);
    c = {};
    c.v_init = 2.0;
    CHECK_THROWS_AS(c.validate_cycling(), ConfigError);
    c = {};
    c.alpha = 1.2;
    CHECK_THROWS_AS(c.validate_model(), ConfigError);
    c = {};
    c.k_f = 1.0;
    CHECK_THROWS_AS(c.validate_synthesis(), ConfigError);
}

TEST_CASE("capacity and impedance CSV") {
    const auto curve = synthetic_capacity_curve({{0.9711, 9203.0}, 0.0631}, 4.3, 3.0, kPaperCurrentLadder);
    std::stringstream buffer;
    write_capacity_csv(buffer, curve);
    CHECK(buffer.str().rfind("i_A,q_As,q_Ah\n", 0) == 0);
    const auto back = read_capacity_csv(buffer, 1.3);
    REQUIRE(back.points.size() == curve.points.size());
    for (std::size_t k = 0; k < back.points.size(); ++k) {
        CHECK(back.points[k].current == curve.points[k].current);
        CHECK(back.points[k].capacity == Approx(curve.points[k].capacity).epsilon(1e-9));
    }

    std::istringstream two_col("i_A,q_As\n0.1,100\n0.2,90\n");
    CHECK(read_capacity_csv(two_col, 1.3).points.size() == 2);
    std::istringstream bad("i_A,q_As\n0.1,100\n0.2,9O\n");
    CHECK_THROWS_WITH_AS(read_capacity_csv(bad, 1.3, "cap.csv"), doctest::Contains("cap.csv:3"), ParseError);

    const auto spectrum = synthetic_spectrum({{0.976, 1.54e4}, 0.057}, spectrum_frequencies());
    std::stringstream zbuf;
    write_impedance_csv(zbuf, spectrum);
    const auto zback = read_impedance_csv(zbuf);
    REQUIRE(zback.samples.size() == spectrum.samples.size());
    CHECK(std::abs(zback.samples[3].z - spectrum.samples[3].z) <= 1e-9 * std::abs(spectrum.samples[3].z));
    std::istringstream unsorted("f_Hz,re_ohm,im_ohm\n1,1,-1\n0.5,1,-1\n");
    CHECK_THROWS(read_impedance_csv(unsorted));
}

TEST_CASE("generic log reader") {
    std::istringstream ok("t_s,v_V,i_A\n0,4.3,-1\n1,4.29,-1\n");
    CHECK(read_generic_log(ok).rows.size() == 2);
    std::istringstream header("time,v,i\n0,4.3,-1\n");
    CHECK_THROWS_AS(read_generic_log(header), ParseError);
    std::istringstream backwards("t_s,v_V,i_A\n0,4.3,-1\n2,4.2,-1\n1,4.1,-1\n");
    CHECK_THROWS_WITH_AS(read_generic_log(backwards, "run.log"), doctest::Contains("run.log:4"), ParseError);
}

TEST_CASE("ingest closed loop through the simulator") {
    const CycleProtocol protocol{1.0, 4.30, 3.00};
    const std::vector<double> currents = {2.0, 1.0, 0.5};
    const auto sweep = capacity_sweep(anchored_network(), 0.0631, protocol, currents, 2, 1.0, 4.30);
    InstrumentLog log;
    for (const auto& run : sweep.runs) {
        const auto part = log_from_trace(run.trace);
        log.rows.insert(log.rows.end(), part.rows.begin(), part.rows.end());
    }
    const auto result = ingest_log(log, protocol);
    REQUIRE(result.curve.points.size() == currents.size());
    for (std::size_t k = 0; k < currents.size(); ++k) {
        CHECK(result.curve.points[k].current == Approx(currents[k]).epsilon(1e-12));
        CHECK(result.curve.points[k].capacity == Approx(sweep.runs[k].capacity.capacity).epsilon(1e-3));
    }
    CHECK(result.curve.delta_v == Approx(1.3));
}

TEST_CASE("ingest edge cases") {
    const CycleProtocol protocol{1.0, 4.30, 3.00};
    SUBCASE("idle log") {
        InstrumentLog idle;
        for (int k = 0; k < 100; ++k) idle.rows.push_back({double(k), 3.9, 0.0});
        const auto result = ingest_log(idle, protocol);
        CHECK(result.curve.points.empty());
        CHECK(mentions(result.warnings, "no discharge"));
    }
    SUBCASE("empty log") { CHECK(mentions(ingest_log({}, protocol).warnings, "empty")); }
    SUBCASE("truncated discharge") {
        const auto a = run_cycles(anchored_network(), 0.0631, {1.0, 4.3, 3.0}, 4.3, 1, 1.0);
        const auto b = run_cycles(anchored_network(), 0.0631, {2.0, 4.3, 3.0}, 4.3, 1, 1.0);
        auto log = log_from_trace(a.trace);
        const double t0 = log.rows.back().t;
        // the 2 A discharge is cut halfway down
        for (const auto& s : b.trace) {
            if (s.i > 0.0 || s.v_terminal < 3.6) break;
            log.rows.push_back({t0 + 1.0 + s.t, s.v_terminal, s.i});
        }
        const auto result = ingest_log(log, protocol);
        REQUIRE(result.curve.points.size() == 1);
        CHECK(result.curve.points[0].current == Approx(1.0));
        CHECK(result.curve.points[0].capacity == Approx(a.capacity.capacity).epsilon(1e-3));
        CHECK(mentions(result.warnings, "does not reach v_l"));
    }
    SUBCASE("gaps are flagged, not filled") {
        InstrumentLog log;
        for (int k = 0; k <= 100; ++k) log.rows.push_back({double(k), 4.3 - 0.013 * k, -1.0});
        for (auto& r : log.rows) {
            if (r.t > 50.0) r.t += 500.0;
        }
        const auto result = ingest_log(log, protocol);
        CHECK(mentions(result.warnings, "gap of 501 s"));
        REQUIRE(result.curve.points.size() == 1);
        CHECK(result.curve.points[0].capacity == Approx(600.0));
    }
    SUBCASE("decreasing timestamps") {
        InstrumentLog log{{{0.0, 4.3, -1.0}, {2.0, 4.2, -1.0}, {1.0, 4.1, -1.0}}};
        CHECK_THROWS_AS(ingest_log(log, protocol), DomainError);
    }
}

TEST_CASE("ingest then fit recovers the exponent") {
    const CycleProtocol protocol{1.0, 4.30, 3.00};
    const std::vector<double> currents = {5.0, 2.0, 1.0, 0.5, 0.2, 0.1, 0.05};
    const auto sweep = capacity_sweep(anchored_network(), 0.0631, protocol, currents, 2, 1.0, 4.30);
    InstrumentLog log;
    for (const auto& run : sweep.runs) {
        const auto part = log_from_trace(run.trace);
        log.rows.insert(log.rows.end(), part.rows.begin(), part.rows.end());
    }
    const auto result = ingest_log(log, protocol);
    REQUIRE(result.curve.points.size() == currents.size());
    const auto fit = fit_capacity_curve(result.curve);
    CHECK(std::abs(fit.alpha.value - 0.9711) < 0.005);
}

TEST_CASE("fit report formats") {
    FitResult f;
    f.alpha = {0.9711, 0.0017};
    f.c_f = {9203.0, 130.0};
    f.r_s = {0.0631, 0.0};
    f.n_points_used = 4;
    std::ostringstream os;
    write_fit_report(os, "capacity", f);
    CHECK(os.str().find("capacity.alpha = 0.9711(17)\n") != std::string::npos);
    CHECK(os.str().find("capacity.c_f = 9.20(13)e3\n") != std::string::npos);
    CHECK(os.str().find("capacity.n_points_used = 4\n") != std::string::npos);
    CHECK(fit_csv_row("capacity", f).rfind("capacity,0.9711,0.0017,9203,130,0.0631,0,4,", 0) == 0);
    CHECK(fit_csv_header().rfind("method,alpha,", 0) == 0);
}
