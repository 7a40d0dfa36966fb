#include "fraccap/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fraccap/fitting.hpp"
#include "fraccap/io.hpp"
#include "fraccap/morrison.hpp"
#include "fraccap/simulator.hpp"

namespace fraccap {

namespace {

namespace fs = std::filesystem;

struct CliState {
    ExperimentConfig config;
    std::string config_path;
    std::string placement;

    // synthesize
    std::string network_out;
    // fit
    std::string capacity_file, impedance_file, fit_csv_out;
    int n_low = 4, n_high = 3, n_low_freq = 7, n_high_freq = 3;
    bool no_rs_correction = false;
    // ingest
    std::string log_file, ingest_out;
    double threshold = 0.10, v_tolerance = 0.005;
    // report
    int report_points = 61;
    // montecarlo
    int trials = 200;
    double noise = 0.01;
};

void add_model_options(CLI::App* cmd, CliState& s) {
    cmd->add_option("--alpha", s.config.alpha, "CPE exponent");
    cmd->add_option("--c-f", s.config.c_f, "fractional capacitance, A s^alpha / V");
    cmd->add_option("--r-s", s.config.r_s, "series resistance, ohm");
}

void add_network_options(CLI::App* cmd, CliState& s) {
    cmd->add_option("--n-half", s.config.n_half, "branch half-count N");
    cmd->add_option("--k-f", s.config.k_f, "per-branch frequency multiplier");
    cmd->add_option("--f-min", s.config.band.f_min, "designed band lower edge, Hz");
    cmd->add_option("--f-max", s.config.band.f_max, "designed band upper edge, Hz");
    cmd->add_option("--placement", s.placement, "centered | step-anchored");
    cmd->add_option("--anchor-dt", s.config.anchor_dt, "time step anchoring the fastest branch, s");
}

void add_protocol_options(CLI::App* cmd, CliState& s) {
    cmd->add_option("--v-h", s.config.v_h, "upper voltage limit, V");
    cmd->add_option("--v-l", s.config.v_l, "lower voltage limit, V");
}

MorrisonNetwork network_for(const ExperimentConfig& c) {
    if (c.network_file) return load_network(*c.network_file);
    return synthesize(c.morrison_spec(), c.band, c.synthesis_options());
}

std::string current_label(double i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", i);
    return buf;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << content;
}

int cmd_synthesize(CliState& s, std::ostream& out) {
    s.config.validate_synthesis();
    const auto net = synthesize(s.config.morrison_spec(), s.config.band, s.config.synthesis_options());
    const fs::path path = s.network_out.empty() ? fs::path(s.config.output_dir) / "network.txt" : fs::path(s.network_out);
    std::ostringstream text;
    write_network(text, net);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file(path, text.str());
    const auto center = net.center_branch();
    out << "network = " << path.string() << '\n'
        << "branches = " << net.branches().size() << '\n'
        << "r_0 = " << center->r << '\n'
        << "c_0 = " << center->c << '\n'
        << "c_t = " << net.c_t() << '\n'
        << "tau_min = " << net.tau_min() << '\n';
    return kExitOk;
}

int cmd_cycle(CliState& s, std::ostream& out) {
    s.config.validate_cycling();
    const auto& c = s.config;
    for (double i : c.currents) {
        if (2.0 * i * c.r_s >= c.v_h - c.v_l) throw ResistiveWindowExhausted(i, c.v_h - c.v_l, c.r_s);
    }
    const auto net = network_for(c);
    RunOptions run;
    run.max_samples_per_cycle = c.max_samples_per_cycle;
    const double v_init = c.v_init.value_or(c.v_h);
    const auto sweep = capacity_sweep(net, c.r_s, c.protocol(c.currents.front()), c.currents, c.n_cycles, c.dt,
                                      v_init, run);

    const fs::path dir(c.output_dir);
    fs::create_directories(dir);
    for (const auto& r : sweep.runs) {
        std::ostringstream trace;
        write_trace_csv(trace, r.trace);
        write_file(dir / ("trace_" + current_label(r.capacity.current) + "A.csv"), trace.str());
    }
    std::ostringstream cap;
    write_capacity_csv(cap, sweep.curve(c.v_h - c.v_l));
    write_file(dir / "capacity.csv", cap.str());

    char buf[160];
    for (const auto& r : sweep.runs) {
        std::snprintf(buf, sizeof buf, "i0 = %g A: Q = %.6g A s (%.4f A h), charge imbalance %.2e\n",
                      r.capacity.current, r.capacity.capacity, r.capacity.capacity_ah(), r.max_charge_imbalance);
        out << buf;
    }
    return kExitOk;
}

int cmd_fit(CliState& s, std::ostream& out) {
    if (s.capacity_file.empty() && s.impedance_file.empty()) {
        throw ConfigError("fit needs --capacity and/or --impedance");
    }
    if (!(s.config.v_h > s.config.v_l)) throw ConfigError("v_h must exceed v_l");
    std::optional<FitResult> cap, imp;
    if (!s.capacity_file.empty()) {
        std::ifstream is(s.capacity_file);
        if (!is) throw ConfigError("cannot open " + s.capacity_file);
        const auto curve = read_capacity_csv(is, s.config.v_h - s.config.v_l, s.capacity_file);
        CapacityFitOptions opt;
        opt.n_low_points = s.n_low;
        opt.n_high_points = s.n_high;
        opt.correction = s.no_rs_correction ? RsCorrection::Ignore : RsCorrection::Include;
        if (s.no_rs_correction) {
            // R_s is only reported here; a curve without an intercept still fits.
            try {
                opt.r_s = fit_rs_intercept(curve, s.n_high).value;
            } catch (const FitError&) {
            }
        }
        cap = fit_capacity_curve(curve, opt);
    }
    if (!s.impedance_file.empty()) {
        std::ifstream is(s.impedance_file);
        if (!is) throw ConfigError("cannot open " + s.impedance_file);
        imp = fit_impedance_spectrum(read_impedance_csv(is, s.impedance_file), {s.n_low_freq, s.n_high_freq});
    }
    if (cap) write_fit_report(out, "capacity", *cap);
    if (imp) write_fit_report(out, "impedance", *imp);
    if (cap && imp) write_cross_validation(out, cross_validate(*cap, *imp));
    if (!s.fit_csv_out.empty()) {
        std::string text = fit_csv_header() + "\n";
        if (cap) text += fit_csv_row("capacity", *cap) + "\n";
        if (imp) text += fit_csv_row("impedance", *imp) + "\n";
        write_file(s.fit_csv_out, text);
    }
    return kExitOk;
}

int cmd_ingest(CliState& s, std::ostream& out, std::ostream& err) {
    if (s.log_file.empty()) throw ConfigError("ingest needs --log");
    if (!(s.config.v_h > s.config.v_l)) throw ConfigError("v_h must exceed v_l");
    std::ifstream is(s.log_file);
    if (!is) throw ConfigError("cannot open " + s.log_file);
    const auto log = read_generic_log(is, s.log_file);
    IngestOptions opt;
    opt.setpoint_threshold = s.threshold;
    opt.v_tolerance = s.v_tolerance;
    const auto result = ingest_log(log, s.config.protocol(1.0), opt);
    for (const auto& w : result.warnings) err << "warning: " << w << '\n';
    std::ostringstream text;
    write_capacity_csv(text, result.curve);
    if (s.ingest_out.empty()) {
        out << text.str();
    } else {
        write_file(s.ingest_out, text.str());
    }
    return kExitOk;
}

int cmd_report(CliState& s, std::ostream& out) {
    s.config.validate_model();
    if (s.report_points < 2) throw ConfigError("--points must be >= 2");
    const auto& c = s.config;
    c.band.validate();
    const CircuitModel model = c.model();
    std::optional<MorrisonNetwork> net;
    if (c.network_file) net = load_network(*c.network_file);
    const auto grid = log_grid(c.band.f_min, c.band.f_max, s.report_points);
    constexpr double deg = 180.0 / std::numbers::pi;

    std::ostringstream mag, phase, nyq;
    mag << "f_Hz,abs_z_model_ohm" << (net ? ",abs_z_network_ohm" : "") << '\n';
    phase << "f_Hz,phase_model_deg" << (net ? ",phase_network_deg" : "") << '\n';
    nyq << "f_Hz,re_model_ohm,im_model_ohm" << (net ? ",re_network_ohm,im_network_ohm" : "") << '\n';
    char buf[160];
    for (double f : grid) {
        const Complex zm = model_impedance(model, f);
        std::optional<Complex> zn;
        if (net) zn = c.r_s + network_impedance(*net, f);
        std::snprintf(buf, sizeof buf, "%.10g,%.10g", f, std::abs(zm));
        mag << buf;
        std::snprintf(buf, sizeof buf, "%.10g,%.10g", f, std::arg(zm) * deg);
        phase << buf;
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g", f, zm.real(), zm.imag());
        nyq << buf;
        if (zn) {
            std::snprintf(buf, sizeof buf, ",%.10g", std::abs(*zn));
            mag << buf;
            std::snprintf(buf, sizeof buf, ",%.10g", std::arg(*zn) * deg);
            phase << buf;
            std::snprintf(buf, sizeof buf, ",%.10g,%.10g", zn->real(), zn->imag());
            nyq << buf;
        }
        mag << '\n';
        phase << '\n';
        nyq << '\n';
    }
    const fs::path dir(c.output_dir);
    fs::create_directories(dir);
    write_file(dir / "bode_magnitude.csv", mag.str());
    write_file(dir / "bode_phase.csv", phase.str());
    write_file(dir / "nyquist.csv", nyq.str());
    if (net) {
        const auto report = approximation_report(*net, c.band, s.report_points);
        std::ostringstream text;
        text << "f_Hz,abs_z_net_ohm,abs_z_cpe_ohm,phase_net_deg,phase_cpe_deg,mag_err_pct,phase_err_deg\n";
        for (const auto& r : report.rows) {
            std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", r.frequency, r.mag_net,
                          r.mag_cpe, r.phase_net_deg, r.phase_cpe_deg, r.mag_err_pct, r.phase_err_deg);
            text << buf;
        }
        write_file(dir / "approximation.csv", text.str());
        out << "max_mag_err_pct = " << report.max_abs_mag_err_pct() << '\n'
            << "max_phase_err_deg = " << report.max_abs_phase_err_deg() << '\n';
    }
    out << "tables = " << dir.string() << '\n';
    return kExitOk;
}

int cmd_montecarlo(CliState& s, std::ostream& out) {
    s.config.validate_model();
    if (s.trials < 1) throw ConfigError("--trials must be >= 1");
    if (!(s.noise >= 0.0)) throw ConfigError("--noise must be >= 0");
    const auto& c = s.config;
    const CircuitModel truth = c.model();
    const auto curve = synthetic_capacity_curve(truth, c.v_h, c.v_l, c.currents);
    CapacityFitOptions copt;
    copt.n_low_points = s.n_low;
    copt.n_high_points = s.n_high;
    const auto cap = capacity_coverage(truth, curve, copt, s.noise, s.trials, c.seed);
    const auto spectrum = synthetic_spectrum(truth, spectrum_frequencies(c.band.f_min, c.band.f_max));
    const auto imp = impedance_coverage(truth, spectrum, {s.n_low_freq, s.n_high_freq}, s.noise, s.trials, c.seed + 1);
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "capacity.alpha_coverage = %.3f\ncapacity.c_f_coverage = %.3f\n"
                  "impedance.alpha_coverage = %.3f\nimpedance.c_f_coverage = %.3f\nimpedance.r_s_coverage = %.3f\n",
                  cap.fraction(cap.alpha_covered), cap.fraction(cap.c_f_covered), imp.fraction(imp.alpha_covered),
                  imp.fraction(imp.c_f_covered), imp.fraction(imp.r_s_covered));
    out << buf;
    return kExitOk;
}

std::string prescan_config(int argc, const char* const* argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc) return argv[i + 1];
        if (a.rfind("--config=", 0) == 0) return a.substr(9);
    }
    return {};
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CliState s;
    try {
        // The config file is the base layer; flags bound below override it.
        const auto config_path = prescan_config(argc, argv);
        if (!config_path.empty()) s.config = load_config_file(config_path);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    s.placement = placement_name(s.config.placement);
    std::string network_file = s.config.network_file.value_or("");
    double v_init = -1.0;

    CLI::App app{"fraccap: fractional CPE-R battery modelling"};
    app.require_subcommand(1);
    app.add_option("--config", s.config_path, "JSON experiment config; flags override its values");

    auto* syn = app.add_subcommand("synthesize", "synthesize a Morrison network and write its table");
    add_model_options(syn, s);
    add_network_options(syn, s);
    syn->add_option("--out", s.network_out, "network file (default <output-dir>/network.txt)");
    syn->add_option("--output-dir", s.config.output_dir);

    auto* cyc = app.add_subcommand("cycle", "simulate constant-current cycling over a current ladder");
    add_model_options(cyc, s);
    add_network_options(cyc, s);
    add_protocol_options(cyc, s);
    cyc->add_option("--network", network_file, "network file (otherwise synthesized from the model)");
    cyc->add_option("--v-init", v_init, "initial terminal voltage (default v_h)");
    cyc->add_option("--currents", s.config.currents, "current ladder, A, in run order");
    cyc->add_option("--n-cycles", s.config.n_cycles);
    cyc->add_option("--dt", s.config.dt, "time step, s (0: quarter of the smallest branch RC)");
    cyc->add_option("--max-samples", s.config.max_samples_per_cycle, "trace samples kept per cycle");
    cyc->add_option("--output-dir", s.config.output_dir);

    auto* fit = app.add_subcommand("fit", "extract alpha, C_F and R_s from capacity and/or impedance data");
    add_protocol_options(fit, s);
    fit->add_option("--capacity", s.capacity_file, "capacity CSV (i_A,q_As)");
    fit->add_option("--impedance", s.impedance_file, "impedance CSV (f_Hz,re_ohm,im_ohm)");
    fit->add_option("--n-low", s.n_low, "lowest currents in the log-log fit");
    fit->add_option("--n-high", s.n_high, "highest currents in the R_s intercept fit");
    fit->add_option("--n-low-freq", s.n_low_freq, "lowest frequencies in the slope fit");
    fit->add_option("--n-high-freq", s.n_high_freq, "highest frequencies in the R_s asymptote");
    fit->add_flag("--no-rs-correction", s.no_rs_correction, "pure power-law capacity fit");
    fit->add_option("--csv-out", s.fit_csv_out, "also write the fits as CSV rows");

    auto* ing = app.add_subcommand("ingest", "turn a cycling log into a capacity curve");
    add_protocol_options(ing, s);
    ing->add_option("--log", s.log_file, "log CSV (t_s,v_V,i_A)");
    ing->add_option("--threshold", s.threshold, "relative current change that starts a new segment");
    ing->add_option("--v-tolerance", s.v_tolerance, "how close to v_l a complete discharge must end, V");
    ing->add_option("--out", s.ingest_out, "capacity CSV (default stdout)");

    auto* rep = app.add_subcommand("report", "Bode and Nyquist tables for a model and optional network");
    add_model_options(rep, s);
    rep->add_option("--network", network_file);
    rep->add_option("--f-min", s.config.band.f_min);
    rep->add_option("--f-max", s.config.band.f_max);
    rep->add_option("--points", s.report_points);
    rep->add_option("--output-dir", s.config.output_dir);

    auto* mc = app.add_subcommand("montecarlo", "uncertainty coverage of both fits on noisy synthetic data");
    add_model_options(mc, s);
    add_protocol_options(mc, s);
    mc->add_option("--currents", s.config.currents);
    mc->add_option("--trials", s.trials);
    mc->add_option("--noise", s.noise, "relative multiplicative noise");
    mc->add_option("--seed", s.config.seed);
    mc->add_option("--n-low", s.n_low);
    mc->add_option("--n-high", s.n_high);
    mc->add_option("--n-low-freq", s.n_low_freq);
    mc->add_option("--n-high-freq", s.n_high_freq);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        s.config.placement = parse_placement(s.placement);
        if (!network_file.empty()) s.config.network_file = network_file;
        if (v_init >= 0.0) s.config.v_init = v_init;
        if (*syn) return cmd_synthesize(s, out);
        if (*cyc) return cmd_cycle(s, out);
        if (*fit) return cmd_fit(s, out);
        if (*ing) return cmd_ingest(s, out, err);
        if (*rep) return cmd_report(s, out);
        if (*mc) return cmd_montecarlo(s, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InsufficientBranches& e) {
        err << "model error: " << e.what() << "\nhint: rerun with --n-half " << e.minimum_n_half() << '\n';
        return kExitModel;
    } catch (const DegenerateNetwork& e) {
        err << "model error: " << e.what() << '\n';
        return kExitModel;
    } catch (const ResistiveWindowExhausted& e) {
        err << "model error: " << e.what() << '\n';
        return kExitModel;
    } catch (const UnstableTimeStep& e) {
        err << "model error: " << e.what() << '\n';
        return kExitModel;
    } catch (const DomainError& e) {
        err << "model error: " << e.what() << '\n';
        return kExitModel;
    } catch (const FitError& e) {
        err << "fit error: " << e.what() << '\n';
        return kExitModel;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace fraccap
