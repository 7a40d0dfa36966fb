#include "fraccap/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace fraccap {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

}  // namespace

void ExperimentConfig::validate_model() const {
    if (network_file) return;
    require(alpha > 0.0 && alpha <= 1.0, "alpha must satisfy 0 < alpha <= 1");
    require(c_f > 0.0, "c_f must be positive");
    require(r_s >= 0.0, "r_s must be >= 0");
}

void ExperimentConfig::validate_synthesis() const {
    require(alpha > 0.0 && alpha <= 1.0, "alpha must satisfy 0 < alpha <= 1");
    require(c_f > 0.0, "c_f must be positive");
    require(n_half >= 1, "n_half must be >= 1");
    require(k_f > 1.0, "k_f must exceed 1");
    require(band.f_min > 0.0 && band.f_max > band.f_min, "band needs 0 < f_min < f_max");
    require(anchor_dt > 0.0, "anchor_dt must be positive");
}

void ExperimentConfig::validate_cycling() const {
    validate_model();
    if (!network_file) validate_synthesis();
    require(r_s >= 0.0, "r_s must be >= 0");
    require(v_h > v_l, "v_h must exceed v_l");
    require(!currents.empty(), "current ladder is empty");
    for (double i : currents) require(i > 0.0, "ladder currents must be positive");
    require(n_cycles >= 1, "n_cycles must be >= 1");
    require(dt >= 0.0, "dt must be >= 0 (0 selects the default)");
    require(max_samples_per_cycle >= 4, "max_samples_per_cycle must be >= 4");
    if (v_init) require(*v_init >= v_l && *v_init <= v_h, "v_init must lie within [v_l, v_h]");
}

Placement parse_placement(const std::string& name) {
    if (name == "centered") return Placement::BandCentered;
    if (name == "step-anchored") return Placement::StepAnchored;
    throw ConfigError("unknown placement '" + name + "' (expected centered or step-anchored)");
}

std::string placement_name(Placement p) { return p == Placement::BandCentered ? "centered" : "step-anchored"; }

void apply_config_json(ExperimentConfig& c, const std::string& text, const std::string& source) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(source + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(source + ": top level must be an object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "alpha") c.alpha = value.get<double>();
            else if (key == "c_f") c.c_f = value.get<double>();
            else if (key == "r_s") c.r_s = value.get<double>();
            else if (key == "network_file") c.network_file = value.get<std::string>();
            else if (key == "n_half") c.n_half = value.get<int>();
            else if (key == "k_f") c.k_f = value.get<double>();
            else if (key == "f_min") c.band.f_min = value.get<double>();
            else if (key == "f_max") c.band.f_max = value.get<double>();
            else if (key == "placement") c.placement = parse_placement(value.get<std::string>());
            else if (key == "anchor_dt") c.anchor_dt = value.get<double>();
            else if (key == "v_h") c.v_h = value.get<double>();
            else if (key == "v_l") c.v_l = value.get<double>();
            else if (key == "v_init") c.v_init = value.get<double>();
            else if (key == "currents") c.currents = value.get<std::vector<double>>();
            else if (key == "n_cycles") c.n_cycles = value.get<int>();
            else if (key == "dt") c.dt = value.get<double>();
            else if (key == "max_samples_per_cycle") c.max_samples_per_cycle = value.get<std::size_t>();
            else if (key == "output_dir") c.output_dir = value.get<std::string>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else throw ConfigError(source + ": unknown key '" + key + "'");
        }
    } catch (const nlohmann::json::type_error& e) {
        throw ConfigError(source + ": " + e.what());
    }
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    ExperimentConfig c;
    apply_config_json(c, ss.str(), path);
    return c;
}

InstrumentLog read_generic_log(std::istream& is, const std::string& source) {
    InstrumentLog log;
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 3) throw ParseError(source, line_no, "expected 3 columns, got " + std::to_string(cells.size()));
        if (!header) {
            if (cells[0] != "t_s" || cells[2] != "i_A" || cells[1].rfind("v_", 0) != 0) {
                throw ParseError(source, line_no, "expected header 't_s,v_V,i_A'");
            }
            header = true;
            continue;
        }
        LogRow row{parse_number(cells[0], source, line_no), parse_number(cells[1], source, line_no),
                   parse_number(cells[2], source, line_no)};
        if (!log.rows.empty() && row.t < log.rows.back().t) throw ParseError(source, line_no, "timestamps decrease");
        log.rows.push_back(row);
    }
    if (!header) throw ParseError(source, line_no, "missing header row");
    return log;
}

IngestResult ingest_log(const InstrumentLog& log, const CycleProtocol& protocol, const IngestOptions& opt) {
    IngestResult result;
    result.curve.delta_v = protocol.delta_v();
    const auto& rows = log.rows;
    if (rows.empty()) {
        result.warnings.push_back("log is empty");
        return result;
    }
    for (std::size_t k = 1; k < rows.size(); ++k) {
        if (rows[k].t < rows[k - 1].t) throw DomainError("log timestamps must be non-decreasing");
    }

    std::vector<double> steps;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        if (rows[k].t > rows[k - 1].t) steps.push_back(rows[k].t - rows[k - 1].t);
    }
    if (!steps.empty()) {
        auto sorted = steps;
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
        const double median = sorted[sorted.size() / 2];
        for (std::size_t k = 1; k < rows.size(); ++k) {
            const double gap = rows[k].t - rows[k - 1].t;
            if (gap > opt.gap_factor * median) {
                std::ostringstream os;
                os << "gap of " << gap << " s before t = " << rows[k].t << " s (median step " << median << " s)";
                result.warnings.push_back(os.str());
            }
        }
    }

    struct Segment {
        std::size_t first, last;
        double mean_current;
    };
    std::vector<Segment> segments;
    std::size_t start = 0;
    const auto close = [&](std::size_t end) {
        double sum = 0.0;
        for (std::size_t k = start; k <= end; ++k) sum += rows[k].i;
        segments.push_back({start, end, sum / static_cast<double>(end - start + 1)});
    };
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const double a = rows[k - 1].i, b = rows[k].i;
        if (std::abs(b - a) > opt.setpoint_threshold * std::max(std::abs(a), std::abs(b))) {
            close(k - 1);
            start = k;
        }
    }
    close(rows.size() - 1);

    // Setpoints in order of first appearance; last discharge of each wins.
    struct Setpoint {
        double magnitude;
        std::optional<Segment> final_discharge;
    };
    std::vector<Setpoint> setpoints;
    for (const auto& seg : segments) {
        if (!(seg.mean_current < -opt.idle_current)) continue;
        const double mag = -seg.mean_current;
        auto it = std::find_if(setpoints.begin(), setpoints.end(), [&](const Setpoint& s) {
            return std::abs(s.magnitude - mag) <= opt.setpoint_threshold * std::max(s.magnitude, mag);
        });
        if (it == setpoints.end()) {
            setpoints.push_back({mag, seg});
        } else {
            it->final_discharge = seg;
        }
    }
    if (setpoints.empty()) result.warnings.push_back("no discharge segments found");

    for (const auto& sp : setpoints) {
        const auto& seg = *sp.final_discharge;
        std::ostringstream label;
        label << sp.magnitude << " A";
        if (rows[seg.last].v > protocol.v_l + opt.v_tolerance) {
            result.warnings.push_back("final discharge at " + label.str() + " does not reach v_l; current omitted");
            continue;
        }
        if (seg.last == seg.first) {
            result.warnings.push_back("final discharge at " + label.str() + " has a single sample; current omitted");
            continue;
        }
        double q = 0.0;
        for (std::size_t k = seg.first + 1; k <= seg.last; ++k) {
            q += 0.5 * (std::abs(rows[k].i) + std::abs(rows[k - 1].i)) * (rows[k].t - rows[k - 1].t);
        }
        const auto& pts = result.curve.points;
        if (std::any_of(pts.begin(), pts.end(), [&](const CapacityPoint& p) { return p.current == sp.magnitude; })) {
            result.warnings.push_back("duplicate setpoint " + label.str() + "; later one omitted");
            continue;
        }
        result.curve.points.push_back({sp.magnitude, q});
    }
    return result;
}

CapacityCurve synthetic_capacity_curve(const CircuitModel& model, double v_h, double v_l,
                                       const std::vector<double>& currents) {
    CapacityCurve curve;
    curve.delta_v = v_h - v_l;
    for (double i : currents) curve.points.push_back(analytic_capacity(model, {i, v_h, v_l}));
    return curve;
}

ImpedanceSpectrum synthetic_spectrum(const CircuitModel& model, const std::vector<double>& frequencies) {
    ImpedanceSpectrum s;
    for (double f : frequencies) s.samples.push_back({f, model_impedance(model, f)});
    return s;
}

std::vector<double> spectrum_frequencies(double f_min, double f_max, int per_decade) {
    const int points = static_cast<int>(std::lround(std::log10(f_max / f_min) * per_decade)) + 1;
    return log_grid(f_min, f_max, points);
}

namespace {

bool covers(const Measured& m, double truth) { return std::abs(m.value - truth) <= m.sigma; }

}  // namespace

CoverageStudy capacity_coverage(const CircuitModel& truth, const CapacityCurve& clean, const CapacityFitOptions& fit,
                                double noise, int trials, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    CoverageStudy study;
    for (int t = 0; t < trials; ++t) {
        CapacityCurve noisy = clean;
        for (auto& p : noisy.points) p.capacity *= 1.0 + noise * gauss(rng);
        ++study.trials;
        FitResult r;
        try {
            r = fit_capacity_curve(noisy, fit);
        } catch (const std::exception&) {
            continue;
        }
        study.alpha_covered += covers(r.alpha, truth.cpe.alpha);
        study.c_f_covered += covers(r.c_f, truth.cpe.c_f);
        study.r_s_covered += covers(r.r_s, truth.r_s);
    }
    return study;
}

CoverageStudy impedance_coverage(const CircuitModel& truth, const ImpedanceSpectrum& clean,
                                 const ImpedanceFitOptions& fit, double noise, int trials, std::uint64_t seed,
                                 double tolerance) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    CoverageStudy study;
    for (int t = 0; t < trials; ++t) {
        ImpedanceSpectrum noisy = clean;
        for (auto& s : noisy.samples) s.z *= 1.0 + noise * gauss(rng);
        ++study.trials;
        FitResult r;
        try {
            r = fit_impedance_spectrum(noisy, fit);
        } catch (const std::exception&) {
            continue;
        }
        study.alpha_covered += covers(r.alpha, truth.cpe.alpha);
        study.c_f_covered += covers(r.c_f, truth.cpe.c_f);
        study.r_s_covered += covers(r.r_s, truth.r_s);
        const auto rel = [](double a, double b) { return std::abs(a / b - 1.0); };
        study.within_tolerance += rel(r.alpha.value, truth.cpe.alpha) <= tolerance &&
                                  rel(r.c_f.value, truth.cpe.c_f) <= tolerance && rel(r.r_s.value, truth.r_s) <= tolerance;
    }
    return study;
}

void write_fit_report(std::ostream& os, const std::string& prefix, const FitResult& fit) {
    char buf[64];
    const auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.10g", v);
        return std::string(buf);
    };
    os << prefix << ".alpha = " << format_uncertain(fit.alpha.value, fit.alpha.sigma) << '\n'
       << prefix << ".c_f = " << format_uncertain(fit.c_f.value, fit.c_f.sigma) << '\n'
       << prefix << ".r_s = " << format_uncertain(fit.r_s.value, fit.r_s.sigma) << '\n'
       << prefix << ".alpha_value = " << num(fit.alpha.value) << '\n'
       << prefix << ".alpha_sigma = " << num(fit.alpha.sigma) << '\n'
       << prefix << ".c_f_value = " << num(fit.c_f.value) << '\n'
       << prefix << ".c_f_sigma = " << num(fit.c_f.sigma) << '\n'
       << prefix << ".r_s_value = " << num(fit.r_s.value) << '\n'
       << prefix << ".r_s_sigma = " << num(fit.r_s.sigma) << '\n'
       << prefix << ".peukert_n = " << num(1.0 / fit.alpha.value) << '\n'
       << prefix << ".n_points_used = " << fit.n_points_used << '\n'
       << prefix << ".residual_rms = " << num(fit.residual_rms) << '\n';
    if (fit.alpha_overshoot) os << prefix << ".warning = alpha exceeds 1\n";
}

void write_cross_validation(std::ostream& os, const CrossValidation& cv) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "cross.alpha_difference = %.6g\ncross.alpha_combined_sigma = %.6g\n"
                  "cross.alpha_discrepancy_sigmas = %.4g\ncross.r_s_relative_difference = %.6g\n"
                  "cross.c_f_ratio = %.6g\n",
                  cv.alpha_difference, cv.alpha_combined_sigma, cv.alpha_discrepancy_sigmas,
                  cv.r_s_relative_difference, cv.c_f_ratio);
    os << buf;
}

std::string fit_csv_header() {
    return "method,alpha,alpha_sigma,c_f,c_f_sigma,r_s,r_s_sigma,n_points_used,residual_rms";
}

std::string fit_csv_row(const std::string& method, const FitResult& f) {
    char buf[320];
    std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%d,%.10g", method.c_str(), f.alpha.value,
                  f.alpha.sigma, f.c_f.value, f.c_f.sigma, f.r_s.value, f.r_s.sigma, f.n_points_used, f.residual_rms);
    return buf;
}

}  // namespace fraccap
