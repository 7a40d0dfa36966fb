#pragma once

// Experiment configuration, instrument-log ingestion and synthetic datasets.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraccap/cpe.hpp"
#include "fraccap/datasets.hpp"
#include "fraccap/fitting.hpp"
#include "fraccap/morrison.hpp"

namespace fraccap {

/// Invalid or inconsistent configuration; maps to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline const std::vector<double> kPaperCurrentLadder = {5.0, 2.0, 1.0, 0.5, 0.2, 0.1, 0.05};

struct ExperimentConfig {
    // model
    double alpha = 0.9711;
    double c_f = 9203.0;
    double r_s = 0.0631;
    std::optional<std::string> network_file;

    // network synthesis
    int n_half = 30;
    double k_f = 1.4;
    FrequencyBand band;
    Placement placement = Placement::BandCentered;
    double anchor_dt = 1.0;

    // protocol
    double v_h = 4.30;
    double v_l = 3.00;
    std::optional<double> v_init;
    std::vector<double> currents = kPaperCurrentLadder;
    int n_cycles = 2;
    /// 0 selects a quarter of the network's smallest time constant.
    double dt = 0.0;
    std::size_t max_samples_per_cycle = 20000;

    std::string output_dir = ".";
    std::uint64_t seed = 20211;

    CircuitModel model() const { return {{alpha, c_f}, r_s}; }
    MorrisonSpec morrison_spec() const { return {{alpha, c_f}, n_half, k_f}; }
    SynthesisOptions synthesis_options() const { return {placement, anchor_dt, 21}; }
    CycleProtocol protocol(double i0) const { return {i0, v_h, v_l}; }

    void validate_model() const;
    void validate_synthesis() const;
    void validate_cycling() const;
};

/// Overlay the keys present in a JSON object onto `config`. Unknown keys are
/// rejected.
void apply_config_json(ExperimentConfig& config, const std::string& json_text, const std::string& source = "<config>");
ExperimentConfig load_config_file(const std::string& path);

Placement parse_placement(const std::string& name);
std::string placement_name(Placement p);

struct LogRow {
    double t;
    double v;
    double i;
};

struct InstrumentLog {
    std::vector<LogRow> rows;
};

/// Generic three-column log: header t_s,<voltage column>,i_A then rows.
/// Vendor formats plug in as alternative readers with the same signature.
using LogReader = std::function<InstrumentLog(std::istream&, const std::string&)>;
InstrumentLog read_generic_log(std::istream& is, const std::string& source = "<log>");

struct IngestOptions {
    /// A new segment starts when |dI| between rows exceeds this fraction of the
    /// larger magnitude.
    double setpoint_threshold = 0.10;
    /// A discharge is complete when it ends within this of v_l.
    double v_tolerance = 0.005;
    /// Time steps longer than this multiple of the median step are flagged.
    double gap_factor = 10.0;
    /// Currents below this magnitude count as idle.
    double idle_current = 1e-6;
};

struct IngestResult {
    CapacityCurve curve;
    std::vector<std::string> warnings;
};

/// Segment a cycling log by current setpoint and integrate |I| over the final
/// complete discharge at each setpoint (trapezoidal rule on the timestamps).
/// Setpoints without a complete final discharge are omitted with a warning.
IngestResult ingest_log(const InstrumentLog& log, const CycleProtocol& protocol, const IngestOptions& options = {});

// Synthetic datasets from the closed forms.
CapacityCurve synthetic_capacity_curve(const CircuitModel& model, double v_h, double v_l,
                                       const std::vector<double>& currents);
ImpedanceSpectrum synthetic_spectrum(const CircuitModel& model, const std::vector<double>& frequencies);
/// Frequencies of the measured spectrum: log-spaced at `per_decade` from
/// f_min to f_max.
std::vector<double> spectrum_frequencies(double f_min = 5e-7, double f_max = 2.0, int per_decade = 5);

struct CoverageStudy {
    int trials = 0;
    int alpha_covered = 0;
    int c_f_covered = 0;
    int r_s_covered = 0;
    int within_tolerance = 0;  // all parameters inside the recovery tolerance

    double fraction(int count) const { return trials > 0 ? static_cast<double>(count) / trials : 0.0; }
};

/// Fit `trials` copies of the capacity curve with multiplicative Gaussian
/// noise of relative size `noise`, counting how often the 1-sigma intervals
/// cover the generating parameters.
CoverageStudy capacity_coverage(const CircuitModel& truth, const CapacityCurve& clean, const CapacityFitOptions& fit,
                                double noise, int trials, std::uint64_t seed);
CoverageStudy impedance_coverage(const CircuitModel& truth, const ImpedanceSpectrum& clean,
                                 const ImpedanceFitOptions& fit, double noise, int trials, std::uint64_t seed,
                                 double tolerance = 0.01);

/// Flat key-value report of a fit.
void write_fit_report(std::ostream& os, const std::string& prefix, const FitResult& fit);
void write_cross_validation(std::ostream& os, const CrossValidation& cv);
std::string fit_csv_header();
std::string fit_csv_row(const std::string& method, const FitResult& fit);

}  // namespace fraccap
