#pragma once

// Morrison RC-ladder realization of a constant-phase element: 2N+1 parallel
// series-RC branches with logarithmically spaced time constants, shunted by a
// terminating capacitor that stands in for every faster branch.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fraccap/cpe.hpp"

namespace fraccap {

struct FrequencyBand {
    double f_min = 5e-7;
    double f_max = 2.0;

    double center() const;
    void validate() const;
};

struct MorrisonSpec {
    CpeParams target;
    int n_half = 30;
    double k_f = 1.4;

    /// Branch resistance multiplier k = k_f^alpha.
    double k() const;
    /// Branch capacitance multiplier k^(1/alpha - 1).
    double capacitance_ratio() const;
    void validate() const;
};

/// Where the ladder's time constants sit relative to the designed band.
enum class Placement {
    /// Center branch time constant at 1 / (2 pi f_center) of the band.
    BandCentered,
    /// Fastest branch time constant fixed at anchor_dt / 0.25, so explicit
    /// stepping at anchor_dt runs at a quarter of the smallest RC constant.
    StepAnchored,
};

struct SynthesisOptions {
    Placement placement = Placement::BandCentered;
    double anchor_dt = 1.0;
    int calibration_points = 21;
};

class MorrisonNetwork {
public:
    struct Branch {
        int index;
        double r;
        double c;

        double tau() const noexcept { return r * c; }
    };

    /// Throws DomainError on non-positive elements or time constants that do
    /// not strictly increase with the branch index.
    MorrisonNetwork(std::vector<Branch> branches, double c_t, CpeParams target,
                    std::optional<FrequencyBand> designed_band = std::nullopt);

    const std::vector<Branch>& branches() const noexcept { return branches_; }
    double c_t() const noexcept { return c_t_; }
    const CpeParams& target() const noexcept { return target_; }
    const std::optional<FrequencyBand>& designed_band() const noexcept { return designed_band_; }

    /// Smallest branch RC time constant; bounds the explicit time step.
    double tau_min() const;
    /// Center (index 0) branch, if present.
    std::optional<Branch> center_branch() const;
    double total_capacitance() const;

private:
    std::vector<Branch> branches_;
    double c_t_;
    CpeParams target_;
    std::optional<FrequencyBand> designed_band_;
};

/// Smallest N for which 2N+1 branches at resolution k_f cover the band.
int minimum_half_count(const FrequencyBand& band, double k_f);

/// Build the ladder for `spec` and calibrate (R_0, C_0) against the target CPE.
///
/// The time-constant placement fixes tau_0 = R_0 C_0; the remaining scale is
/// the least-squares fit of log|Z_net| to log|Z_cpe| over the central decade of
/// the band. Scaling every C by s and every R by 1/s scales Z_net by 1/s, so
/// that fit is the mean log-magnitude offset.
///
/// Throws DegenerateNetwork for alpha = 1 and InsufficientBranches when the
/// band needs more than 2N+1 branches.
MorrisonNetwork synthesize(const MorrisonSpec& spec, const FrequencyBand& band = {},
                           const SynthesisOptions& options = {});

/// Terminating capacitor C_{-N} q / (q - 1) with q = k^(1/alpha - 1).
double terminating_capacitance(double c_fastest, double capacitance_ratio);

Complex network_impedance(const MorrisonNetwork& net, double frequency);

struct ApproximationRow {
    double frequency;
    double mag_net;
    double mag_cpe;
    double phase_net_deg;
    double phase_cpe_deg;
    double mag_err_pct;    // 100 (|Z_net| / |Z_cpe| - 1)
    double phase_err_deg;  // phase_net - phase_cpe
};

struct ApproximationReport {
    std::vector<ApproximationRow> rows;

    double max_abs_mag_err_pct() const;
    double max_abs_phase_err_deg() const;
};

/// Compare the network against its target CPE on a log-spaced grid.
ApproximationReport approximation_report(const MorrisonNetwork& net, const FrequencyBand& band,
                                         int grid_points);

/// Log-spaced grid including both ends.
std::vector<double> log_grid(double lo, double hi, int points);

/// The central `fraction` of a band on a log scale.
FrequencyBand central_band(const FrequencyBand& band, double fraction);

// Plain-text network table:
//   # morrison-network alpha=<a> c_f=<C_F> c_t=<C_t> [f_min_hz=<f> f_max_hz=<f>]
//   index,r_ohm,c_farad
//   <i>,<R_i>,<C_i>
void write_network(std::ostream& os, const MorrisonNetwork& net);
MorrisonNetwork read_network(std::istream& is, const std::string& source_name = "<network>");
void save_network(const std::string& path, const MorrisonNetwork& net);
MorrisonNetwork load_network(const std::string& path);

}  // namespace fraccap
