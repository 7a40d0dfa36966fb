#pragma once

// Parameter extraction for the CPE-R model from capacity-vs-current curves
// and from impedance spectra.
//
// Reported uncertainties are 1-sigma intervals: the OLS standard error scaled
// by the Student-t quantile at 68.27% two-sided coverage for the residual
// degrees of freedom, so short windows (4 points -> 2 dof) still cover the
// true value about 68% of the time.

#include <optional>
#include <string>
#include <vector>

#include "fraccap/cpe.hpp"
#include "fraccap/datasets.hpp"

namespace fraccap {

struct Measured {
    double value = 0.0;
    double sigma = 0.0;
};

struct FitResult {
    Measured alpha;
    Measured c_f;
    Measured r_s;
    int n_points_used = 0;
    /// RMS residual in the space the regression ran in (log-log).
    double residual_rms = 0.0;
    /// alpha fitted above 1 (allowed up to 1.05).
    bool alpha_overshoot = false;
};

/// Ordinary least squares y = intercept + slope x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double intercept_se = 0.0;
    double covariance = 0.0;  // cov(slope, intercept)
    double residual_rms = 0.0;
    int n = 0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// 68.27% two-sided Student-t quantile for `dof` degrees of freedom; 1 for
/// dof <= 0 (no scatter estimate available).
double coverage_factor(int dof);

enum class RsCorrection {
    /// Divide out the (dV - 2 I0 Rs)^(1/alpha) factor before the log-log fit.
    Include,
    /// Pure power law Q ~ I0^(1 - 1/alpha); C_F from the intercept with dV alone.
    Ignore,
};

struct CapacityFitOptions {
    int n_low_points = 4;
    /// Highest-current points fed to fit_rs_intercept when r_s is not given.
    int n_high_points = 3;
    std::optional<double> r_s;
    RsCorrection correction = RsCorrection::Include;
};

/// Extract (alpha, C_F, Rs) from the lowest-current points of a capacity curve.
/// log Q against log I0 has slope 1 - 1/alpha; C_F follows from the fitted
/// line's value at I0 = 1 A.
///
/// Throws FitError when the slope is >= 0 or fewer than 2 points are usable.
FitResult fit_capacity_curve(const CapacityCurve& curve, const CapacityFitOptions& options = {});

/// Series resistance from the x-intercept I_x of a straight line through the
/// highest-current points: Rs = dV / (2 I_x).
Measured fit_rs_intercept(const CapacityCurve& curve, int n_high_points = 3);

struct ImpedanceFitOptions {
    int n_low_freqs = 7;
    int n_high_freqs = 3;
};

/// alpha and C_F from the low-frequency log|Z| slope, Rs from the mean |Z|
/// over the highest frequencies.
FitResult fit_impedance_spectrum(const ImpedanceSpectrum& spectrum, const ImpedanceFitOptions& options = {});

struct CrossValidation {
    double alpha_difference = 0.0;  // capacity - impedance
    double alpha_combined_sigma = 0.0;
    /// |alpha difference| / combined sigma; infinite when both sigmas vanish
    /// and the alphas differ.
    double alpha_discrepancy_sigmas = 0.0;
    double r_s_relative_difference = 0.0;  // (capacity - impedance) / impedance
    double c_f_ratio = 1.0;                 // capacity / impedance
};

CrossValidation cross_validate(const FitResult& capacity_fit, const FitResult& impedance_fit);

/// T I0^n for each point.
std::vector<double> peukert_products(const std::vector<CapacityPoint>& points, double exponent);

/// "0.9711(17)" style: the uncertainty in units of the last quoted digit,
/// two digits when its leading three digits are below 355, one otherwise.
/// Magnitudes >= 1e3 or < 1e-2 switch to "9.20(13)e3".
std::string format_uncertain(double value, double sigma);

}  // namespace fraccap
