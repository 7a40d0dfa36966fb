#include "fraccap/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

namespace fraccap {

namespace {

constexpr double kMaxAlpha = 1.05;
// Smallest exponent an impedance slope may yield before the element is
// treated as resistive.
constexpr double kMinAlpha = 0.01;
constexpr double kOneSigma = 0.6826894921370859;

double sq(double x) { return x * x; }

// Variance of f(slope, intercept) by first-order propagation with numerical
// partials.
template <class F>
double propagate(F f, const LineFit& line) {
    const double hs = 1e-6 * std::max(1.0, std::abs(line.slope));
    const double hb = 1e-6 * std::max(1.0, std::abs(line.intercept));
    const double ds = (f(line.slope + hs, line.intercept) - f(line.slope - hs, line.intercept)) / (2 * hs);
    const double db = (f(line.slope, line.intercept + hb) - f(line.slope, line.intercept - hb)) / (2 * hb);
    const double var = sq(ds * line.slope_se) + sq(db * line.intercept_se) + 2 * ds * db * line.covariance;
    return std::sqrt(std::max(var, 0.0));
}

}  // namespace

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw FitError("line fit needs at least 2 (x, y) pairs");
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += sq(x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw FitError("line fit needs at least 2 distinct x values");
    LineFit fit;
    fit.n = static_cast<int>(x.size());
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) ss += sq(y[i] - fit.intercept - fit.slope * x[i]);
    fit.residual_rms = std::sqrt(ss / n);
    if (fit.n > 2) {
        const double s2 = ss / (n - 2.0);
        fit.slope_se = std::sqrt(s2 / sxx);
        fit.intercept_se = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
        fit.covariance = -mx * s2 / sxx;
    }
    return fit;
}

double coverage_factor(int dof) {
    if (dof <= 0) return 1.0;
    const boost::math::students_t dist(static_cast<double>(dof));
    return boost::math::quantile(dist, 0.5 + kOneSigma / 2.0);
}

Measured fit_rs_intercept(const CapacityCurve& curve, int n_high_points) {
    curve.validate();
    const auto pts = curve.sorted_by_current();
    if (n_high_points < 2 || n_high_points > static_cast<int>(pts.size())) {
        throw FitError("R_s intercept fit needs 2 <= n_high_points <= " + std::to_string(pts.size()));
    }
    std::vector<double> x, y;
    for (auto it = pts.end() - n_high_points; it != pts.end(); ++it) {
        x.push_back(it->current);
        y.push_back(it->capacity);
    }
    const LineFit line = fit_line(x, y);
    if (!(line.slope < 0.0)) throw FitError("extrapolation invalid: capacity does not fall with current");
    const double i_x = -line.intercept / line.slope;
    if (!(i_x > pts.back().current)) {
        throw FitError("extrapolation invalid: x-intercept lies within the measured currents");
    }
    const double r_s = curve.delta_v / (2.0 * i_x);
    const double sigma_ix = propagate([](double s, double b) { return -b / s; }, line);
    return {r_s, r_s * sigma_ix / i_x * coverage_factor(line.n - 2)};
}

FitResult fit_capacity_curve(const CapacityCurve& curve, const CapacityFitOptions& options) {
    curve.validate();
    const auto pts = curve.sorted_by_current();
    const int n = options.n_low_points;
    if (n < 2 || n > static_cast<int>(pts.size())) {
        throw FitError("capacity fit needs 2 <= n_low_points <= " + std::to_string(pts.size()));
    }
    FitResult result;
    const double dv = curve.delta_v;
    if (options.correction == RsCorrection::Include) {
        result.r_s = options.r_s ? Measured{*options.r_s, 0.0} : fit_rs_intercept(curve, options.n_high_points);
    } else if (options.r_s) {
        result.r_s = {*options.r_s, 0.0};
    }
    const double r_s = options.correction == RsCorrection::Include ? result.r_s.value : 0.0;

    std::vector<double> x, log_q, log_window;
    for (int i = 0; i < n; ++i) {
        const auto& p = pts[static_cast<std::size_t>(i)];
        if (!(p.capacity > 0.0)) throw FitError("capacity fit needs positive capacities in the low-current window");
        const double window = dv - 2.0 * p.current * r_s;
        if (!(window > 0.0)) throw ResistiveWindowExhausted(p.current, dv, r_s);
        x.push_back(std::log(p.current));
        log_q.push_back(std::log(p.capacity));
        log_window.push_back(std::log(window / dv));
    }

    // Q = [C_F Gamma(a+1) / (3 - 2^a) (dV - 2 I Rs)]^(1/a) I^(1 - 1/a). Dividing
    // out the window factor leaves a pure power law in I whose slope fixes a;
    // iterate because the divisor depends on a.
    const auto slope_to_alpha = [](double s) { return 1.0 / (1.0 - s); };
    LineFit line = fit_line(x, log_q);
    if (r_s > 0.0) {
        double alpha = slope_to_alpha(line.slope);
        for (int iter = 0; iter < 200; ++iter) {
            std::vector<double> y(log_q.size());
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = log_q[i] - log_window[i] / alpha;
            line = fit_line(x, y);
            const double next = slope_to_alpha(line.slope);
            if (!(next > 0.0) || !std::isfinite(next)) break;
            const bool converged = std::abs(next - alpha) <= 1e-15 * std::abs(alpha);
            alpha = next;
            if (converged) break;
        }
    }
    if (!(line.slope < 1.0) || slope_to_alpha(line.slope) > kMaxAlpha) {
        std::ostringstream os;
        os << "non-physical curve: log-log slope " << line.slope << " implies alpha > " << kMaxAlpha;
        throw FitError(os.str());
    }

    const auto c_f_of = [dv](double s, double b) {
        const double a = 1.0 / (1.0 - s);
        return std::exp(a * b) * (3.0 - std::pow(2.0, a)) / (std::tgamma(a + 1.0) * dv);
    };
    const double cover = coverage_factor(line.n - 2);
    result.alpha = {slope_to_alpha(line.slope), line.slope_se / sq(1.0 - line.slope) * cover};
    result.c_f = {c_f_of(line.slope, line.intercept), propagate(c_f_of, line) * cover};
    result.n_points_used = n;
    result.residual_rms = line.residual_rms;
    result.alpha_overshoot = result.alpha.value > 1.0;
    return result;
}

FitResult fit_impedance_spectrum(const ImpedanceSpectrum& spectrum, const ImpedanceFitOptions& options) {
    spectrum.validate();
    const auto& s = spectrum.samples;
    const int total = static_cast<int>(s.size());
    if (options.n_low_freqs < 2 || options.n_high_freqs < 1) {
        throw FitError("impedance fit needs n_low_freqs >= 2 and n_high_freqs >= 1");
    }
    if (options.n_low_freqs > total || options.n_high_freqs > total) {
        throw FitError("spectrum has " + std::to_string(total) + " samples, shorter than the requested windows");
    }
    std::vector<double> x, y;
    for (int i = 0; i < options.n_low_freqs; ++i) {
        x.push_back(std::log(s[static_cast<std::size_t>(i)].frequency));
        y.push_back(std::log(std::abs(s[static_cast<std::size_t>(i)].z)));
    }
    const LineFit line = fit_line(x, y);
    const double alpha = -line.slope;
    if (!(alpha > kMinAlpha) || alpha > kMaxAlpha) {
        std::ostringstream os;
        os << "non-physical spectrum: low-frequency log|Z| slope " << line.slope << " gives alpha outside ("
           << kMinAlpha << ", " << kMaxAlpha << "]";
        throw FitError(os.str());
    }
    // |Z_cpe| = 1 / (C_F (2 pi f)^a)  =>  ln|Z| = -ln C_F - a ln(2 pi) - a ln f
    const auto c_f_of = [](double slope, double b) { return std::exp(-b + slope * std::log(2.0 * std::numbers::pi)); };
    const double cover = coverage_factor(line.n - 2);

    FitResult result;
    result.alpha = {alpha, line.slope_se * cover};
    result.c_f = {c_f_of(line.slope, line.intercept), propagate(c_f_of, line) * cover};
    std::vector<double> high;
    for (int i = total - options.n_high_freqs; i < total; ++i) high.push_back(std::abs(s[static_cast<std::size_t>(i)].z));
    const auto nh = static_cast<double>(high.size());
    const double mean = std::accumulate(high.begin(), high.end(), 0.0) / nh;
    double sigma = 0.0;
    if (high.size() > 1) {
        double ss = 0.0;
        for (double v : high) ss += sq(v - mean);
        sigma = std::sqrt(ss / (nh - 1.0) / nh) * coverage_factor(static_cast<int>(high.size()) - 1);
    }
    result.r_s = {mean, sigma};
    result.n_points_used = options.n_low_freqs;
    result.residual_rms = line.residual_rms;
    result.alpha_overshoot = alpha > 1.0;
    return result;
}

CrossValidation cross_validate(const FitResult& cap, const FitResult& imp) {
    CrossValidation cv;
    cv.alpha_difference = cap.alpha.value - imp.alpha.value;
    cv.alpha_combined_sigma = std::hypot(cap.alpha.sigma, imp.alpha.sigma);
    if (cv.alpha_combined_sigma > 0.0) {
        cv.alpha_discrepancy_sigmas = std::abs(cv.alpha_difference) / cv.alpha_combined_sigma;
    } else {
        cv.alpha_discrepancy_sigmas = cv.alpha_difference == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    cv.r_s_relative_difference = imp.r_s.value != 0.0 ? (cap.r_s.value - imp.r_s.value) / imp.r_s.value
                                                      : (cap.r_s.value == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    cv.c_f_ratio = cap.c_f.value / imp.c_f.value;
    return cv;
}

std::vector<double> peukert_products(const std::vector<CapacityPoint>& points, double exponent) {
    std::vector<double> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(p.discharge_time() * std::pow(p.current, exponent));
    return out;
}

std::string format_uncertain(double value, double sigma) {
    char buf[64];
    if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(value)) {
        std::snprintf(buf, sizeof buf, "%.6g", value);
        return buf;
    }
    const int d = static_cast<int>(std::floor(std::log10(sigma)));
    const double lead3 = sigma / std::pow(10.0, d - 2);
    const int place = lead3 < 355.0 ? d - 1 : d;  // power of ten of the last quoted digit
    const long digits = std::lround(sigma / std::pow(10.0, place));

    const double mag = std::abs(value);
    int exponent = 0;
    if (mag >= 1e3 || (mag > 0.0 && mag < 1e-2)) exponent = static_cast<int>(std::floor(std::log10(mag)));
    const int rel = place - exponent;
    const double mantissa = value / std::pow(10.0, exponent);
    std::string out;
    if (rel <= 0) {
        std::snprintf(buf, sizeof buf, "%.*f(%ld)", -rel, mantissa, digits);
    } else {
        const double scale = std::pow(10.0, rel);
        std::snprintf(buf, sizeof buf, "%.0f(%.0f)", std::round(mantissa / scale) * scale, digits * scale);
    }
    out = buf;
    if (exponent != 0) out += "e" + std::to_string(exponent);
    return out;
}

}  // namespace fraccap
