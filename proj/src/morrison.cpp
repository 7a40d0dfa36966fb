#include "fraccap/morrison.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

namespace fraccap {

double FrequencyBand::center() const { return std::sqrt(f_min * f_max); }

void FrequencyBand::validate() const {
    if (!(f_min > 0.0) || !(f_max > f_min) || !std::isfinite(f_max)) {
        std::ostringstream os;
        os << "frequency band needs 0 < f_min < f_max, got [" << f_min << ", " << f_max << "]";
        throw DomainError(os.str());
    }
}

double MorrisonSpec::k() const { return std::pow(k_f, target.alpha); }

double MorrisonSpec::capacitance_ratio() const { return std::pow(k(), 1.0 / target.alpha - 1.0); }

void MorrisonSpec::validate() const {
    target.validate();
    if (n_half < 1) throw DomainError("Morrison network needs n_half >= 1");
    if (!(k_f > 1.0)) throw DomainError("Morrison frequency multiplier k_f must exceed 1");
}

MorrisonNetwork::MorrisonNetwork(std::vector<Branch> branches, double c_t, CpeParams target,
                                 std::optional<FrequencyBand> designed_band)
    : branches_(std::move(branches)), c_t_(c_t), target_(target), designed_band_(designed_band) {
    target_.validate();
    if (!(c_t_ > 0.0) || !std::isfinite(c_t_)) throw DomainError("terminating capacitance must be positive");
    for (std::size_t i = 0; i < branches_.size(); ++i) {
        const auto& b = branches_[i];
        if (!(b.r > 0.0) || !(b.c > 0.0) || !std::isfinite(b.r) || !std::isfinite(b.c)) {
            throw DomainError("branch " + std::to_string(b.index) + " has a non-positive element");
        }
        if (i > 0 && !(b.tau() > branches_[i - 1].tau())) {
            throw DomainError("branch time constants must strictly increase with index");
        }
    }
    if (designed_band_) designed_band_->validate();
}

double MorrisonNetwork::tau_min() const {
    if (branches_.empty()) return std::numeric_limits<double>::infinity();
    return branches_.front().tau();
}

std::optional<MorrisonNetwork::Branch> MorrisonNetwork::center_branch() const {
    for (const auto& b : branches_) {
        if (b.index == 0) return b;
    }
    return std::nullopt;
}

double MorrisonNetwork::total_capacitance() const {
    double sum = c_t_;
    for (const auto& b : branches_) sum += b.c;
    return sum;
}

int minimum_half_count(const FrequencyBand& band, double k_f) {
    band.validate();
    return static_cast<int>(std::ceil(std::log(band.f_max / band.f_min) / (2.0 * std::log(k_f)) - 1e-12));
}

double terminating_capacitance(double c_fastest, double capacitance_ratio) {
    return c_fastest * capacitance_ratio / (capacitance_ratio - 1.0);
}

namespace {

MorrisonNetwork build_ladder(const MorrisonSpec& spec, double tau0, double c0, const FrequencyBand& band) {
    const double k = spec.k();
    const double q = spec.capacitance_ratio();
    const double r0 = tau0 / c0;
    std::vector<MorrisonNetwork::Branch> branches;
    branches.reserve(static_cast<std::size_t>(2 * spec.n_half + 1));
    for (int i = -spec.n_half; i <= spec.n_half; ++i) {
        branches.push_back({i, r0 * std::pow(k, i), c0 * std::pow(q, i)});
    }
    const double c_t = terminating_capacitance(branches.front().c, q);
    return MorrisonNetwork(std::move(branches), c_t, spec.target, band);
}

}  // namespace

MorrisonNetwork synthesize(const MorrisonSpec& spec, const FrequencyBand& band, const SynthesisOptions& options) {
    spec.validate();
    band.validate();
    if (spec.target.alpha == 1.0) {
        throw DegenerateNetwork("degenerate: alpha = 1 collapses the branch capacitances; use an ideal capacitor");
    }
    const int needed = minimum_half_count(band, spec.k_f);
    if (spec.n_half < needed) throw InsufficientBranches(spec.n_half, needed);
    if (options.calibration_points < 2) throw DomainError("calibration needs at least 2 grid points");

    double tau0 = 0.0;
    switch (options.placement) {
        case Placement::BandCentered:
            tau0 = 1.0 / (2.0 * std::numbers::pi * band.center());
            break;
        case Placement::StepAnchored:
            if (!(options.anchor_dt > 0.0)) throw DomainError("anchor time step must be positive");
            // tau_i = tau_0 k_f^i, so tau_{-N} = 4 dt fixes tau_0.
            tau0 = 4.0 * options.anchor_dt * std::pow(spec.k_f, spec.n_half);
            break;
    }

    const auto unit = build_ladder(spec, tau0, 1.0, band);
    const double log_center = std::log10(band.center());
    const auto grid = log_grid(std::pow(10.0, log_center - 0.5), std::pow(10.0, log_center + 0.5),
                               options.calibration_points);
    double offset = 0.0;
    for (double f : grid) {
        offset += std::log(std::abs(network_impedance(unit, f))) - std::log(std::abs(cpe_impedance(spec.target, f)));
    }
    const double c0 = std::exp(offset / static_cast<double>(grid.size()));
    return build_ladder(spec, tau0, c0, band);
}

Complex network_impedance(const MorrisonNetwork& net, double frequency) {
    if (!(frequency > 0.0)) throw DomainError("impedance requires a positive frequency");
    const double omega = 2.0 * std::numbers::pi * frequency;
    const Complex jw(0.0, omega);
    Complex admittance = jw * net.c_t();
    for (const auto& b : net.branches()) admittance += 1.0 / (b.r + 1.0 / (jw * b.c));
    return 1.0 / admittance;
}

double ApproximationReport::max_abs_mag_err_pct() const {
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, std::abs(r.mag_err_pct));
    return m;
}

double ApproximationReport::max_abs_phase_err_deg() const {
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, std::abs(r.phase_err_deg));
    return m;
}

ApproximationReport approximation_report(const MorrisonNetwork& net, const FrequencyBand& band, int grid_points) {
    band.validate();
    if (grid_points < 2) throw DomainError("approximation report needs at least 2 grid points");
    constexpr double deg = 180.0 / std::numbers::pi;
    ApproximationReport report;
    for (double f : log_grid(band.f_min, band.f_max, grid_points)) {
        const Complex zn = network_impedance(net, f);
        const Complex zc = cpe_impedance(net.target(), f);
        report.rows.push_back({f, std::abs(zn), std::abs(zc), std::arg(zn) * deg, std::arg(zc) * deg,
                               100.0 * (std::abs(zn) / std::abs(zc) - 1.0), (std::arg(zn) - std::arg(zc)) * deg});
    }
    return report;
}

std::vector<double> log_grid(double lo, double hi, int points) {
    if (!(lo > 0.0) || !(hi >= lo) || points < 1) throw DomainError("log grid needs 0 < lo <= hi and points >= 1");
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(points));
    if (points == 1) {
        grid.push_back(lo);
        return grid;
    }
    const double a = std::log10(lo);
    const double step = (std::log10(hi) - a) / (points - 1);
    for (int i = 0; i < points; ++i) grid.push_back(std::pow(10.0, a + step * i));
    grid.front() = lo;
    grid.back() = hi;
    return grid;
}

FrequencyBand central_band(const FrequencyBand& band, double fraction) {
    band.validate();
    const double lo = std::log10(band.f_min);
    const double hi = std::log10(band.f_max);
    const double trim = 0.5 * (1.0 - fraction) * (hi - lo);
    return {std::pow(10.0, lo + trim), std::pow(10.0, hi - trim)};
}

void write_network(std::ostream& os, const MorrisonNetwork& net) {
    const auto old_precision = os.precision(17);
    os << "# morrison-network alpha=" << net.target().alpha << " c_f=" << net.target().c_f << " c_t=" << net.c_t();
    if (net.designed_band()) {
        os << " f_min_hz=" << net.designed_band()->f_min << " f_max_hz=" << net.designed_band()->f_max;
    }
    os << "\nindex,r_ohm,c_farad\n";
    for (const auto& b : net.branches()) os << b.index << ',' << b.r << ',' << b.c << '\n';
    os.precision(old_precision);
}

namespace {

double parse_double(const std::string& text, const std::string& source, std::size_t line) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ParseError(source, line, "not a number: '" + text + "'");
    }
    if (used != text.size()) throw ParseError(source, line, "not a number: '" + text + "'");
    return value;
}

}  // namespace

MorrisonNetwork read_network(std::istream& is, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    std::map<std::string, double> header;
    bool have_header = false;
    bool have_columns = false;
    std::vector<MorrisonNetwork::Branch> branches;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!have_header) {
            const std::string tag = "# morrison-network";
            if (line.rfind(tag, 0) != 0) throw ParseError(source, line_no, "expected '" + tag + "' header");
            std::istringstream fields(line.substr(tag.size()));
            std::string token;
            while (fields >> token) {
                const auto eq = token.find('=');
                if (eq == std::string::npos) throw ParseError(source, line_no, "expected key=value, got '" + token + "'");
                header[token.substr(0, eq)] = parse_double(token.substr(eq + 1), source, line_no);
            }
            have_header = true;
            continue;
        }
        if (!have_columns) {
            if (line != "index,r_ohm,c_farad") throw ParseError(source, line_no, "expected column header 'index,r_ohm,c_farad'");
            have_columns = true;
            continue;
        }
        std::vector<std::string> cells;
        std::istringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (cells.size() != 3) throw ParseError(source, line_no, "expected 3 columns");
        const double index = parse_double(cells[0], source, line_no);
        if (index != std::floor(index)) throw ParseError(source, line_no, "branch index must be an integer");
        branches.push_back({static_cast<int>(index), parse_double(cells[1], source, line_no),
                            parse_double(cells[2], source, line_no)});
    }
    if (!have_header || !have_columns) throw ParseError(source, line_no, "truncated network file");
    for (const char* key : {"alpha", "c_f", "c_t"}) {
        if (!header.count(key)) throw ParseError(source, 1, std::string("header is missing ") + key);
    }
    std::optional<FrequencyBand> band;
    if (header.count("f_min_hz") && header.count("f_max_hz")) band = FrequencyBand{header["f_min_hz"], header["f_max_hz"]};
    try {
        return MorrisonNetwork(std::move(branches), header["c_t"], {header["alpha"], header["c_f"]}, band);
    } catch (const DomainError& e) {
        throw ParseError(source, line_no, e.what());
    }
}

void save_network(const std::string& path, const MorrisonNetwork& net) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_network(os, net);
}

MorrisonNetwork load_network(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_network(is, path);
}

}  // namespace fraccap
