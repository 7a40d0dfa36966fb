#include "fraccap/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>

namespace fraccap {

void CapacityCurve::validate() const {
    if (points.size() < 2) throw DomainError("capacity curve needs at least 2 points");
    std::set<double> seen;
    for (const auto& p : points) {
        if (!(p.current > 0.0)) throw DomainError("capacity curve currents must be positive");
        if (!(p.capacity >= 0.0)) throw DomainError("capacity curve capacities must be non-negative");
        if (!seen.insert(p.current).second) throw DomainError("capacity curve currents must be distinct");
    }
    if (!(delta_v > 0.0)) throw DomainError("capacity curve voltage window must be positive");
}

std::vector<CapacityPoint> CapacityCurve::sorted_by_current() const {
    auto out = points;
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.current < b.current; });
    return out;
}

void ImpedanceSpectrum::validate() const {
    if (samples.empty()) throw DomainError("impedance spectrum is empty");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i].frequency > 0.0)) throw DomainError("spectrum frequencies must be positive");
        if (i > 0 && !(samples[i].frequency > samples[i - 1].frequency)) {
            throw DomainError("spectrum frequencies must be strictly increasing");
        }
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cell);
            cell.clear();
        } else {
            cell += ch;
        }
    }
    cells.push_back(cell);
    return cells;
}

double parse_number(const std::string& cell, const std::string& source, std::size_t line) {
    const auto first = cell.find_first_not_of(" \t");
    const auto last = cell.find_last_not_of(" \t");
    const std::string trimmed = first == std::string::npos ? "" : cell.substr(first, last - first + 1);
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(trimmed, &used);
    } catch (const std::exception&) {
        throw ParseError(source, line, "not a number: '" + cell + "'");
    }
    if (used != trimmed.size() || !std::isfinite(value)) throw ParseError(source, line, "not a number: '" + cell + "'");
    return value;
}

namespace {

// Reads header + rows, checking the header's leading columns and the row width.
template <class OnRow>
void read_table(std::istream& is, const std::string& source, const std::vector<std::string>& required,
                std::size_t max_columns, OnRow on_row) {
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (!header) {
            if (cells.size() < required.size() || cells.size() > max_columns ||
                !std::equal(required.begin(), required.end(), cells.begin())) {
                std::string want;
                for (const auto& r : required) want += (want.empty() ? "" : ",") + r;
                throw ParseError(source, line_no, "expected header starting with '" + want + "'");
            }
            header = true;
            continue;
        }
        if (cells.size() < required.size() || cells.size() > max_columns) {
            throw ParseError(source, line_no, "expected " + std::to_string(required.size()) + " columns, got " +
                                                  std::to_string(cells.size()));
        }
        std::vector<double> values;
        for (const auto& c : cells) values.push_back(parse_number(c, source, line_no));
        on_row(values, line_no);
    }
    if (!header) throw ParseError(source, line_no, "missing header row");
}

}  // namespace

void write_capacity_csv(std::ostream& os, const CapacityCurve& curve) {
    os << "i_A,q_As,q_Ah\n";
    char buf[96];
    for (const auto& p : curve.points) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", p.current, p.capacity, p.capacity_ah());
        os << buf;
    }
}

CapacityCurve read_capacity_csv(std::istream& is, double delta_v, const std::string& source) {
    CapacityCurve curve;
    curve.delta_v = delta_v;
    read_table(is, source, {"i_A", "q_As"}, 3, [&](const std::vector<double>& v, std::size_t line) {
        if (!(v[0] > 0.0)) throw ParseError(source, line, "current must be positive");
        if (!(v[1] >= 0.0)) throw ParseError(source, line, "capacity must be non-negative");
        curve.points.push_back({v[0], v[1]});
    });
    return curve;
}

void write_impedance_csv(std::ostream& os, const ImpedanceSpectrum& spectrum) {
    os << "f_Hz,re_ohm,im_ohm\n";
    char buf[96];
    for (const auto& s : spectrum.samples) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", s.frequency, s.z.real(), s.z.imag());
        os << buf;
    }
}

ImpedanceSpectrum read_impedance_csv(std::istream& is, const std::string& source) {
    ImpedanceSpectrum spectrum;
    read_table(is, source, {"f_Hz", "re_ohm", "im_ohm"}, 3, [&](const std::vector<double>& v, std::size_t line) {
        if (!(v[0] > 0.0)) throw ParseError(source, line, "frequency must be positive");
        if (!spectrum.samples.empty() && !(v[0] > spectrum.samples.back().frequency)) {
            throw ParseError(source, line, "frequencies must be strictly increasing");
        }
        spectrum.samples.push_back({v[0], {v[1], v[2]}});
    });
    return spectrum;
}

}  // namespace fraccap
