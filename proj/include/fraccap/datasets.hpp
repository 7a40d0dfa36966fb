#pragma once

// Capacity-vs-current and impedance datasets, simulated or measured.

#include <iosfwd>
#include <string>
#include <vector>

#include "fraccap/cpe.hpp"

namespace fraccap {

struct CapacityCurve {
    std::vector<CapacityPoint> points;
    /// Voltage window v_h - v_l of the protocol that produced the points.
    double delta_v = 1.3;

    /// Throws DomainError unless there are >= 2 points with distinct positive
    /// currents and non-negative capacities.
    void validate() const;
    /// Points ordered by increasing current.
    std::vector<CapacityPoint> sorted_by_current() const;
};

struct ImpedanceSample {
    double frequency;
    Complex z;
};

struct ImpedanceSpectrum {
    std::vector<ImpedanceSample> samples;

    /// Throws DomainError unless frequencies are positive and strictly
    /// increasing.
    void validate() const;
};

// CSV dialect: comma separated, '.' decimal, one header row, LF endings.
// Capacity: i_A,q_As[,q_Ah]. Impedance: f_Hz,re_ohm,im_ohm.
void write_capacity_csv(std::ostream& os, const CapacityCurve& curve);
CapacityCurve read_capacity_csv(std::istream& is, double delta_v, const std::string& source = "<capacity>");
void write_impedance_csv(std::ostream& os, const ImpedanceSpectrum& spectrum);
ImpedanceSpectrum read_impedance_csv(std::istream& is, const std::string& source = "<impedance>");

/// Split a CSV line on commas; surrounding whitespace is kept.
std::vector<std::string> split_csv_line(const std::string& line);
/// Strict number parse: the whole cell must be consumed.
double parse_number(const std::string& cell, const std::string& source, std::size_t line);

}  // namespace fraccap
