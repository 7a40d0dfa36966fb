#pragma once

// Closed-form fractional-calculus results for a constant-phase element (CPE)
// in series with a resistor. All quantities are SI: seconds, amperes, volts,
// ohms, and A s^alpha / V for the fractional capacitance.

#include <complex>
#include <vector>

#include "fraccap/errors.hpp"

namespace fraccap {

using Complex = std::complex<double>;

inline constexpr double kSecondsPerHour = 3600.0;

/// Exponent and fractional capacitance of a CPE, I = C_F d^alpha V / dt^alpha.
struct CpeParams {
    double alpha = 1.0;
    double c_f = 1.0;

    /// Throws DomainError unless 0 < alpha <= 1 and c_f > 0.
    void validate() const;
};

/// CPE in series with a resistor.
struct CircuitModel {
    CpeParams cpe;
    double r_s = 0.0;

    void validate() const;
};

/// Piecewise-constant current drive. Each segment holds its current until the
/// next segment starts; the last one holds forever. The element is relaxed
/// before t = 0.
class StepCurrentProfile {
public:
    struct Segment {
        double start_time;
        double current;
    };

    StepCurrentProfile() = default;
    /// Throws DomainError unless start times strictly increase from 0.
    explicit StepCurrentProfile(std::vector<Segment> segments);

    static StepCurrentProfile constant(double current);
    /// +current on [0, T), -current afterwards.
    static StepCurrentProfile charge_then_discharge(double current, double duration);

    const std::vector<Segment>& segments() const noexcept { return segments_; }
    double current_at(double t) const;
    StepCurrentProfile scaled(double factor) const;

private:
    std::vector<Segment> segments_;
};

/// Constant-current cycling window. Currents are magnitudes.
struct CycleProtocol {
    double i0 = 1.0;
    double v_h = 4.30;
    double v_l = 3.00;

    double delta_v() const noexcept { return v_h - v_l; }
    void validate() const;
};

/// Charge drawn at a given discharge current.
struct CapacityPoint {
    double current = 0.0;   // A
    double capacity = 0.0;  // A s

    double capacity_ah() const noexcept { return capacity / kSecondsPerHour; }
    double discharge_time() const noexcept { return capacity / current; }
};

Complex cpe_impedance(const CpeParams& cpe, double frequency);
Complex model_impedance(const CircuitModel& model, double frequency);

/// Riemann-Liouville voltage of the CPE at time t for a piecewise-constant
/// current, V(t) = sum_k dI_k (t - t_k)^alpha / (C_F Gamma(alpha + 1)).
double rl_voltage(const CpeParams& cpe, const StepCurrentProfile& profile, double t);

/// Total discharge swing V_h - V_l for charging at i0 over [0, T] and then
/// discharging at -i0 over [T, 2T], including the 2 i0 Rs resistor drop.
double cycle_voltage_swing(const CircuitModel& model, double i0, double duration);

/// Charge moved by the symmetric cycle that spans the protocol window.
/// Throws ResistiveWindowExhausted when 2 i0 Rs >= dV.
CapacityPoint analytic_capacity(const CircuitModel& model, const CycleProtocol& protocol);

/// Peukert exponent n in T I0^n = const.
double peukert_exponent(const CpeParams& cpe);

}  // namespace fraccap
