#include "fraccap/cpe.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace fraccap {

void CpeParams::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        std::ostringstream os;
        os << "CPE exponent must satisfy 0 < alpha <= 1, got " << alpha;
        throw DomainError(os.str());
    }
    if (!(c_f > 0.0) || !std::isfinite(c_f)) {
        std::ostringstream os;
        os << "fractional capacitance must be positive, got " << c_f;
        throw DomainError(os.str());
    }
}

void CircuitModel::validate() const {
    cpe.validate();
    if (!(r_s >= 0.0) || !std::isfinite(r_s)) throw DomainError("series resistance must be >= 0");
}

void CycleProtocol::validate() const {
    if (!(i0 > 0.0)) throw DomainError("cycling current must be positive");
    if (!(v_h > v_l)) throw DomainError("upper voltage limit must exceed the lower limit");
}

StepCurrentProfile::StepCurrentProfile(std::vector<Segment> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) throw DomainError("current profile needs at least one segment");
    if (segments_.front().start_time != 0.0) throw DomainError("current profile must start at t = 0");
    for (std::size_t k = 1; k < segments_.size(); ++k) {
        if (!(segments_[k].start_time > segments_[k - 1].start_time)) {
            throw DomainError("current profile start times must be strictly increasing");
        }
    }
}

StepCurrentProfile StepCurrentProfile::constant(double current) {
    return StepCurrentProfile({{0.0, current}});
}

StepCurrentProfile StepCurrentProfile::charge_then_discharge(double current, double duration) {
    return StepCurrentProfile({{0.0, current}, {duration, -current}});
}

double StepCurrentProfile::current_at(double t) const {
    double current = 0.0;
    for (const auto& seg : segments_) {
        if (seg.start_time > t) break;
        current = seg.current;
    }
    return current;
}

StepCurrentProfile StepCurrentProfile::scaled(double factor) const {
    auto segs = segments_;
    for (auto& s : segs) s.current *= factor;
    return StepCurrentProfile(std::move(segs));
}

Complex cpe_impedance(const CpeParams& cpe, double frequency) {
    if (!(frequency > 0.0)) throw DomainError("impedance requires a positive frequency");
    cpe.validate();
    const double omega = 2.0 * std::numbers::pi * frequency;
    // polar form keeps the phase at exactly -alpha pi / 2
    return std::polar(1.0 / (cpe.c_f * std::pow(omega, cpe.alpha)), -cpe.alpha * std::numbers::pi / 2.0);
}

Complex model_impedance(const CircuitModel& model, double frequency) {
    if (!(model.r_s >= 0.0)) throw DomainError("series resistance must be >= 0");
    return model.r_s + cpe_impedance(model.cpe, frequency);
}

double rl_voltage(const CpeParams& cpe, const StepCurrentProfile& profile, double t) {
    cpe.validate();
    if (profile.segments().empty()) throw DomainError("empty current profile");
    if (t < 0.0) throw DomainError("time precedes the start of the current profile");
    double sum = 0.0;
    double previous = 0.0;
    for (const auto& seg : profile.segments()) {
        if (seg.start_time > t) break;
        sum += (seg.current - previous) * std::pow(t - seg.start_time, cpe.alpha);
        previous = seg.current;
    }
    return sum / (cpe.c_f * std::tgamma(cpe.alpha + 1.0));
}

double cycle_voltage_swing(const CircuitModel& model, double i0, double duration) {
    model.validate();
    if (!(i0 > 0.0)) throw DomainError("cycling current must be positive");
    if (!(duration > 0.0)) throw DomainError("half-cycle duration must be positive");
    const double a = model.cpe.alpha;
    return (3.0 - std::pow(2.0, a)) * i0 * std::pow(duration, a) / (model.cpe.c_f * std::tgamma(a + 1.0)) +
           2.0 * i0 * model.r_s;
}

CapacityPoint analytic_capacity(const CircuitModel& model, const CycleProtocol& protocol) {
    model.validate();
    protocol.validate();
    const double i0 = protocol.i0;
    const double window = protocol.delta_v() - 2.0 * i0 * model.r_s;
    if (!(window > 0.0)) throw ResistiveWindowExhausted(i0, protocol.delta_v(), model.r_s);
    const double a = model.cpe.alpha;
    const double base = model.cpe.c_f * std::tgamma(a + 1.0) / (3.0 - std::pow(2.0, a)) * window;
    return {i0, std::pow(base, 1.0 / a) * std::pow(i0, 1.0 - 1.0 / a)};
}

double peukert_exponent(const CpeParams& cpe) {
    cpe.validate();
    return 1.0 / cpe.alpha;
}

}  // namespace fraccap
