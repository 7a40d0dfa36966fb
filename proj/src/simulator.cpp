#include "fraccap/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace fraccap {

SimState SimState::relaxed(const MorrisonNetwork& net) {
    SimState s;
    s.v_branch.assign(net.branches().size(), 0.0);
    return s;
}

double stored_charge(const MorrisonNetwork& net, const SimState& state) {
    double q = net.c_t() * state.v_ct;
    for (std::size_t k = 0; k < net.branches().size(); ++k) q += net.branches()[k].c * state.v_branch[k];
    return q;
}

double default_time_step(const MorrisonNetwork& net) {
    const double tau = net.tau_min();
    if (!std::isfinite(tau)) throw DomainError("network has no branches; no natural time step");
    return 0.25 * tau;
}

namespace {

void check_step(const MorrisonNetwork& net, const SimState& state, double dt) {
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    if (dt > 0.5 * net.tau_min()) throw UnstableTimeStep(dt, net.tau_min());
    if (state.v_branch.size() != net.branches().size()) {
        throw DomainError("state has " + std::to_string(state.v_branch.size()) + " branch voltages, network has " +
                          std::to_string(net.branches().size()) + " branches");
    }
}

// Forward Euler for the ladder with precomputed conductances. The step is
// linear in dt, so a fractional step theta * dt lands exactly on the straight
// line between the bracketing states.
class Integrator {
public:
    Integrator(const MorrisonNetwork& net, double r_s)
        : r_s_(r_s), inv_c_t_(1.0 / net.c_t()), branch_current_(net.branches().size()) {
        for (const auto& b : net.branches()) {
            g_.push_back(1.0 / b.r);
            r_.push_back(b.r);
            inv_c_.push_back(1.0 / b.c);
        }
    }

    /// Fills the branch currents for `state`; returns dv_ct/dt under i.
    double rates(const SimState& state, double i) {
        double sum = 0.0;
        const double v_ct = state.v_ct;
        for (std::size_t k = 0; k < g_.size(); ++k) {
            const double ik = (v_ct - state.v_branch[k]) * g_[k];
            branch_current_[k] = ik;
            sum += ik;
        }
        return (i - sum) * inv_c_t_;
    }

    /// Applies a step of length h using the rates from the last rates() call.
    /// Returns the energy dissipated in all resistors over the step.
    double apply(SimState& state, double i, double dv_ct_dt, double h) {
        double power = i * i * r_s_;
        for (std::size_t k = 0; k < g_.size(); ++k) {
            const double ik = branch_current_[k];
            state.v_branch[k] += ik * h * inv_c_[k];
            power += ik * ik * r_[k];
        }
        state.v_ct += dv_ct_dt * h;
        state.accumulated_charge += i * h;
        state.t += h;
        return power * h;
    }

private:
    double r_s_;
    double inv_c_t_;
    std::vector<double> g_, r_, inv_c_;
    std::vector<double> branch_current_;
};

// Trace buffer for one cycle, decimated by doubling the stride whenever it
// overflows. Phase-boundary samples are always kept.
class CycleTrace {
public:
    explicit CycleTrace(std::size_t capacity) : capacity_(std::max<std::size_t>(capacity, 4)) {}

    void offer(std::uint64_t step_index, const TraceSample& s) {
        if (step_index % stride_ == 0) push(step_index, s, false);
    }
    void force(std::uint64_t step_index, const TraceSample& s) { push(step_index, s, true); }

    void flush_into(std::vector<TraceSample>& out) {
        for (const auto& e : entries_) out.push_back(e.sample);
        entries_.clear();
        stride_ = 1;
    }

private:
    struct Entry {
        std::uint64_t step_index;
        TraceSample sample;
        bool forced;
    };

    void push(std::uint64_t step_index, const TraceSample& s, bool forced) {
        entries_.push_back({step_index, s, forced});
        while (entries_.size() > capacity_ && stride_ < (std::uint64_t{1} << 62)) {
            stride_ *= 2;
            std::erase_if(entries_, [&](const Entry& e) { return !e.forced && e.step_index % stride_ != 0; });
        }
    }

    std::size_t capacity_;
    std::uint64_t stride_ = 1;
    std::vector<Entry> entries_;
};

}  // namespace

void advance(const MorrisonNetwork& net, SimState& state, double i_terminal, double dt) {
    check_step(net, state, dt);
    Integrator integ(net, 0.0);
    const double rate = integ.rates(state, i_terminal);
    integ.apply(state, i_terminal, rate, dt);
}

SimState step(const MorrisonNetwork& net, const SimState& state, double i_terminal, double dt) {
    SimState next = state;
    advance(net, next, i_terminal, dt);
    return next;
}

CycleResult run_cycles(const MorrisonNetwork& net, double r_s, const CycleProtocol& protocol, double v_init,
                       int n_cycles, double dt, const RunOptions& options) {
    protocol.validate();
    if (!(v_init >= protocol.v_l && v_init <= protocol.v_h)) {
        throw DomainError("initial voltage must lie within [v_l, v_h]");
    }
    return run_cycles(net, r_s, protocol, SimState::relaxed(net), v_init, n_cycles, dt, options);
}

CycleResult run_cycles(const MorrisonNetwork& net, double r_s, const CycleProtocol& protocol, SimState state,
                       double v_offset, int n_cycles, double dt, const RunOptions& options) {
    protocol.validate();
    if (n_cycles < 1) throw DomainError("need at least one cycle");
    if (!(r_s >= 0.0)) throw DomainError("series resistance must be >= 0");
    check_step(net, state, dt);
    if (2.0 * protocol.i0 * r_s >= protocol.delta_v()) {
        throw ResistiveWindowExhausted(protocol.i0, protocol.delta_v(), r_s);
    }

    Integrator integ(net, r_s);
    CycleResult result;
    CycleTrace trace(options.max_samples_per_cycle);
    std::uint64_t step_index = 0;
    double throughput = 0.0;
    double final_discharge = 0.0;

    const auto terminal = [&](double i) { return v_offset + state.v_ct + i * r_s; };
    // Charge balance is tracked relative to the state at entry.
    const double baseline = state.accumulated_charge - stored_charge(net, state);
    const auto check_charge = [&] {
        const double imbalance = std::abs(state.accumulated_charge - stored_charge(net, state) - baseline);
        result.max_charge_imbalance = std::max(result.max_charge_imbalance, imbalance / std::max(throughput, 1e-300));
    };

    for (int cycle = 0; cycle < n_cycles; ++cycle) {
        double energy = 0.0;
        for (const bool discharging : {true, false}) {
            const double i = discharging ? -protocol.i0 : protocol.i0;
            const double limit = discharging ? protocol.v_l : protocol.v_h;
            const auto reached = [&](double v) { return discharging ? v <= limit : v >= limit; };
            const double t_start = state.t;
            trace.force(step_index, {state.t, terminal(i), i});

            double steps = 0.0;
            while (!reached(terminal(i))) {
                if (++steps > options.max_steps) {
                    std::ostringstream os;
                    os << "voltage limit " << limit << " V not reached after " << options.max_steps << " steps";
                    throw std::runtime_error(os.str());
                }
                const double v_now = terminal(i);
                const double rate = integ.rates(state, i);
                const double v_next = v_now + rate * dt;
                double h = dt;
                if (reached(v_next)) h = dt * (v_now - limit) / (v_now - v_next);
                energy += integ.apply(state, i, rate, h);
                throughput += protocol.i0 * h;
                ++step_index;
                if (h < dt) break;
                trace.offer(step_index, {state.t, terminal(i), i});
            }
            trace.force(step_index, {state.t, terminal(i), i});
            check_charge();

            const double q = protocol.i0 * (state.t - t_start);
            if (discharging) {
                result.discharge_charges.push_back(q);
                final_discharge = q;
            } else {
                result.charge_charges.push_back(q);
            }
        }
        result.dissipated_energy.push_back(energy);
        trace.flush_into(result.trace);
        ++result.n_cycles_run;
    }

    result.capacity = {protocol.i0, final_discharge};
    result.final_state = std::move(state);
    return result;
}

CapacityCurve SweepResult::curve(double delta_v) const {
    CapacityCurve c;
    c.delta_v = delta_v;
    for (const auto& r : runs) c.points.push_back(r.capacity);
    return c;
}

SweepResult capacity_sweep(const MorrisonNetwork& net, double r_s, const CycleProtocol& protocol_template,
                           const std::vector<double>& currents, int n_cycles, double dt, double v_init,
                           const RunOptions& options) {
    if (currents.empty()) throw DomainError("current ladder is empty");
    for (double i : currents) {
        if (!(i > 0.0)) throw DomainError("ladder currents must be positive");
    }
    if (!(v_init >= protocol_template.v_l && v_init <= protocol_template.v_h)) {
        throw DomainError("initial voltage must lie within [v_l, v_h]");
    }
    const double step_dt = dt > 0.0 ? dt : default_time_step(net);
    SweepResult sweep;
    SimState state = SimState::relaxed(net);
    for (double i0 : currents) {
        CycleProtocol protocol = protocol_template;
        protocol.i0 = i0;
        auto run = run_cycles(net, r_s, protocol, state, v_init, n_cycles, step_dt, options);
        state = run.final_state;
        sweep.runs.push_back(std::move(run));
    }
    return sweep;
}

void write_trace_csv(std::ostream& os, const std::vector<TraceSample>& trace) {
    os << "t_s,v_terminal_V,i_A\n";
    char buf[96];
    for (const auto& s : trace) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", s.t, s.v_terminal, s.i);
        os << buf;
    }
}

}  // namespace fraccap
