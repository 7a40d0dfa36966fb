#pragma once

// Explicit time stepping of a Morrison-network CPE in series with a resistor
// under constant-current cycling between two voltage limits.

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "fraccap/cpe.hpp"
#include "fraccap/datasets.hpp"
#include "fraccap/morrison.hpp"

namespace fraccap {

/// Network state. Voltages are deviations from the relaxed state at t = 0;
/// the caller adds the cell's offset voltage.
struct SimState {
    double t = 0.0;
    std::vector<double> v_branch;
    double v_ct = 0.0;
    double accumulated_charge = 0.0;

    static SimState relaxed(const MorrisonNetwork& net);
};

/// Stored charge sum_i C_i v_i + C_t v_ct relative to the relaxed state.
double stored_charge(const MorrisonNetwork& net, const SimState& state);

/// One forward-Euler step under terminal current i_terminal (positive charges
/// the element). Throws UnstableTimeStep for dt > 0.5 tau_min.
SimState step(const MorrisonNetwork& net, const SimState& state, double i_terminal, double dt);

/// In-place variant of step() for long runs.
void advance(const MorrisonNetwork& net, SimState& state, double i_terminal, double dt);

/// Default step, a quarter of the smallest branch time constant.
double default_time_step(const MorrisonNetwork& net);

struct TraceSample {
    double t;
    double v_terminal;
    double i;
};

struct CycleResult {
    std::vector<TraceSample> trace;
    CapacityPoint capacity;
    int n_cycles_run = 0;
    /// Charge drawn on each discharge and delivered on each charge, A s.
    std::vector<double> discharge_charges;
    std::vector<double> charge_charges;
    /// Energy dissipated in the branch resistors and R_s per cycle, J.
    std::vector<double> dissipated_energy;
    /// Worst |accumulated_charge - stored_charge| over recorded samples,
    /// relative to the charge throughput so far.
    double max_charge_imbalance = 0.0;
    SimState final_state;
};

struct RunOptions {
    /// Upper bound on samples kept per cycle; the trace is decimated
    /// uniformly in time to stay under it.
    std::size_t max_samples_per_cycle = 20000;
    /// Hard stop against runs that never reach a limit.
    double max_steps = 5e9;
};

/// Cycle from a relaxed network whose terminal voltage starts at v_init: each
/// cycle discharges at -i0 until V <= v_l, then charges at +i0 until
/// V >= v_h. Limit crossings are located by linear interpolation within the
/// step and the state is rolled back to the crossing. Capacity is i0 times the
/// duration of the final discharge.
///
/// Throws ResistiveWindowExhausted when 2 i0 Rs >= v_h - v_l.
CycleResult run_cycles(const MorrisonNetwork& net, double r_s, const CycleProtocol& protocol, double v_init,
                       int n_cycles, double dt, const RunOptions& options = {});

/// Same, continuing from an existing state; terminal voltage is
/// v_offset + v_ct + i R_s.
CycleResult run_cycles(const MorrisonNetwork& net, double r_s, const CycleProtocol& protocol, SimState initial,
                       double v_offset, int n_cycles, double dt, const RunOptions& options = {});

struct SweepResult {
    std::vector<CycleResult> runs;

    CapacityCurve curve(double delta_v) const;
};

/// Run the protocol at each current in order, carrying the network state from
/// one current to the next. dt <= 0 selects default_time_step(net) for all
/// currents.
SweepResult capacity_sweep(const MorrisonNetwork& net, double r_s, const CycleProtocol& protocol_template,
                           const std::vector<double>& currents, int n_cycles, double dt, double v_init,
                           const RunOptions& options = {});

void write_trace_csv(std::ostream& os, const std::vector<TraceSample>& trace);

}  // namespace fraccap
