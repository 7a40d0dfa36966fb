#include "fraccap/errors.hpp"

#include <sstream>

namespace fraccap {

namespace {

std::string window_message(double current, double delta_v, double r_s) {
    std::ostringstream os;
    os << "resistive window exhausted: 2 * " << current << " A * " << r_s << " ohm >= dV = " << delta_v
       << " V (capacity reaches zero at I_x = " << delta_v / (2.0 * r_s) << " A)";
    return os.str();
}

}  // namespace

ResistiveWindowExhausted::ResistiveWindowExhausted(double current, double delta_v, double r_s)
    : std::runtime_error(window_message(current, delta_v, r_s)),
      current_(current),
      intercept_current_(delta_v / (2.0 * r_s)) {}

InsufficientBranches::InsufficientBranches(int n_half, int minimum_n_half)
    : std::invalid_argument("insufficient branches: N = " + std::to_string(n_half) +
                            " cannot span the band; need N >= " + std::to_string(minimum_n_half)),
      minimum_n_half_(minimum_n_half) {}

UnstableTimeStep::UnstableTimeStep(double dt, double tau_min)
    : std::invalid_argument([&] {
          std::ostringstream os;
          os << "unstable time step: dt = " << dt << " s exceeds 0.5 * tau_min = " << 0.5 * tau_min << " s";
          return os.str();
      }()) {}

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

}  // namespace fraccap
