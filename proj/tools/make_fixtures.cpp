// Regenerates fixtures/capacity_curve.csv and fixtures/impedance_spectrum.csv.
// See fixtures/PROVENANCE.md for what these files are (and are not).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "fraccap/io.hpp"

int main(int argc, char** argv) {
    using namespace fraccap;
    const std::filesystem::path dir = argc > 1 ? argv[1] : "fixtures";
    std::filesystem::create_directories(dir);
    std::mt19937_64 rng(2021);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Scatter sized so the fits report uncertainties of the published order:
    // ~0.0017 on alpha from four capacity points, ~0.008 from seven
    // impedance points.
    auto curve = synthetic_capacity_curve({{0.9711, 9203.0}, 0.0631}, 4.30, 3.00, kPaperCurrentLadder);
    for (auto& p : curve.points) p.capacity *= 1.0 + 0.0024 * gauss(rng);
    auto spectrum = synthetic_spectrum({{0.976, 1.54e4}, 0.057}, spectrum_frequencies(5e-7, 2.0, 5));
    for (auto& s : spectrum.samples) s.z *= 1.0 + 0.018 * gauss(rng);

    std::ofstream cap(dir / "capacity_curve.csv");
    write_capacity_csv(cap, curve);
    std::ofstream imp(dir / "impedance_spectrum.csv");
    write_impedance_csv(imp, spectrum);
    if (!cap || !imp) {
        std::cerr << "cannot write fixtures to " << dir << '\n';
        return 1;
    }
    std::cout << "wrote " << (dir / "capacity_curve.csv").string() << " and "
              << (dir / "impedance_spectrum.csv").string() << '\n';
    return 0;
}
