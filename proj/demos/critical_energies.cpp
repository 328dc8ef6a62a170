// Critical energies of the two-cell continuum model and the couplings for
// which the first family member is usable.
//
//   demo_critical_energies [m] [c] [coupling]

#include <cstdio>
#include <cstdlib>

#include "diraclab/diraclab.hpp"

int main(int argc, char** argv) {
    using namespace diraclab;
    const double m = argc > 1 ? std::atof(argv[1]) : 0.0;
    const double c = argc > 2 ? std::atof(argv[2]) : 1.0;
    const double coupling = argc > 3 ? std::atof(argv[3]) : 1.0;
    const DiracParams p(m, c);

    const auto grid = linear_grid(-10, 10, 1e-3);
    const auto scan = critical_scan(p, coupling, grid);
    std::printf("m=%g c=%g coupling=%g: %zu critical energies, commuting fraction %.3f\n", m, c, coupling,
                scan.records.size(), scan.commuting_fraction);
    std::printf("%12s %16s %16s %10s %10s %12s %s\n", "E0", "class0", "class1", "eta0", "eta1", "[T0,T1]", "eta gap");
    for (const auto& r : scan.records)
        std::printf("%12.8f %16s %16s %10.6f %10.6f %12.2e %s\n", r.E0, to_string(r.class0).data(), to_string(r.class1).data(),
                    r.eta0, r.eta1, r.commutator_norm, r.eta_gap_ok ? "ok" : "degenerate");

    for (int n = 1; n <= 3; ++n) {
        const auto w = lambda_window(p, n);
        std::printf("n=%d: coupling in (0, %.6f) or (%.6f, inf)%s\n", n, w.lower.hi, w.upper.lo,
                    w.contains(coupling) ? "  <- current coupling" : "");
    }
}
