// Cross-checking a computed margin in the time domain: integrate the system
// just below and just above the margin and watch the envelope flip from
// decay to growth.
//
//   ./simulate_demo ../samples/bench3_a0.txt ../samples/bench3_a1.txt

#include <cstdio>
#include <delaymargin/simulate.hpp>
#include <delaymargin/sweep.hpp>
#include <delaymargin/system.hpp>

int main(int argc, char** argv) {
    using namespace delaymargin;
    const std::string a0 = argc > 1 ? argv[1] : "samples/bench3_a0.txt";
    const std::string a1 = argc > 2 ? argv[2] : "samples/bench3_a1.txt";

    try {
        const RetardedSystem sys = load_system(a0, a1);
        const StabilityReport rep = analyze(sys);
        if (!rep.delay_margin) {
            std::printf("no crossings: stable for every delay, nothing to bracket\n");
            return 0;
        }
        const double margin = *rep.delay_margin;
        std::printf("computed delay margin: %.6f s\n", margin);

        double omega_min = rep.crossings.front().omega_c;
        for (const auto& c : rep.crossings) omega_min = std::min(omega_min, c.omega_c);
        const double horizon = 400.0 * (2.0 * kPi / omega_min);

        for (double factor : {0.95, 1.05}) {
            const VerdictResult v = verdict(sys, factor * margin, horizon);
            std::printf("  tau = %.2f x margin: %-12s (envelope ratio %.4g over %.0f s)\n", factor,
                        to_string(v.verdict), v.envelope_ratio, v.horizon);
        }
    } catch (const ToolError& e) {
        std::fprintf(stderr, "failed: %s\n", e.what());
        return 1;
    }
    return 0;
}
