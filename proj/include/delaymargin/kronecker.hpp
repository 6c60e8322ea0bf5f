#pragma once
// Kronecker-product baseline: an independent, T-free way to find every
// possible crossing frequency for small systems.
//
// If s = j*omega is a characteristic root for some delay, then -s is one as
// well, and eliminating the delay phase between those two equations yields a
// quadratic matrix polynomial in s acting on a stacked (vectorized) unknown:
//     lambda(s) = G0 s^2 + G1 s + G2,
//     G0 = I (n^2), G1 = (I (x) A0) - (A0 (x) I), G2 = (A1 (x) A1) - (A0 (x) A0),
// where (x) is the Kronecker product and vectorization is column-stacking.
// det(lambda(s)) = det(sI - C) for the 2n^2 x 2n^2 companion linearization
//     C = [[0, I], [-G2, -G1]],
// so the purely imaginary eigenvalues of C enumerate all crossing
// frequencies at once — at the price of an (2n^2)^2 dense eigenproblem,
// which is exactly what the memory model below guards against.
//
// For a given crossing frequency omega, the delays are recovered from the
// generalized eigenvalues z of the pencil (A0 - j*omega*I, -A1): any z on
// the unit circle equals e^{-j*omega*tau}, and the full two-argument phase
// of z gives the smallest nonnegative tau (a principal-value arctangent
// would land on the wrong branch).

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "errors.hpp"
#include "generalized_eig.hpp"
#include "system.hpp"
#include "sweep.hpp"

namespace delaymargin {

// Dense storage cost of the 2n^2 x 2n^2 companion matrix, in bytes;
// saturates at UINT64_MAX instead of overflowing.
inline std::uint64_t estimate_memory(std::uint64_t n, std::uint64_t bytes_per_element) {
    if (n == 0 || bytes_per_element == 0) throw InputError("estimate_memory needs positive inputs");
    unsigned __int128 side = static_cast<unsigned __int128>(2) * n * n;
    unsigned __int128 total = side * side * bytes_per_element;
    const auto cap = static_cast<unsigned __int128>(std::numeric_limits<std::uint64_t>::max());
    return total > cap ? std::numeric_limits<std::uint64_t>::max()
                       : static_cast<std::uint64_t>(total);
}

inline Eigen::MatrixXd kron_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return Eigen::kroneckerProduct(a, b);
}

struct MatrixPolynomial {
    Eigen::MatrixXd g0, g1, g2; // lambda(s) = g0 s^2 + g1 s + g2, each n^2 x n^2
};

inline constexpr std::uint64_t kDefaultMemCap = 2'000'000'000ull; // 2 GB guard

inline MatrixPolynomial build_lambda(const RetardedSystem& sys,
                                     std::uint64_t mem_cap = kDefaultMemCap) {
    const auto need = estimate_memory(static_cast<std::uint64_t>(sys.n), sizeof(double));
    if (need > mem_cap)
        throw ResourceError("dense companion for n=" + std::to_string(sys.n) + " needs " +
                            std::to_string(need) + " bytes, above the cap of " +
                            std::to_string(mem_cap) + " bytes");
    const int n = sys.n;
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    MatrixPolynomial p;
    p.g0 = Eigen::MatrixXd::Identity(n * n, n * n);
    p.g1 = kron_product(id, sys.a0) - kron_product(sys.a0, id);
    p.g2 = kron_product(sys.a1, sys.a1) - kron_product(sys.a0, sys.a0);
    return p;
}

inline Eigen::MatrixXd kron_companion(const MatrixPolynomial& p) {
    const auto m = p.g1.rows();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    c.topRightCorner(m, m).setIdentity();
    c.bottomLeftCorner(m, m) = -p.g2;
    c.bottomRightCorner(m, m) = -p.g1;
    return c;
}

// All possible crossing frequencies: distinct Im(s) > eps_imag of eigenvalues
// of C with |Re(s)| <= eps_imag. eps_imag <= 0 selects the same default as
// the sweep so the two methods classify "imaginary" identically.
inline std::vector<double> kron_crossings(const RetardedSystem& sys, double eps_imag = 0.0,
                                          std::uint64_t mem_cap = kDefaultMemCap) {
    if (eps_imag <= 0.0) eps_imag = 1e-6 * (1.0 + sys.a0.norm() + sys.a1.norm());
    const MatrixPolynomial p = build_lambda(sys, mem_cap);
    const Eigen::MatrixXd c = kron_companion(p);
    const auto eigs = eigenvalues_of(c, "Kronecker companion matrix");
    std::vector<double> omegas;
    for (const auto& ev : eigs)
        if (std::abs(ev.real()) <= eps_imag && ev.imag() > eps_imag) omegas.push_back(ev.imag());
    std::sort(omegas.begin(), omegas.end());
    std::vector<double> uniq;
    for (double w : omegas)
        if (uniq.empty() || w - uniq.back() > 1e-7 * (1.0 + w)) uniq.push_back(w);
    return uniq;
}

struct RecoveredDelay {
    double tau0 = 0;              // smallest nonnegative delay for this root
    std::vector<double> taus;     // tau0 + 2*pi*k/omega, k = 0..k_max
    double t_rekasius = 0;        // T with e^{-j omega tau0} = (1-j omega T)/(1+j omega T)
    std::complex<double> z{0, 0}; // the unit-circle generalized eigenvalue
};

// Delays hiding behind one crossing frequency, via the pencil
// (A0 - j*omega*I, -A1). Throws SpuriousCrossingError when no generalized
// eigenvalue sits on the unit circle — the frequency then never satisfies
// the characteristic equation for a real delay.
inline std::vector<RecoveredDelay> delays_from_crossing(const RetardedSystem& sys, double omega,
                                                        int k_max = 3, double unit_tol = 1e-6) {
    if (!(omega > 0.0)) throw InputError("crossing frequency must be positive");
    if (k_max < 0) throw InputError("k_max must be nonnegative");
    const int n = sys.n;
    const std::complex<double> jw(0.0, omega);
    Eigen::MatrixXcd a = sys.a0.cast<std::complex<double>>();
    a -= jw * Eigen::MatrixXcd::Identity(n, n);
    const Eigen::MatrixXcd b = -sys.a1.cast<std::complex<double>>();
    const auto zs = generalized_eigenvalues(a, b);

    std::vector<RecoveredDelay> out;
    double closest = std::numeric_limits<double>::infinity();
    for (const auto& z : zs) {
        const double off = std::abs(std::abs(z) - 1.0);
        closest = std::min(closest, off);
        if (off > unit_tol) continue;
        RecoveredDelay rd;
        rd.z = z;
        // z = e^{-j omega tau}: take the full phase, wrapped to [0, 2*pi).
        double theta = -std::arg(z);
        if (theta < 0.0) theta += 2.0 * kPi;
        rd.tau0 = theta / omega;
        const double period = 2.0 * kPi / omega;
        rd.taus.resize(static_cast<std::size_t>(k_max) + 1);
        for (int k = 0; k <= k_max; ++k)
            rd.taus[static_cast<std::size_t>(k)] = rd.tau0 + period * static_cast<double>(k);
        // j*omega*T = (1 - z)/(1 + z) on the unit circle.
        const std::complex<double> denom = 1.0 + z;
        rd.t_rekasius = std::abs(denom) < 1e-12
                            ? std::numeric_limits<double>::infinity()
                            : ((1.0 - z) / denom).imag() / omega;
        out.push_back(std::move(rd));
    }
    if (out.empty())
        throw SpuriousCrossingError(
            "no unit-circle generalized eigenvalue at omega=" + std::to_string(omega) +
            " (closest ||z|-1| = " + std::to_string(closest) +
            "); the claimed crossing frequency is spurious");
    std::sort(out.begin(), out.end(),
              [](const RecoveredDelay& x, const RecoveredDelay& y) { return x.tau0 < y.tau0; });
    std::vector<RecoveredDelay> uniq;
    for (auto& rd : out)
        if (uniq.empty() || rd.tau0 - uniq.back().tau0 > 1e-9 * std::max(1.0, rd.tau0))
            uniq.push_back(std::move(rd));
    return uniq;
}

} // namespace delaymargin
