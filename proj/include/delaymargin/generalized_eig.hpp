#pragma once
// Thin wrapper over LAPACK's complex QZ driver (zggev) for the generalized
// eigenvalue problem A v = z B v with dense complex matrices. Eigen has no
// complex-pencil solver, so this goes straight to LAPACKE. Infinite
// eigenvalues (beta = 0, e.g. from a singular B) are dropped: callers here
// only ever need finite eigenvalues near the unit circle.

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "errors.hpp"

namespace delaymargin {

inline std::vector<std::complex<double>> generalized_eigenvalues(Eigen::MatrixXcd a,
                                                                 Eigen::MatrixXcd b) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
        throw InputError("generalized eigenvalue problem needs square matrices of equal size");
    const auto n = static_cast<lapack_int>(a.rows());
    std::vector<std::complex<double>> alpha(static_cast<std::size_t>(n));
    std::vector<std::complex<double>> beta(static_cast<std::size_t>(n));
    // Eigen stores column-major; std::complex<double> is layout-compatible
    // with LAPACK's complex double.
    const lapack_int info = LAPACKE_zggev(
        LAPACK_COL_MAJOR, 'N', 'N', n,
        reinterpret_cast<lapack_complex_double*>(a.data()), n,
        reinterpret_cast<lapack_complex_double*>(b.data()), n,
        reinterpret_cast<lapack_complex_double*>(alpha.data()),
        reinterpret_cast<lapack_complex_double*>(beta.data()),
        nullptr, 1, nullptr, 1);
    if (info < 0)
        throw SolverError("zggev: illegal argument " + std::to_string(-info));
    if (info > 0)
        throw SolverError("zggev: QZ iteration failed to converge (info=" + std::to_string(info) +
                          ")");
    std::vector<std::complex<double>> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
        if (beta[i] == std::complex<double>(0.0, 0.0)) continue; // infinite eigenvalue
        const std::complex<double> z = alpha[i] / beta[i];
        if (std::isfinite(z.real()) && std::isfinite(z.imag())) out.push_back(z);
    }
    return out;
}

} // namespace delaymargin
