#pragma once
// Core data model for retarded linear time-delay systems
//     x'(t) = A0 x(t) + A1 x(t - tau)
// plus the delay-free sanity checks every solver relies on: the tau=0
// closed-loop spectrum (A0 + A1 must be Hurwitz before any sweep makes
// sense) and the s=0 degeneracy test det(A0 + A1) = 0, which would put a
// characteristic root at the origin for every delay.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "matrix_io.hpp"

namespace delaymargin {

struct RetardedSystem {
    Eigen::MatrixXd a0; // undelayed state matrix
    Eigen::MatrixXd a1; // delayed state matrix
    int n = 0;          // state count
};

inline RetardedSystem make_system(Eigen::MatrixXd a0, Eigen::MatrixXd a1,
                                  const std::string& label_a0 = "A0",
                                  const std::string& label_a1 = "A1") {
    if (a0.rows() != a0.cols())
        throw InputError(label_a0 + " is not square: " + std::to_string(a0.rows()) + "x" +
                         std::to_string(a0.cols()));
    if (a1.rows() != a1.cols())
        throw InputError(label_a1 + " is not square: " + std::to_string(a1.rows()) + "x" +
                         std::to_string(a1.cols()));
    if (a0.rows() != a1.rows())
        throw InputError("dimension mismatch: " + label_a0 + " is " +
                         std::to_string(a0.rows()) + "x" + std::to_string(a0.cols()) + " but " +
                         label_a1 + " is " + std::to_string(a1.rows()) + "x" +
                         std::to_string(a1.cols()));
    if (a0.rows() < 1) throw InputError("matrices must be at least 1x1");
    for (Eigen::Index i = 0; i < a0.rows(); ++i)
        for (Eigen::Index j = 0; j < a0.cols(); ++j) {
            if (!std::isfinite(a0(i, j)))
                throw InputError(label_a0 + ": non-finite entry at row " + std::to_string(i + 1) +
                                 ", column " + std::to_string(j + 1));
            if (!std::isfinite(a1(i, j)))
                throw InputError(label_a1 + ": non-finite entry at row " + std::to_string(i + 1) +
                                 ", column " + std::to_string(j + 1));
        }
    return RetardedSystem{std::move(a0), std::move(a1), static_cast<int>(a0.rows())};
}

inline RetardedSystem load_system(const std::string& path_a0, const std::string& path_a1) {
    return make_system(load_matrix(path_a0), load_matrix(path_a1), path_a0, path_a1);
}

struct SpectrumSummary {
    std::vector<std::complex<double>> eigenvalues;
    int rhp_count = 0;         // eigenvalues with Re > tolerance
    double min_abs_real = 0.0; // smallest |Re| over the spectrum
};

inline SpectrumSummary summarize_spectrum(std::vector<std::complex<double>> eigs,
                                          double rhp_tol = 0.0) {
    SpectrumSummary s;
    s.min_abs_real = std::numeric_limits<double>::infinity();
    for (const auto& ev : eigs) {
        if (ev.real() > rhp_tol) ++s.rhp_count;
        s.min_abs_real = std::min(s.min_abs_real, std::abs(ev.real()));
    }
    s.eigenvalues = std::move(eigs);
    return s;
}

inline std::vector<std::complex<double>> eigenvalues_of(const Eigen::MatrixXd& m,
                                                        const std::string& what) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw SolverError("eigensolver failed to converge on " + what);
    std::vector<std::complex<double>> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    return out;
}

// Spectrum of (A0 + A1): the closed-loop matrix at tau = 0.
inline SpectrumSummary delay_free_spectrum(const RetardedSystem& sys, double rhp_tol = 0.0) {
    return summarize_spectrum(eigenvalues_of(sys.a0 + sys.a1, "A0+A1"), rhp_tol);
}

// Strictly Hurwitz test for the delay-free system: every Re(lambda) < -tol.
inline bool delay_free_stable(const SpectrumSummary& s, double tol = 1e-9) {
    for (const auto& ev : s.eigenvalues)
        if (!(ev.real() < -tol)) return false;
    return true;
}

// True iff det(A0 + A1) ~ 0, i.e. s = 0 is a characteristic root for every
// delay. Relative threshold: |det| <= 1e-10 * ||A0+A1||_F^n.
inline bool check_zero_root(const RetardedSystem& sys) {
    const Eigen::MatrixXd s = sys.a0 + sys.a1;
    const double det = s.determinant();
    const double thresh = 1e-10 * std::pow(s.norm(), static_cast<double>(sys.n));
    return std::abs(det) <= thresh;
}

} // namespace delaymargin
