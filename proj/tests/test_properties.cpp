#include <catch2/catch_amalgamated.hpp>

#include <delaymargin/kronecker.hpp>
#include <delaymargin/sweep.hpp>

#include <random>

#include "oracles.hpp"
#include "support.hpp"

using namespace delaymargin;

namespace {

std::complex<double> bilinear(double t, double omega) {
    const std::complex<double> jwt(0.0, omega * t);
    return (1.0 - jwt) / (1.0 + jwt);
}

Eigen::MatrixXcd quadratic_at(const RetardedSystem& sys, double t, std::complex<double> s) {
    const int n = sys.n;
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
    return t * s * s * id +
           s * (id - t * sys.a0.cast<std::complex<double>>() +
                t * sys.a1.cast<std::complex<double>>()) -
           (sys.a0 + sys.a1).cast<std::complex<double>>();
}

std::complex<double> char_det(const RetardedSystem& sys, std::complex<double> s,
                              std::complex<double> z) {
    const int n = sys.n;
    const Eigen::MatrixXcd m = s * Eigen::MatrixXcd::Identity(n, n) -
                               sys.a0.cast<std::complex<double>>() -
                               z * sys.a1.cast<std::complex<double>>();
    return m.determinant();
}

} // namespace

TEST_CASE("bilinear map equals the delay phase on the whole ladder (1e-12)",
          "[properties]") {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> td(-10.0, 10.0), wd(0.05, 10.0);
    for (int trial = 0; trial < 500; ++trial) {
        const double t = td(rng);
        const double w = wd(rng);
        const std::complex<double> z = bilinear(t, w);
        for (double tau : taus_from_crossing(t, w, 4)) {
            const auto e = std::exp(std::complex<double>(0.0, -w * tau));
            REQUIRE(std::abs(e - z) <= 1e-12);
        }
    }
}

TEST_CASE("companion eigenvalues are roots of the quadratic pencil (1e-8 scaled)",
          "[properties]") {
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> td(0.1, 3.0);
    std::bernoulli_distribution flip;
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 6);
        const auto sys = testsupport::random_stable_system(rng, n);
        const double t = td(rng) * (flip(rng) ? 1.0 : -1.0);
        const double row_const = 1.0 + std::abs(t) * (sys.a0.norm() + sys.a1.norm());
        for (const auto& s : spectrum_at(sys, t)) {
            const double row =
                std::abs(t) * std::norm(s) + std::abs(s) * row_const + (sys.a0 + sys.a1).norm();
            const double scale = std::pow(std::max(1.0, row), n);
            const double resid = std::abs(quadratic_at(sys, t, s).determinant());
            CAPTURE(n, t, s, resid, scale);
            REQUIRE(resid <= 1e-8 * scale);
        }
    }
}

TEST_CASE("vectorization identity: vec(A X B) = (B^T kron A) vec(X) (1e-12)",
          "[properties]") {
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 3);
        Eigen::MatrixXd a(n, n), b(n, n), x(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                a(i, j) = d(rng);
                b(i, j) = d(rng);
                x(i, j) = d(rng);
            }
        const Eigen::MatrixXd prod = a * x * b;
        Eigen::VectorXd vec_prod(n * n), vec_x(n * n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                vec_prod(j * n + i) = prod(i, j); // column stacking
                vec_x(j * n + i) = x(i, j);
            }
        const Eigen::VectorXd lhs = kron_product(b.transpose(), a) * vec_x;
        REQUIRE((lhs - vec_prod).norm() <= 1e-12 * (1.0 + vec_prod.norm()));
    }
}

TEST_CASE("pencil determinant factorization under the bilinear substitution (1e-6 scaled)",
          "[properties]") {
    // det(T s^2 I + (I - T A0 + T A1) s - (A0 + A1))
    //   = (1 + T s)^n det(s I - A0 - A1 (1 - T s)/(1 + T s))
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> d(-1.5, 1.5);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 3);
        const auto sys = testsupport::random_stable_system(rng, n);
        const double t = d(rng);
        const std::complex<double> s(d(rng), d(rng));
        const std::complex<double> denom = 1.0 + t * s;
        if (std::abs(t) < 0.05 || std::abs(denom) < 0.3) continue; // stay off the pole
        const std::complex<double> lhs = quadratic_at(sys, t, s).determinant();
        const std::complex<double> z = (1.0 - t * s) / denom;
        const std::complex<double> rhs = std::pow(denom, n) * char_det(sys, s, z);
        CAPTURE(n, t, s, lhs, rhs);
        REQUIRE(std::abs(lhs - rhs) <= 1e-6 * (1.0 + std::abs(lhs) + std::abs(rhs)));
    }
}

TEST_CASE("every ladder delay solves the characteristic equation (1e-6 scaled)",
          "[properties]") {
    struct Case {
        RetardedSystem sys;
        SweepConfig cfg;
    };
    SweepConfig narrow;
    narrow.t_min = -2.0;
    narrow.t_max = 2.0;
    narrow.t_step = 1e-3;
    narrow.auto_widen = false;
    narrow.k_max = 4;
    SweepConfig scalar_cfg = narrow;
    scalar_cfg.t_min = -5.0;
    scalar_cfg.t_max = 5.0;
    const Case cases[] = {{testsupport::bench3_system(), narrow},
                          {testsupport::scalar_system(), scalar_cfg}};
    for (const auto& [sys, cfg] : cases) {
        const SweepResult res = find_crossings(sys, cfg);
        REQUIRE_FALSE(res.crossings.empty());
        const double base = 1.0 + sys.a0.norm() + sys.a1.norm();
        for (const auto& c : res.crossings) {
            const double period = 2.0 * kPi / c.omega_c;
            const double scale = std::pow(base + c.omega_c, sys.n);
            for (std::size_t k = 0; k < c.taus.size(); ++k) {
                if (k > 0)
                    REQUIRE(std::abs(c.taus[k] - c.taus[k - 1] - period) <= 1e-6 * period);
                const auto z = std::exp(std::complex<double>(0.0, -c.omega_c * c.taus[k]));
                const double resid =
                    std::abs(char_det(sys, std::complex<double>(0.0, c.omega_c), z));
                CAPTURE(c.t_c, c.omega_c, c.taus[k], resid, scale);
                REQUIRE(resid <= 1e-6 * scale);
            }
        }
    }
}

TEST_CASE("companion spectra come in conjugate pairs", "[properties]") {
    std::mt19937_64 rng(505);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 4);
        const auto sys = testsupport::random_stable_system(rng, n);
        const double t = 0.3 + 0.1 * static_cast<double>(trial);
        const auto eigs = spectrum_at(sys, t);
        for (const auto& s : eigs) {
            if (std::abs(s.imag()) < 1e-12) continue;
            double best = 1e9;
            for (const auto& other : eigs) best = std::min(best, std::abs(other - std::conj(s)));
            REQUIRE(best <= 1e-9 * (1.0 + std::abs(s)));
        }
    }
}
