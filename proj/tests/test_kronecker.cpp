#include <catch2/catch_amalgamated.hpp>

#include <delaymargin/kronecker.hpp>
#include <delaymargin/sweep.hpp>

#include "oracles.hpp"
#include "support.hpp"

using namespace delaymargin;

TEST_CASE("memory estimate is exact and saturating", "[kronecker][memory]") {
    REQUIRE(estimate_memory(1, 8) == 32ull);
    REQUIRE(estimate_memory(200, 8) == 51'200'000'000ull);
    REQUIRE(estimate_memory(428, 8) > 1'000'000'000'000ull);
    REQUIRE(estimate_memory(2, 8) == 2048ull); // (2*4)^2 * 8
    SECTION("monotone in n") {
        std::uint64_t prev = 0;
        for (std::uint64_t n = 1; n <= 64; ++n) {
            const std::uint64_t b = estimate_memory(n, 8);
            REQUIRE(b > prev);
            prev = b;
        }
    }
    SECTION("saturates instead of wrapping") {
        REQUIRE(estimate_memory(1u << 20, 8) == std::numeric_limits<std::uint64_t>::max());
    }
    SECTION("rejects zeros") {
        REQUIRE_THROWS_AS(estimate_memory(0, 8), InputError);
        REQUIRE_THROWS_AS(estimate_memory(10, 0), InputError);
    }
}

TEST_CASE("kron_product matches the block definition", "[kronecker]") {
    Eigen::MatrixXd a(2, 2), b(2, 2);
    a << 1.0, 2.0, 3.0, 4.0;
    b << 0.0, 5.0, 6.0, 7.0;
    const Eigen::MatrixXd k = kron_product(a, b);
    REQUIRE(k.rows() == 4);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            REQUIRE((k.block(2 * i, 2 * j, 2, 2) - a(i, j) * b).norm() == 0.0);
}

TEST_CASE("lambda-matrix blocks follow the construction", "[kronecker]") {
    std::mt19937_64 rng(21);
    const auto sys = testsupport::random_stable_system(rng, 2);
    const MatrixPolynomial poly = build_lambda(sys);
    const int n2 = sys.n * sys.n;
    REQUIRE(poly.g0.rows() == n2);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(sys.n, sys.n);
    REQUIRE((poly.g0 - Eigen::MatrixXd::Identity(n2, n2)).norm() == 0.0);
    REQUIRE((poly.g1 - (kron_product(id, sys.a0) - kron_product(sys.a0, id))).norm() == 0.0);
    REQUIRE((poly.g2 - (kron_product(sys.a1, sys.a1) - kron_product(sys.a0, sys.a0))).norm() ==
            0.0);
}

TEST_CASE("resource cap refuses oversized eigenproblems", "[kronecker][memory]") {
    const auto sys = testsupport::bench3_system();
    REQUIRE_THROWS_AS(build_lambda(sys, /*mem_cap=*/100), ResourceError);
    REQUIRE_THROWS_AS(kron_crossings(sys, 0.0, /*mem_cap=*/100), ResourceError);
}

TEST_CASE("scalar system: baseline frequency and recovered delays are analytic",
          "[kronecker][oracle]") {
    const auto sys = testsupport::scalar_system();
    const auto want = oracle::scalar_crossing(-1.0, -2.0);
    REQUIRE(want.has_value());

    const auto omegas = kron_crossings(sys);
    REQUIRE(omegas.size() == 1);
    REQUIRE(omegas.front() == Catch::Approx(want->omega).margin(1e-9));

    const auto delays = delays_from_crossing(sys, omegas.front(), 3);
    REQUIRE(delays.size() == 1);
    const auto& d = delays.front();
    REQUIRE(d.tau0 == Catch::Approx(want->tau0).margin(1e-9));
    REQUIRE(d.t_rekasius == Catch::Approx(want->t_bilinear).margin(1e-9));
    // The unit-circle root for this system is exactly -(1 + j*sqrt(3))/2.
    REQUIRE(d.z.real() == Catch::Approx(-0.5).margin(1e-9));
    REQUIRE(d.z.imag() == Catch::Approx(-std::sqrt(3.0) / 2.0).margin(1e-9));
    REQUIRE(d.taus.size() == 4);
    for (std::size_t k = 1; k < d.taus.size(); ++k)
        REQUIRE(d.taus[k] - d.taus[k - 1] ==
                Catch::Approx(2.0 * kPi / want->omega).epsilon(1e-12));
}

TEST_CASE("benchmark system: baseline frequencies match the sweep", "[kronecker][bench]") {
    const auto sys = testsupport::bench3_system();
    const auto omegas = kron_crossings(sys);
    REQUIRE(omegas.size() == 5);
    // kBench3Precise is sorted by tau0; collect its omegas sorted ascending.
    std::vector<double> want;
    for (const auto& c : oracle::kBench3Precise) want.push_back(c.omega);
    std::sort(want.begin(), want.end());
    for (std::size_t i = 0; i < 5; ++i)
        REQUIRE(omegas[i] == Catch::Approx(want[i]).margin(1e-6));
}

TEST_CASE("benchmark system: delay recovery matches the sweep ladders", "[kronecker][bench]") {
    const auto sys = testsupport::bench3_system();
    for (const auto& c : oracle::kBench3Precise) {
        const auto delays = delays_from_crossing(sys, c.omega, 1);
        REQUIRE(delays.size() == 1);
        REQUIRE(delays.front().tau0 == Catch::Approx(c.tau0).margin(1e-6));
        REQUIRE(delays.front().taus[1] == Catch::Approx(c.tau1).margin(1e-6));
        REQUIRE(delays.front().t_rekasius == Catch::Approx(c.t).margin(1e-6));
    }
}

TEST_CASE("a frequency that is not a crossing is reported as spurious", "[kronecker]") {
    const auto sys = testsupport::bench3_system();
    REQUIRE_THROWS_AS(delays_from_crossing(sys, 1.0, 3), SpuriousCrossingError);
    REQUIRE_THROWS_WITH(delays_from_crossing(sys, 1.0, 3),
                        Catch::Matchers::ContainsSubstring("spurious"));
}

TEST_CASE("delays_from_crossing rejects bad arguments", "[kronecker]") {
    const auto sys = testsupport::scalar_system();
    REQUIRE_THROWS_AS(delays_from_crossing(sys, 0.0, 3), InputError);
    REQUIRE_THROWS_AS(delays_from_crossing(sys, -1.0, 3), InputError);
    REQUIRE_THROWS_AS(delays_from_crossing(sys, std::sqrt(3.0), -1), InputError);
}

TEST_CASE("stable system without delayed feedback has no baseline crossings",
          "[kronecker]") {
    Eigen::MatrixXd a0(2, 2), a1(2, 2);
    a0 << -1.0, 0.5, 0.0, -2.0;
    a1.setZero();
    REQUIRE(kron_crossings(make_system(a0, a1)).empty());
}

TEST_CASE("generalized eigenvalues of a diagonal pencil", "[kronecker]") {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(2, 2);
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Identity(2, 2);
    a(0, 0) = std::complex<double>(2.0, 0.0);
    a(1, 1) = std::complex<double>(0.0, 3.0);
    const auto zs = generalized_eigenvalues(a, b);
    REQUIRE(zs.size() == 2);
    double best2 = 1e9, best3 = 1e9;
    for (const auto& z : zs) {
        best2 = std::min(best2, std::abs(z - std::complex<double>(2.0, 0.0)));
        best3 = std::min(best3, std::abs(z - std::complex<double>(0.0, 3.0)));
    }
    REQUIRE(best2 < 1e-12);
    REQUIRE(best3 < 1e-12);
}

TEST_CASE("infinite generalized eigenvalues are dropped", "[kronecker]") {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(2, 2);
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(2, 2);
    b(0, 0) = std::complex<double>(1.0, 0.0); // second pencil direction is singular
    const auto zs = generalized_eigenvalues(a, b);
    REQUIRE(zs.size() == 1);
    REQUIRE(std::abs(zs.front() - std::complex<double>(1.0, 0.0)) < 1e-12);
}
