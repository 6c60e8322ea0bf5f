#pragma once
// Shared helpers for the test suites: canonical systems, temporary files,
// a reproducible random-stable-system generator, and a subprocess runner
// for the command-line tool.

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <utility>

#include <delaymargin/system.hpp>

namespace testsupport {

// 3-state benchmark system used throughout the docs and samples.
inline delaymargin::RetardedSystem bench3_system() {
    Eigen::MatrixXd a0(3, 3), a1(3, 3);
    a0 << -1.0, 13.5, -1.0, -3.0, -1.0, -2.0, -2.0, -1.0, -4.0;
    a1 << -5.9, 7.1, -70.3, 2.0, -1.0, 5.0, 2.0, 0.0, 6.0;
    return delaymargin::make_system(a0, a1);
}

// x'(t) = -x(t) - 2 x(t - tau): the analytically solvable scalar case.
inline delaymargin::RetardedSystem scalar_system() {
    Eigen::MatrixXd a0(1, 1), a1(1, 1);
    a0 << -1.0;
    a1 << -2.0;
    return delaymargin::make_system(a0, a1);
}

// Random system with a strictly stable delay-free part: draw entries from
// U(-1, 1), then shift A0's diagonal so the rightmost eigenvalue of A0 + A1
// lands at -u with u ~ U(0.3, 1). The shift also rules out an s = 0 root.
inline delaymargin::RetardedSystem random_stable_system(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> entry(-1.0, 1.0);
    std::uniform_real_distribution<double> gap(0.3, 1.0);
    Eigen::MatrixXd a0(n, n), a1(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            a0(i, j) = entry(rng);
            a1(i, j) = entry(rng);
        }
    const Eigen::MatrixXd s = a0 + a1;
    double right = -std::numeric_limits<double>::infinity();
    for (const auto& ev : delaymargin::eigenvalues_of(s, "A0 + A1"))
        right = std::max(right, ev.real());
    a0.diagonal().array() -= right + gap(rng);
    return delaymargin::make_system(a0, a1);
}

// Self-deleting scratch directory for file-based tests.
class TempDir {
  public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        static int counter = 0;
        dir_ = base / ("delaymargin-test-" + std::to_string(::getpid()) + "-" +
                       std::to_string(counter++));
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string write(const std::string& name, const std::string& content) const {
        const auto path = dir_ / name;
        std::ofstream os(path, std::ios::binary);
        os << content;
        return path.string();
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

  private:
    std::filesystem::path dir_;
};

struct CliResult {
    int exit_code = -1;
    std::string output; // stdout and stderr combined
};

#ifdef CLI_BIN
// Run the installed CLI binary with the given argument string.
inline CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(CLI_BIN) + " " + args + " 2>&1";
    CliResult res;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) return res;
    std::array<char, 4096> buf{};
    std::size_t got = 0;
    while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0)
        res.output.append(buf.data(), got);
    const int status = ::pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}
#endif

} // namespace testsupport
