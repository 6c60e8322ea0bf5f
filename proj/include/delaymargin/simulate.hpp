#pragma once
// Time-domain validation: integrate x'(t) = A0 x(t) + A1 x(t - tau) by the
// method of steps with a classical fixed-step 4th-order Runge-Kutta scheme.
// The delayed state is read from the stored trajectory with linear
// interpolation; the pre-history on [-tau, 0] is the constant x0. Because
// dt <= tau/10 is enforced whenever tau > 0, every RK stage looks at least
// half a step into already-computed history, so the integration never needs
// the value it is currently producing. tau = 0 degenerates to a plain linear
// ODE in (A0 + A1).

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "system.hpp"

namespace delaymargin {

struct SimConfig {
    double tau = 0;      // delay, seconds (>= 0)
    double horizon = 0;  // integration end time, seconds (> 0)
    double dt = 0;       // fixed step, seconds (> 0, <= horizon, <= tau/10 if tau > 0)
    Eigen::VectorXd x0;  // constant pre-history on [-tau, 0]
};

inline void validate_sim_config(const RetardedSystem& sys, const SimConfig& cfg) {
    if (!(cfg.tau >= 0.0)) throw InputError("tau must be nonnegative");
    if (!(cfg.horizon > 0.0)) throw InputError("horizon must be positive");
    if (!(cfg.dt > 0.0)) throw InputError("dt must be positive");
    if (cfg.dt > cfg.horizon) throw InputError("dt must not exceed the horizon");
    if (cfg.tau > 0.0 && cfg.dt > (cfg.tau / 10.0) * (1.0 + 1e-12))
        throw InputError("dt must be at most tau/10 so the delayed lookups stay inside "
                         "already-computed history");
    if (cfg.horizon / cfg.dt > 2e7)
        throw ResourceError("simulation would need " +
                            std::to_string(static_cast<long long>(cfg.horizon / cfg.dt)) +
                            " steps (cap 2e7); raise dt or shorten the horizon");
    if (cfg.x0.size() != sys.n)
        throw InputError("x0 has length " + std::to_string(cfg.x0.size()) +
                         " but the system has n=" + std::to_string(sys.n));
    if (!cfg.x0.allFinite()) throw InputError("x0 has non-finite entries");
}

struct Trajectory {
    double dt = 0;
    std::vector<Eigen::VectorXd> x; // samples at t = 0, dt, 2*dt, ...
    bool diverged = false;          // state norm exceeded 1e12 * ||x0||; stopped early

    double time_at(std::size_t i) const { return static_cast<double>(i) * dt; }
};

inline Trajectory simulate(const RetardedSystem& sys, const SimConfig& cfg) {
    validate_sim_config(sys, cfg);
    const auto steps = static_cast<std::size_t>(std::ceil(cfg.horizon / cfg.dt - 1e-9));
    Trajectory traj;
    traj.dt = cfg.dt;
    traj.x.reserve(steps + 1);
    traj.x.push_back(cfg.x0);

    if (cfg.tau == 0.0) {
        const Eigen::MatrixXd m = sys.a0 + sys.a1;
        const double blow_up = 1e12 * std::max(cfg.x0.norm(), 1e-300);
        Eigen::VectorXd x = cfg.x0;
        for (std::size_t i = 0; i < steps; ++i) {
            const Eigen::VectorXd k1 = m * x;
            const Eigen::VectorXd k2 = m * (x + 0.5 * cfg.dt * k1);
            const Eigen::VectorXd k3 = m * (x + 0.5 * cfg.dt * k2);
            const Eigen::VectorXd k4 = m * (x + cfg.dt * k3);
            x += (cfg.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            traj.x.push_back(x);
            if (!(x.norm() <= blow_up)) {
                traj.diverged = true;
                break;
            }
        }
        return traj;
    }

    // Delayed lookup with linear interpolation; t <= 0 hits the constant
    // pre-history. Stage times never exceed the last stored sample.
    auto delayed = [&](double tq) -> Eigen::VectorXd {
        if (tq <= 0.0) return cfg.x0;
        const double pos = tq / cfg.dt;
        auto i = static_cast<std::size_t>(pos);
        if (i + 2 > traj.x.size()) {
            if (traj.x.size() < 2) return traj.x.back();
            i = traj.x.size() - 2;
        }
        const double alpha = pos - static_cast<double>(i);
        return (1.0 - alpha) * traj.x[i] + alpha * traj.x[i + 1];
    };
    auto deriv = [&](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return sys.a0 * x + sys.a1 * delayed(t - cfg.tau);
    };
    const double blow_up = 1e12 * std::max(cfg.x0.norm(), 1e-300);
    Eigen::VectorXd x = cfg.x0;
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) * cfg.dt;
        const Eigen::VectorXd k1 = deriv(t, x);
        const Eigen::VectorXd k2 = deriv(t + 0.5 * cfg.dt, x + 0.5 * cfg.dt * k1);
        const Eigen::VectorXd k3 = deriv(t + 0.5 * cfg.dt, x + 0.5 * cfg.dt * k2);
        const Eigen::VectorXd k4 = deriv(t + cfg.dt, x + cfg.dt * k3);
        x += (cfg.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        traj.x.push_back(x);
        if (!(x.norm() <= blow_up)) {
            traj.diverged = true;
            break;
        }
    }
    return traj;
}

enum class Verdict { Decaying, Growing, Inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Decaying: return "decaying";
        case Verdict::Growing: return "growing";
        default: return "inconclusive";
    }
}

struct VerdictResult {
    Verdict verdict = Verdict::Inconclusive;
    double envelope_ratio = 1.0; // max ||x|| over last 20% / max over first 20%
    double horizon = 0;
    double dt = 0;
    bool diverged = false;
};

// Step size small enough for accuracy near neutral growth rates while
// honoring the dt <= tau/10 history constraint.
inline double auto_dt(const RetardedSystem& sys, double tau, double horizon) {
    double dt = 2.0 / (1.0 + sys.a0.norm() + sys.a1.norm());
    if (tau > 0.0) dt = std::min(dt, tau / 40.0);
    dt = std::min(dt, horizon / 100.0);
    dt = std::max(dt, horizon / 2e7); // keep the step count bounded
    if (tau > 0.0) dt = std::min(dt, tau / 10.0);
    return dt;
}

// Envelope comparison: max ||x|| over the last 20% of the samples against
// the first 20%. Ratio < 0.5 decaying, > 2 growing, otherwise inconclusive.
inline VerdictResult classify_trajectory(const Trajectory& traj, double horizon) {
    VerdictResult res;
    res.horizon = horizon;
    res.dt = traj.dt;
    res.diverged = traj.diverged;
    if (traj.diverged) {
        res.verdict = Verdict::Growing;
        res.envelope_ratio = std::numeric_limits<double>::infinity();
        return res;
    }
    const std::size_t n = traj.x.size();
    const auto head_end = static_cast<std::size_t>(0.2 * static_cast<double>(n - 1));
    const auto tail_begin = static_cast<std::size_t>(0.8 * static_cast<double>(n - 1));
    double head = 0, tail = 0;
    for (std::size_t i = 0; i <= head_end; ++i) head = std::max(head, traj.x[i].norm());
    for (std::size_t i = tail_begin; i < n; ++i) tail = std::max(tail, traj.x[i].norm());
    res.envelope_ratio = head > 0 ? tail / head : std::numeric_limits<double>::infinity();
    if (res.envelope_ratio < 0.5) res.verdict = Verdict::Decaying;
    else if (res.envelope_ratio > 2.0) res.verdict = Verdict::Growing;
    else res.verdict = Verdict::Inconclusive;
    return res;
}

// Classify a delay by simulating from the canonical normalized all-ones
// start and comparing the state-norm envelope over the last 20% of the
// horizon against the first 20%: ratio < 0.5 decaying, > 2 growing.
inline VerdictResult verdict(const RetardedSystem& sys, double tau, double horizon,
                             double dt = 0.0) {
    SimConfig cfg;
    cfg.tau = tau;
    cfg.horizon = horizon;
    cfg.dt = dt > 0.0 ? dt : auto_dt(sys, tau, horizon);
    cfg.x0 = Eigen::VectorXd::Ones(sys.n) / std::sqrt(static_cast<double>(sys.n));
    const Trajectory traj = simulate(sys, cfg);
    return classify_trajectory(traj, horizon);
}

} // namespace delaymargin
