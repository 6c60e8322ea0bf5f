#pragma once
// Command-line front end. Exit codes: 0 success, 1 internal/solver failure
// (including a validation mismatch), 2 bad input or failed precondition
// (unstable delay-free system, s = 0 root, resource cap, unreadable files,
// bad flags).

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "errors.hpp"
#include "kronecker.hpp"
#include "report.hpp"
#include "simulate.hpp"
#include "sweep.hpp"
#include "system.hpp"

namespace delaymargin {
namespace cli {

struct CommonFlags {
    std::string a0_path, a1_path;
    std::string format = "json";
    std::string out;
};

struct SweepFlags {
    SweepConfig cfg;
    CLI::Option* opt_t_min = nullptr;
    CLI::Option* opt_t_max = nullptr;
};

inline void add_system_flags(CLI::App* sub, CommonFlags& f) {
    sub->add_option("--a0", f.a0_path, "Path to the instantaneous-term matrix (plain text or Matrix Market)")
        ->required();
    sub->add_option("--a1", f.a1_path, "Path to the delayed-term matrix")->required();
}

inline void add_output_flags(CLI::App* sub, CommonFlags& f) {
    sub->add_option("--format", f.format, "Report format")
        ->check(CLI::IsMember({"json", "csv", "text"}))
        ->capture_default_str();
    sub->add_option("--out", f.out, "Write the report to this file instead of stdout");
}

inline void add_sweep_flags(CLI::App* sub, SweepFlags& s) {
    s.opt_t_min = sub->add_option("--t-min", s.cfg.t_min, "Left end of the Rekasius parameter grid (< 0)")
                      ->capture_default_str();
    s.opt_t_max = sub->add_option("--t-max", s.cfg.t_max, "Right end of the Rekasius parameter grid (> 0)")
                      ->capture_default_str();
    sub->add_option("--t-step", s.cfg.t_step, "Grid spacing")->capture_default_str();
    sub->add_option("--eps-imag", s.cfg.eps_imag,
                    "Imaginary-axis tolerance (default: 1e-6 * (1 + ||A0||_F + ||A1||_F))");
    sub->add_option("--k-max", s.cfg.k_max, "Delay-ladder entries per crossing beyond tau_0")
        ->capture_default_str();
    sub->add_option("--workers", s.cfg.workers, "Scan worker threads (0 = all hardware threads)");
}

// Explicit --t-min/--t-max means the caller owns the range: skip auto-widening.
inline void finalize_sweep_flags(SweepFlags& s) {
    if ((s.opt_t_min && s.opt_t_min->count() > 0) || (s.opt_t_max && s.opt_t_max->count() > 0))
        s.cfg.auto_widen = false;
}

inline void emit(const Report& rep, const CommonFlags& f, const std::string& rendered) {
    if (f.out.empty()) {
        std::cout << rendered;
        return;
    }
    std::ofstream os(f.out, std::ios::binary);
    if (!os) throw InputError("cannot open output file '" + f.out + "' for writing");
    os << rendered;
    if (!os) throw InputError("failed while writing '" + f.out + "'");
    (void)rep;
}

// ---------------------------------------------------------------------------
// Subcommand bodies. Each fills rep.body and returns the exit code.

inline int cmd_margin(const CommonFlags& f, const SweepConfig& cfg, Report& rep) {
    const RetardedSystem sys = load_system(f.a0_path, f.a1_path);
    const StabilityReport r = analyze(sys, cfg);
    rep.meta.workers = r.config.workers;
    rep.body["command"] = "margin";
    rep.body["system"] = system_json(sys, f.a0_path, f.a1_path);
    rep.body["config"] = config_json(r.config);
    rep.body["delay_free_rhp_count"] = 0;
    rep.body.update(stability_json(r));
    return 0;
}

inline int cmd_crossings(const CommonFlags& f, const SweepConfig& cfg, Report& rep) {
    const RetardedSystem sys = load_system(f.a0_path, f.a1_path);
    const SweepResult r = find_crossings(sys, cfg);
    rep.meta.workers = r.config.workers;
    rep.body["command"] = "crossings";
    rep.body["system"] = system_json(sys, f.a0_path, f.a1_path);
    rep.body["config"] = config_json(r.config);
    rep.body["delay_free_rhp_count"] = 0;
    rep.body["crossings"] = nlohmann::ordered_json::array();
    for (const auto& c : r.crossings) rep.body["crossings"].push_back(crossing_json(c));
    rep.body["inconclusive"] = nlohmann::ordered_json::array();
    for (const auto& c : r.inconclusive) rep.body["inconclusive"].push_back(crossing_json(c));
    return 0;
}

inline int cmd_baseline(const CommonFlags& f, const SweepConfig& cfg_in, std::uint64_t mem_cap,
                        Report& rep) {
    const RetardedSystem sys = load_system(f.a0_path, f.a1_path);
    detail::ensure_analysis_preconditions(sys);
    const SweepConfig cfg = resolve_config(sys, cfg_in);
    const std::vector<double> omegas = kron_crossings(sys, cfg.eps_imag, mem_cap);

    SweepResult sr;
    sr.config = cfg;
    nlohmann::ordered_json spurious = nlohmann::ordered_json::array();
    for (double w : omegas) {
        std::vector<RecoveredDelay> rds;
        try {
            rds = delays_from_crossing(sys, w, cfg.k_max);
        } catch (const SpuriousCrossingError& e) {
            spurious.push_back({{"omega", w}, {"reason", e.what()}});
            continue;
        }
        for (const auto& rd : rds) {
            Crossing c;
            c.t_c = rd.t_rekasius;
            c.omega_c = w;
            c.taus = rd.taus;
            const bool t_usable = std::isfinite(rd.t_rekasius) && std::abs(rd.t_rekasius) > 0.0;
            c.direction =
                t_usable ? classify_direction(sys, rd.t_rekasius, w, cfg) : Direction::Inconclusive;
            (c.direction == Direction::Inconclusive ? sr.inconclusive : sr.crossings)
                .push_back(std::move(c));
        }
    }
    auto by_tau0 = [](const Crossing& a, const Crossing& b) {
        return a.taus.front() < b.taus.front();
    };
    std::sort(sr.crossings.begin(), sr.crossings.end(), by_tau0);
    std::sort(sr.inconclusive.begin(), sr.inconclusive.end(), by_tau0);

    StabilityReport r;
    detail::walk_ladders(sr, r);

    rep.meta.workers = 1;
    rep.body["command"] = "baseline";
    rep.body["system"] = system_json(sys, f.a0_path, f.a1_path);
    rep.body["config"] = config_json(cfg);
    rep.body["config"]["mem_cap_bytes"] = mem_cap;
    rep.body["delay_free_rhp_count"] = 0;
    rep.body["omegas"] = omegas;
    rep.body["spurious"] = spurious;
    rep.body.update(stability_json(r));
    return 0;
}

inline int cmd_simulate(const CommonFlags& f, double tau, double horizon, double dt,
                        const std::string& x0_path, Report& rep, Trajectory& traj_out) {
    const RetardedSystem sys = load_system(f.a0_path, f.a1_path);
    SimConfig sim;
    sim.tau = tau;
    sim.horizon = horizon;
    sim.dt = dt > 0.0 ? dt : auto_dt(sys, tau, horizon);
    if (x0_path.empty()) {
        sim.x0 = Eigen::VectorXd::Ones(sys.n) / std::sqrt(static_cast<double>(sys.n));
    } else {
        const Eigen::MatrixXd m = load_matrix(x0_path);
        if (m.rows() != 1 && m.cols() != 1)
            throw InputError("x0 file '" + x0_path + "' must hold a vector (one row or one column)");
        sim.x0 = m.rows() == 1 ? Eigen::VectorXd(m.transpose().col(0)) : Eigen::VectorXd(m.col(0));
    }
    traj_out = simulate(sys, sim);
    const VerdictResult v = classify_trajectory(traj_out, horizon);

    rep.meta.workers = 1;
    rep.body["command"] = "simulate";
    rep.body["system"] = system_json(sys, f.a0_path, f.a1_path);
    rep.body["sim"] = {{"tau", sim.tau},
                       {"horizon", sim.horizon},
                       {"dt", sim.dt},
                       {"samples", traj_out.x.size()}};
    rep.body["verdict"] = to_string(v.verdict);
    rep.body["envelope_ratio"] = json_num(v.envelope_ratio);
    rep.body["diverged"] = traj_out.diverged;
    rep.body["final_norm"] = json_num(traj_out.x.back().norm());
    return 0;
}

inline int cmd_mem_estimate(std::uint64_t n_min, std::uint64_t n_max, std::uint64_t n_step,
                            std::uint64_t bpe, Report& rep) {
    if (n_step == 0) throw InputError("--n-step must be positive");
    if (n_max < n_min) throw InputError("--n-max must be at least --n-min");
    rep.meta.workers = 1;
    rep.body["command"] = "mem-estimate";
    rep.body["bytes_per_element"] = bpe;
    auto rows = nlohmann::ordered_json::array();
    for (std::uint64_t n = n_min; n <= n_max; n += n_step) {
        const std::uint64_t bytes = estimate_memory(n, bpe);
        rows.push_back({{"n", n}, {"bytes", bytes}, {"human", human_bytes(bytes)}});
    }
    rep.body["memory_rows"] = rows;
    return 0;
}

inline int cmd_validate(const CommonFlags& f, const SweepConfig& cfg, Report& rep) {
    const RetardedSystem sys = load_system(f.a0_path, f.a1_path);
    const StabilityReport r = analyze(sys, cfg);
    rep.meta.workers = r.config.workers;
    rep.body["command"] = "validate";
    rep.body["system"] = system_json(sys, f.a0_path, f.a1_path);
    rep.body["config"] = config_json(r.config);
    rep.body.update(stability_json(r));

    if (!r.delay_margin) {
        rep.body["verdicts"] = nlohmann::ordered_json::array();
        rep.body["validated"] = true;
        rep.body["note"] =
            "no imaginary-axis crossings: stability is delay-independent, nothing to bracket";
        return 0;
    }
    const double margin = *r.delay_margin;
    double omega_min = std::numeric_limits<double>::infinity();
    for (const auto& c : r.crossings) omega_min = std::min(omega_min, c.omega_c);
    const double base_horizon = 50.0 * (2.0 * kPi / omega_min);

    struct Probe {
        double tau;
        Verdict expected;
    };
    const Probe probes[] = {{0.95 * margin, Verdict::Decaying}, {1.05 * margin, Verdict::Growing}};
    bool all_ok = true;
    auto verdicts = nlohmann::ordered_json::array();
    for (const auto& p : probes) {
        VerdictResult v;
        double horizon = base_horizon;
        // Near-critical delays decay/grow slowly; double the horizon until the
        // envelope test becomes conclusive (16x cap keeps the cost bounded).
        for (int attempt = 0; attempt < 5; ++attempt) {
            v = verdict(sys, p.tau, horizon);
            if (v.verdict != Verdict::Inconclusive) break;
            horizon *= 2.0;
        }
        const bool matches = v.verdict == p.expected;
        all_ok = all_ok && matches;
        verdicts.push_back({{"tau", p.tau},
                            {"expected", to_string(p.expected)},
                            {"verdict", to_string(v.verdict)},
                            {"envelope_ratio", json_num(v.envelope_ratio)},
                            {"horizon", v.horizon},
                            {"dt", v.dt},
                            {"matches", matches}});
    }
    rep.body["verdicts"] = verdicts;
    rep.body["validated"] = all_ok;
    return all_ok ? 0 : 1;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv) {
    CLI::App app{"Imaginary-axis crossings and delay margin of x'(t) = A0 x(t) + A1 x(t - tau)"};
    app.require_subcommand(1);

    CommonFlags fm, fc, fb, fs, fv, fe;
    SweepFlags sm, sc, sv;
    SweepConfig baseline_cfg;

    auto* margin = app.add_subcommand("margin", "Crossings, direction labels, delay ladders, stable windows, and the delay margin");
    add_system_flags(margin, fm);
    add_sweep_flags(margin, sm);
    add_output_flags(margin, fm);

    auto* crossings = app.add_subcommand("crossings", "Imaginary-axis crossings only (no margin walk)");
    add_system_flags(crossings, fc);
    add_sweep_flags(crossings, sc);
    add_output_flags(crossings, fc);

    std::uint64_t mem_cap = kDefaultMemCap;
    auto* baseline = app.add_subcommand("baseline", "Kronecker-product baseline (dense (2n^2)^2 eigenproblem; small n only)");
    add_system_flags(baseline, fb);
    baseline->add_option("--eps-imag", baseline_cfg.eps_imag,
                         "Imaginary-axis tolerance (default: 1e-6 * (1 + ||A0||_F + ||A1||_F))");
    baseline->add_option("--k-max", baseline_cfg.k_max, "Delay-ladder entries per crossing beyond tau_0")
        ->capture_default_str();
    baseline->add_option("--mem-cap", mem_cap, "Refuse eigenproblems needing more bytes than this")
        ->capture_default_str();
    add_output_flags(baseline, fb);

    double tau = 0, horizon = 0, dt = 0;
    std::string x0_path;
    auto* simulate = app.add_subcommand("simulate", "Integrate the delay system (method of steps, fixed-step RK4)");
    add_system_flags(simulate, fs);
    simulate->add_option("--tau", tau, "Delay in seconds (>= 0)")->required();
    simulate->add_option("--horizon", horizon, "Integration end time in seconds")->required();
    simulate->add_option("--dt", dt, "Fixed step (default: chosen from the matrix norms, <= tau/10)");
    simulate->add_option("--x0", x0_path, "Initial/pre-history vector file (default: ones, unit norm)");
    add_output_flags(simulate, fs);

    std::uint64_t n_single = 0, n_min = 0, n_max = 0, n_step = 1, bpe = 8;
    auto* mem = app.add_subcommand("mem-estimate", "Bytes needed by the baseline's dense (2n^2)x(2n^2) companion matrix");
    auto* opt_n = mem->add_option("--n", n_single, "Single state dimension");
    auto* opt_n_min = mem->add_option("--n-min", n_min, "Range start");
    mem->add_option("--n-max", n_max, "Range end (inclusive)");
    mem->add_option("--n-step", n_step, "Range stride")->capture_default_str();
    mem->add_option("--bytes-per-element", bpe, "Element size in bytes")->capture_default_str();
    add_output_flags(mem, fe);

    auto* validate = app.add_subcommand("validate", "Cross-check the margin by time-domain simulation at 0.95x and 1.05x");
    add_system_flags(validate, fv);
    add_sweep_flags(validate, sv);
    add_output_flags(validate, fv);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    Report rep;
    rep.meta.generated = iso_utc_now();
    const auto t_start = std::chrono::steady_clock::now();
    const CommonFlags* flags = nullptr;
    Trajectory traj;
    int code = 0;
    try {
        if (margin->parsed()) {
            finalize_sweep_flags(sm);
            flags = &fm;
            code = cmd_margin(fm, sm.cfg, rep);
        } else if (crossings->parsed()) {
            finalize_sweep_flags(sc);
            flags = &fc;
            code = cmd_crossings(fc, sc.cfg, rep);
        } else if (baseline->parsed()) {
            flags = &fb;
            code = cmd_baseline(fb, baseline_cfg, mem_cap, rep);
        } else if (simulate->parsed()) {
            flags = &fs;
            code = cmd_simulate(fs, tau, horizon, dt, x0_path, rep, traj);
        } else if (mem->parsed()) {
            flags = &fe;
            if (opt_n->count() > 0) {
                n_min = n_max = n_single;
            } else if (opt_n_min->count() == 0) {
                throw InputError("mem-estimate needs --n or an --n-min/--n-max range");
            }
            code = cmd_mem_estimate(n_min, n_max, n_step, bpe, rep);
        } else if (validate->parsed()) {
            finalize_sweep_flags(sv);
            flags = &fv;
            code = cmd_validate(fv, sv.cfg, rep);
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ResourceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ToolError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    rep.meta.elapsed_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    // CSV for a simulation means the sample rows themselves; the summary and
    // verdict ride in the comment header.
    if (simulate->parsed() && flags->format == "csv")
        emit(rep, *flags, trajectory_csv(rep, traj));
    else
        emit(rep, *flags, serialize(rep, flags->format));
    return code;
}

} // namespace cli
} // namespace delaymargin
