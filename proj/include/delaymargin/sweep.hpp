#pragma once
// Rekasius-substitution sweep for imaginary-axis crossings of
//     det(sI - A0 - A1 e^{-tau s}) = 0.
//
// On the imaginary axis the transcendental term is replaced exactly by the
// rational map e^{-tau s} = (1 - T s)/(1 + T s), turning the characteristic
// equation into det(T s^2 I + (I - T A0 + T A1) s - (A0 + A1)) = 0, whose
// roots are the eigenvalues of the 2n x 2n companion matrix
//     M(T) = [[ 0, I ], [ (1/T)(A0+A1), (A0-A1) - (1/T) I ]].
// Purely imaginary eigenvalues s = j*omega of M(T) are exact crossings; each
// (T, omega) pair maps back to the delay ladder
//     tau_k = (2/omega)(atan(omega T) + l*pi) + 2*pi*k/omega.
//
// The sweep walks a T grid over both half-axes (T = 0 is excluded: the
// spectrum has a structural jump there), brackets every change of the
// right-half-plane eigenvalue count, refines brackets by bisection plus a
// secant polish on the tracked eigenvalue's real part, and separately chases
// local minima of min|Re| to catch tangential touches and double crossings
// that leave the count unchanged. Direction of each crossing (destabilizing
// vs stabilizing) comes from the sign pattern of the tracked real part on
// both sides of T_c. A final walk over all delay ladders produces the delay
// margin and the stable windows on the tau axis.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "system.hpp"

namespace delaymargin {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

struct SweepConfig {
    double t_min = -1000.0; // Rekasius parameter range, seconds
    double t_max = 1000.0;
    double t_step = 1e-3;   // coarse grid spacing
    double refine_tol = 0;  // bisection stop width; 0 = auto 1e-9*(t_max-t_min)
    double eps_imag = 0;    // |Re| threshold to call an eigenvalue imaginary;
                            // 0 = auto 1e-6*(1+||A0||_F+||A1||_F)
    int k_max = 3;          // delay-ladder depth per crossing
    unsigned workers = 0;   // 0 = hardware concurrency
    bool auto_widen = true; // grow |t_min|,t_max to 10*max(||A0+A1||,1/||A0-A1||)
};

enum class Direction { Destabilizing, Stabilizing, Inconclusive };

inline const char* to_string(Direction d) {
    switch (d) {
        case Direction::Destabilizing: return "destabilizing";
        case Direction::Stabilizing: return "stabilizing";
        default: return "inconclusive";
    }
}

struct CrossingCandidate {
    double t_lo = 0, t_hi = 0; // bracket endpoints, same sign, no grid gap
    int rhp_lo = 0, rhp_hi = 0;
    bool from_dip = false;     // true: |Re| local minimum, count unchanged
};

struct Crossing {
    double t_c = 0;          // refined Rekasius parameter
    double omega_c = 0;      // crossing frequency, rad/s (> 0)
    Direction direction = Direction::Inconclusive;
    std::vector<double> taus; // tau_0 < tau_1 < ... (k_max + 1 entries)
};

struct SweepResult {
    std::vector<Crossing> crossings;    // conclusive direction, sorted by tau_0
    std::vector<Crossing> inconclusive; // tangential touches / sub-threshold omega
    SweepConfig config;                 // resolved configuration actually used
};

struct StabilityReport {
    std::vector<Crossing> crossings;
    std::vector<Crossing> inconclusive;
    std::optional<double> delay_margin; // nullopt = unbounded (delay-independent)
    std::vector<std::pair<double, double>> windows; // stable tau intervals
    double tau_coverage = std::numeric_limits<double>::infinity(); // ladder horizon
    SweepConfig config;
};

// ---------------------------------------------------------------------------
// Configuration resolution

inline SweepConfig resolve_config(const RetardedSystem& sys, SweepConfig cfg) {
    if (!(cfg.t_min < 0.0) || !(cfg.t_max > 0.0))
        throw InputError("sweep grid must satisfy t_min < 0 < t_max (got t_min=" +
                         std::to_string(cfg.t_min) + ", t_max=" + std::to_string(cfg.t_max) + ")");
    if (!(cfg.t_step > 0.0)) throw InputError("t_step must be positive");
    if (cfg.k_max < 0) throw InputError("k_max must be nonnegative");
    if (cfg.auto_widen) {
        const double ns = (sys.a0 + sys.a1).norm();
        const double nd = (sys.a0 - sys.a1).norm();
        double bound = 10.0 * std::max(ns, nd > 1e-9 ? 1.0 / nd : 0.0);
        bound = std::min(bound, 1e4); // keep runaway grids at bay
        cfg.t_max = std::max(cfg.t_max, bound);
        cfg.t_min = std::min(cfg.t_min, -bound);
    }
    if (cfg.refine_tol <= 0.0) cfg.refine_tol = 1e-9 * (cfg.t_max - cfg.t_min);
    if (cfg.eps_imag <= 0.0) cfg.eps_imag = 1e-6 * (1.0 + sys.a0.norm() + sys.a1.norm());
    if (cfg.workers == 0)
        cfg.workers = std::max(1u, std::thread::hardware_concurrency());
    const double span = (cfg.t_max - cfg.t_min) / cfg.t_step;
    if (span < 3.0) throw InputError("sweep grid has fewer than 4 points; shrink t_step");
    if (span > 2.1e8) throw InputError("sweep grid exceeds 2e8 points; enlarge t_step");
    return cfg;
}

// ---------------------------------------------------------------------------
// Companion matrix and spectra

inline Eigen::MatrixXd build_companion(const RetardedSystem& sys, double t) {
    if (t == 0.0) throw InputError("companion matrix is undefined at T = 0");
    const int n = sys.n;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    m.topRightCorner(n, n).setIdentity();
    m.bottomLeftCorner(n, n) = (sys.a0 + sys.a1) / t;
    m.bottomRightCorner(n, n) = (sys.a0 - sys.a1) - Eigen::MatrixXd::Identity(n, n) / t;
    return m;
}

inline std::vector<std::complex<double>> companion_spectrum(const RetardedSystem& sys, double t) {
    const Eigen::MatrixXd m = build_companion(sys, t);
    if (!m.allFinite())
        throw SolverError("companion matrix has non-finite entries at T=" + std::to_string(t));
    return eigenvalues_of(m, "companion matrix at T=" + std::to_string(t));
}

inline SpectrumSummary spectrum_at(const RetardedSystem& sys, double t, double rhp_tol = 0.0) {
    return summarize_spectrum(companion_spectrum(sys, t), rhp_tol);
}

namespace detail {

inline int strict_rhp(const std::vector<std::complex<double>>& eigs) {
    int c = 0;
    for (const auto& ev : eigs)
        if (ev.real() > 0.0) ++c;
    return c;
}

inline int strict_rhp_at(const RetardedSystem& sys, double t) {
    return strict_rhp(companion_spectrum(sys, t));
}

// min |Re| over strictly complex eigenvalues (Im > 0 side); +inf if none.
inline double oscillatory_dip(const std::vector<std::complex<double>>& eigs) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& ev : eigs)
        if (ev.imag() > 0.0) m = std::min(m, std::abs(ev.real()));
    return m;
}

// Real part of the eigenvalue of M(t) nearest to `ref` in the upper half
// plane; also returns that eigenvalue so callers can keep tracking it.
inline std::pair<double, std::complex<double>> tracked_re(const RetardedSystem& sys, double t,
                                                          std::complex<double> ref) {
    const auto eigs = companion_spectrum(sys, t);
    double best = std::numeric_limits<double>::infinity();
    std::complex<double> pick(0, 0);
    bool found = false;
    for (const auto& ev : eigs) {
        if (!(ev.imag() > 0.0)) continue;
        const double d = std::abs(ev - ref);
        if (d < best) {
            best = d;
            pick = ev;
            found = true;
        }
    }
    if (!found)
        throw SolverError("eigenvalue tracking lost: no complex eigenvalue at T=" +
                          std::to_string(t));
    return {pick.real(), pick};
}

inline std::string spectrum_diag(const RetardedSystem& sys, double lo, double hi) {
    std::ostringstream os;
    os << " [diagnostic spectra:";
    for (double t : {lo, hi}) {
        os << " T=" << t << ":";
        for (const auto& ev : companion_spectrum(sys, t))
            os << " (" << ev.real() << (ev.imag() < 0 ? "-" : "+") << std::abs(ev.imag()) << "j)";
        os << ";";
    }
    os << "]";
    return os.str();
}

} // namespace detail

// ---------------------------------------------------------------------------
// Coarse grid scan (parallel, deterministic)

namespace detail {

struct GridSweep {
    std::vector<int> rhp;      // strict RHP count per grid point
    std::vector<double> dip;   // oscillatory |Re| minimum per grid point
    std::vector<unsigned char> status; // 0 ok, 1 zero-point skip, 2 non-finite skip
    long long n_points = 0;
};

inline double grid_point(const SweepConfig& cfg, long long i) {
    return cfg.t_min + static_cast<double>(i) * cfg.t_step;
}

inline long long grid_size(const SweepConfig& cfg) {
    return static_cast<long long>((cfg.t_max - cfg.t_min) / cfg.t_step + 1e-9) + 1;
}

inline GridSweep evaluate_grid(const RetardedSystem& sys, const SweepConfig& cfg,
                               unsigned workers) {
    const long long n_pts = grid_size(cfg);
    GridSweep g;
    g.n_points = n_pts;
    g.rhp.assign(static_cast<std::size_t>(n_pts), 0);
    g.dip.assign(static_cast<std::size_t>(n_pts), std::numeric_limits<double>::infinity());
    g.status.assign(static_cast<std::size_t>(n_pts), 0);

    const int n = sys.n;
    const Eigen::MatrixXd s_sum = sys.a0 + sys.a1;
    const Eigen::MatrixXd s_dif = sys.a0 - sys.a1;
    const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(n, n);

    // Workers fill disjoint index slices of the preallocated arrays; the
    // candidate detection below is a single serial pass, so the result is
    // bit-identical for any worker count.
    auto run_slice = [&](long long lo, long long hi, std::exception_ptr& err) noexcept {
        try {
            Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
            m.topRightCorner(n, n).setIdentity();
            Eigen::EigenSolver<Eigen::MatrixXd> es;
            for (long long i = lo; i < hi; ++i) {
                const double t = grid_point(cfg, i);
                const auto idx = static_cast<std::size_t>(i);
                if (std::abs(t) < 0.5 * cfg.t_step) {
                    g.status[idx] = 1; // the T = 0 grid point is never evaluated
                    continue;
                }
                m.bottomLeftCorner(n, n) = s_sum / t;
                m.bottomRightCorner(n, n) = s_dif - ident / t;
                if (!m.allFinite()) {
                    g.status[idx] = 2;
                    continue;
                }
                es.compute(m, /*computeEigenvectors=*/false);
                if (es.info() != Eigen::Success)
                    throw SolverError("eigensolver failed to converge during the coarse scan at T=" +
                                      std::to_string(t));
                int rhp = 0;
                double dip = std::numeric_limits<double>::infinity();
                for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
                    const std::complex<double> ev = es.eigenvalues()(k);
                    if (ev.real() > 0.0) ++rhp;
                    if (ev.imag() > 0.0) dip = std::min(dip, std::abs(ev.real()));
                }
                g.rhp[idx] = rhp;
                g.dip[idx] = dip;
            }
        } catch (...) {
            err = std::current_exception();
        }
    };

    workers = std::clamp(workers, 1u, 256u);
    const long long chunk = (n_pts + workers - 1) / workers;
    if (workers == 1 || chunk < 2) {
        std::exception_ptr err;
        run_slice(0, n_pts, err);
        if (err) std::rethrow_exception(err);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errs(workers);
        for (unsigned w = 0; w < workers; ++w) {
            const long long lo = static_cast<long long>(w) * chunk;
            const long long hi = std::min(n_pts, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(run_slice, lo, hi, std::ref(errs[w]));
        }
        for (auto& th : pool) th.join();
        for (auto& err : errs)
            if (err) std::rethrow_exception(err);
    }
    return g;
}

inline std::vector<CrossingCandidate> detect_candidates(const SweepConfig& cfg,
                                                        const GridSweep& g) {
    std::vector<CrossingCandidate> out;
    auto usable = [&](long long i) { return g.status[static_cast<std::size_t>(i)] == 0; };
    auto same_half_axis = [&](long long i, long long j) {
        return (grid_point(cfg, i) < 0.0) == (grid_point(cfg, j) < 0.0);
    };
    // RHP-count changes between adjacent usable points on one half-axis.
    for (long long i = 0; i + 1 < g.n_points; ++i) {
        if (!usable(i) || !usable(i + 1) || !same_half_axis(i, i + 1)) continue;
        const int c0 = g.rhp[static_cast<std::size_t>(i)];
        const int c1 = g.rhp[static_cast<std::size_t>(i + 1)];
        if (c0 != c1)
            out.push_back({grid_point(cfg, i), grid_point(cfg, i + 1), c0, c1, false});
    }
    // Local minima of the oscillatory |Re| metric where the count is flat:
    // either the minimum is already below eps_imag, or the slope towards it
    // is steep enough that the branch could plausibly touch zero inside the
    // bracket. These catch tangential touches and double crossings.
    for (long long i = 1; i + 1 < g.n_points; ++i) {
        if (!usable(i - 1) || !usable(i) || !usable(i + 1)) continue;
        if (!same_half_axis(i - 1, i) || !same_half_axis(i, i + 1)) continue;
        const auto ix = static_cast<std::size_t>(i);
        if (g.rhp[ix - 1] != g.rhp[ix] || g.rhp[ix] != g.rhp[ix + 1]) continue;
        const double dm = g.dip[ix - 1], d0 = g.dip[ix], dp = g.dip[ix + 1];
        if (!std::isfinite(d0)) continue;
        if (!(d0 <= dm && d0 <= dp)) continue;
        const double drop = std::max(dm - d0, dp - d0); // inf neighbors are fine
        if (d0 <= cfg.eps_imag + 2.0 * drop)
            out.push_back({grid_point(cfg, i - 1), grid_point(cfg, i + 1),
                           g.rhp[ix - 1], g.rhp[ix + 1], true});
    }
    std::sort(out.begin(), out.end(),
              [](const CrossingCandidate& a, const CrossingCandidate& b) { return a.t_lo < b.t_lo; });
    return out;
}

} // namespace detail

// Serial reference scan. Preconditions: delay-free system stable.
inline std::vector<CrossingCandidate> coarse_scan(const RetardedSystem& sys, SweepConfig cfg) {
    cfg = resolve_config(sys, cfg);
    if (!delay_free_stable(delay_free_spectrum(sys)))
        throw PreconditionError("delay-free system (A0 + A1) is unstable; the sweep requires a "
                                "stable tau = 0 starting point");
    const auto grid = detail::evaluate_grid(sys, cfg, 1);
    return detail::detect_candidates(cfg, grid);
}

// Parallel scan; bit-identical output to coarse_scan for any worker count.
inline std::vector<CrossingCandidate> parallel_scan(const RetardedSystem& sys, SweepConfig cfg) {
    cfg = resolve_config(sys, cfg);
    if (!delay_free_stable(delay_free_spectrum(sys)))
        throw PreconditionError("delay-free system (A0 + A1) is unstable; the sweep requires a "
                                "stable tau = 0 starting point");
    const auto grid = detail::evaluate_grid(sys, cfg, cfg.workers);
    return detail::detect_candidates(cfg, grid);
}

// ---------------------------------------------------------------------------
// Refinement

struct RefinedPoint {
    double t_c = 0;
    double omega_c = 0;
    bool touch = false; // tangential touch (count unchanged, axis grazed)
};

namespace detail {

// Bracketed secant (false position with bisection fallback) on the tracked
// eigenvalue's real part. Requires f(lo), f(hi) of opposite sign.
inline std::pair<double, std::complex<double>> polish_root(const RetardedSystem& sys, double lo,
                                                           double hi, std::complex<double> ref) {
    auto [fa, ea] = tracked_re(sys, lo, ref);
    auto [fb, eb] = tracked_re(sys, hi, ref);
    if (fa == 0.0) return {lo, ea};
    if (fb == 0.0) return {hi, eb};
    if ((fa < 0) == (fb < 0)) {
        // No sign change at the polished scale: fall back to the midpoint.
        const double mid = 0.5 * (lo + hi);
        auto [fm, em] = tracked_re(sys, mid, ref);
        (void)fm;
        return {mid, em};
    }
    double a = lo, b = hi;
    double best_t = 0.5 * (lo + hi);
    std::complex<double> best_e = ref;
    double best_f = std::numeric_limits<double>::infinity();
    std::complex<double> cur = ref;
    for (int it = 0; it < 48; ++it) {
        double x = b - fb * (b - a) / (fb - fa);
        if (!std::isfinite(x) || x <= std::min(a, b) || x >= std::max(a, b))
            x = 0.5 * (a + b);
        auto [fx, ex] = tracked_re(sys, x, cur);
        cur = ex;
        if (std::abs(fx) < best_f) {
            best_f = std::abs(fx);
            best_t = x;
            best_e = ex;
        }
        if (fx == 0.0) break;
        if ((fx < 0) == (fa < 0)) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        if (std::abs(b - a) <= 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(b)))
            break;
    }
    return {best_t, best_e};
}

// Companion Frobenius norm, used to scale eigensolver-noise thresholds.
inline double companion_norm(const RetardedSystem& sys, double t) {
    return build_companion(sys, t).norm();
}

} // namespace detail

// Direction of the root crossing at (t_c, omega_c): the tracked eigenvalue's
// real part moving -..+ as T increases is destabilizing, +..- stabilizing.
// Tangential touches (same sign on both sides) come back Inconclusive.
inline Direction classify_direction(const RetardedSystem& sys, double t_c, double omega_c,
                                    const SweepConfig& cfg) {
    const std::complex<double> ref(0.0, omega_c);
    double delta = std::min(10.0 * cfg.refine_tol, std::abs(t_c) / 2.0);
    if (delta <= 0.0) return Direction::Inconclusive;
    const double noise = 1e-12 * (1.0 + detail::companion_norm(sys, t_c));
    for (int attempt = 0; attempt < 3; ++attempt) {
        const double rm = detail::tracked_re(sys, t_c - delta, ref).first;
        const double rp = detail::tracked_re(sys, t_c + delta, ref).first;
        if (std::max(std::abs(rm), std::abs(rp)) <= 100.0 * noise) {
            delta = std::min(delta * 8.0, std::abs(t_c) / 2.0);
            continue;
        }
        if (rm < 0.0 && rp > 0.0) return Direction::Destabilizing;
        if (rm > 0.0 && rp < 0.0) return Direction::Stabilizing;
        return Direction::Inconclusive;
    }
    return Direction::Inconclusive;
}

namespace detail {

// Bisect an RHP-count bracket down to refine_tol, splitting whenever the
// midpoint count matches neither endpoint (several crossings in one cell),
// then extract the crossing eigenvalue(s) and secant-polish each.
inline void refine_count_bracket(const RetardedSystem& sys, double lo, double hi, int c_lo,
                                 int c_hi, const SweepConfig& cfg, std::vector<RefinedPoint>& out,
                                 int depth) {
    if (depth > 60)
        throw SolverError("crossing refinement did not converge between T=" + std::to_string(lo) +
                          " and T=" + std::to_string(hi));
    if (c_lo == c_hi) return;
    while (hi - lo > cfg.refine_tol) {
        const double mid = 0.5 * (lo + hi);
        const int c_mid = strict_rhp_at(sys, mid);
        if (c_mid == c_lo) {
            lo = mid;
        } else if (c_mid == c_hi) {
            hi = mid;
        } else {
            refine_count_bracket(sys, lo, mid, c_lo, c_mid, cfg, out, depth + 1);
            refine_count_bracket(sys, mid, hi, c_mid, c_hi, cfg, out, depth + 1);
            return;
        }
    }
    const double mid = 0.5 * (lo + hi);
    const auto eigs = companion_spectrum(sys, mid);
    // Candidate crossing eigenvalues: upper-half-plane, closest to the axis.
    std::vector<std::complex<double>> near_axis;
    double min_re = std::numeric_limits<double>::infinity();
    std::complex<double> nearest(0, 0);
    for (const auto& ev : eigs) {
        if (!(ev.imag() > 0.0)) continue;
        if (std::abs(ev.real()) < min_re) {
            min_re = std::abs(ev.real());
            nearest = ev;
        }
        if (std::abs(ev.real()) <= cfg.eps_imag) near_axis.push_back(ev);
    }
    if (!std::isfinite(min_re))
        throw SolverError("RHP count changed but no complex eigenvalue found near T=" +
                          std::to_string(mid) + spectrum_diag(sys, lo, hi));
    if (near_axis.empty()) near_axis.push_back(nearest);
    // Cluster by frequency; one crossing per distinct omega.
    std::sort(near_axis.begin(), near_axis.end(),
              [](const std::complex<double>& a, const std::complex<double>& b) {
                  return a.imag() < b.imag();
              });
    std::vector<std::complex<double>> reps;
    for (const auto& ev : near_axis)
        if (reps.empty() || std::abs(ev.imag() - reps.back().imag()) > 1e-7 * (1.0 + ev.imag()))
            reps.push_back(ev);
    for (const auto& rep : reps) {
        auto [t_c, eig_c] = polish_root(sys, lo, hi, rep);
        if (std::abs(eig_c.real()) > cfg.eps_imag)
            throw SolverError("refined crossing at T=" + std::to_string(t_c) +
                              " has |Re(s)|=" + std::to_string(std::abs(eig_c.real())) +
                              " above eps_imag=" + std::to_string(cfg.eps_imag) +
                              spectrum_diag(sys, lo, hi));
        out.push_back({t_c, std::abs(eig_c.imag()), false});
    }
}

struct DipEval {
    double value = std::numeric_limits<double>::infinity();
    std::complex<double> eig{0, 0};
};

inline DipEval dip_eval(const RetardedSystem& sys, double t) {
    DipEval d;
    for (const auto& ev : companion_spectrum(sys, t)) {
        if (!(ev.imag() > 0.0)) continue;
        if (std::abs(ev.real()) < d.value) {
            d.value = std::abs(ev.real());
            d.eig = ev;
        }
    }
    return d;
}

// Golden-section minimize min|Re| inside a count-flat bracket, then decide
// whether the axis was merely grazed (tangential touch), actually crossed
// twice (a double crossing hidden from the count), or crossed once.
inline void refine_dip_bracket(const RetardedSystem& sys, double lo, double hi,
                               const SweepConfig& cfg, std::vector<RefinedPoint>& out) {
    constexpr double invphi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double gc = dip_eval(sys, c).value, gd = dip_eval(sys, d).value;
    int guard = 0;
    while (b - a > cfg.refine_tol && ++guard < 200) {
        if (gc < gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - invphi * (b - a);
            gc = dip_eval(sys, c).value;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + invphi * (b - a);
            gd = dip_eval(sys, d).value;
        }
    }
    const double t_star = 0.5 * (a + b);
    const DipEval star = dip_eval(sys, t_star);
    if (!(star.value <= cfg.eps_imag)) return; // near miss, no crossing here
    const std::complex<double> ref = star.eig;
    // Widen a window around t_star until both sides are clear of the axis.
    double w = std::min(10.0 * cfg.refine_tol, std::abs(t_star) / 2.0);
    double rm = 0, rp = 0;
    bool clear = false;
    for (int k = 0; k < 24; ++k) {
        rm = tracked_re(sys, t_star - w, ref).first;
        rp = tracked_re(sys, t_star + w, ref).first;
        if (std::abs(rm) > cfg.eps_imag && std::abs(rp) > cfg.eps_imag) {
            clear = true;
            break;
        }
        const double w2 = std::min({w * 2.0, std::abs(t_star) / 2.0, hi - lo});
        if (w2 <= w) break;
        w = w2;
    }
    if (!clear) {
        out.push_back({t_star, std::abs(ref.imag()), true});
        return;
    }
    const double rc = star.eig.real();
    if ((rm < 0) != (rp < 0)) {
        // A single transversal the grid count somehow compensated.
        auto [t_c, eig_c] = polish_root(sys, t_star - w, t_star + w, ref);
        out.push_back({t_c, std::abs(eig_c.imag()), false});
    } else if ((rm > 0 && rp > 0 && rc < -cfg.eps_imag) ||
               (rm < 0 && rp < 0 && rc > cfg.eps_imag)) {
        // Crossed the axis and came back inside the window: two crossings.
        auto [t1, e1] = polish_root(sys, t_star - w, t_star, ref);
        auto [t2, e2] = polish_root(sys, t_star, t_star + w, ref);
        out.push_back({t1, std::abs(e1.imag()), false});
        out.push_back({t2, std::abs(e2.imag()), false});
    } else {
        out.push_back({t_star, std::abs(ref.imag()), true}); // tangential touch
        return; // a touch leaves the RHP counts unchanged; flanks are clean
    }
    // The window around t_star is resolved, but the bracket's endpoint counts
    // only match each other: a compensating transversal can still hide in a
    // flank (e.g. an enter/leave pair split by the window). Sweep both.
    const double win_lo = std::max(lo, t_star - w);
    const double win_hi = std::min(hi, t_star + w);
    if (win_lo - lo > cfg.refine_tol) {
        const int c_lo = strict_rhp_at(sys, lo);
        const int c_wlo = strict_rhp_at(sys, win_lo);
        if (c_lo != c_wlo) refine_count_bracket(sys, lo, win_lo, c_lo, c_wlo, cfg, out, 0);
    }
    if (hi - win_hi > cfg.refine_tol) {
        const int c_whi = strict_rhp_at(sys, win_hi);
        const int c_hi = strict_rhp_at(sys, hi);
        if (c_whi != c_hi) refine_count_bracket(sys, win_hi, hi, c_whi, c_hi, cfg, out, 0);
    }
}

} // namespace detail

// Refine one candidate bracket; may legitimately produce several crossings
// (split brackets) or none (a dip that never reaches the axis).
inline std::vector<RefinedPoint> refine_candidate(const RetardedSystem& sys,
                                                  const CrossingCandidate& cand,
                                                  const SweepConfig& cfg) {
    std::vector<RefinedPoint> out;
    if (cand.from_dip)
        detail::refine_dip_bracket(sys, cand.t_lo, cand.t_hi, cfg, out);
    else
        detail::refine_count_bracket(sys, cand.t_lo, cand.t_hi, cand.rhp_lo, cand.rhp_hi, cfg, out,
                                     0);
    return out;
}

// Single-crossing wrapper: smallest-omega result of refine_candidate.
inline std::pair<double, double> refine_crossing(const RetardedSystem& sys,
                                                 const CrossingCandidate& cand,
                                                 const SweepConfig& cfg) {
    auto pts = refine_candidate(sys, cand, cfg);
    if (pts.empty())
        throw SolverError("bracket [" + std::to_string(cand.t_lo) + ", " +
                          std::to_string(cand.t_hi) + "] contains no imaginary-axis crossing" +
                          detail::spectrum_diag(sys, cand.t_lo, cand.t_hi));
    const auto best = std::min_element(pts.begin(), pts.end(),
                                       [](const RefinedPoint& a, const RefinedPoint& b) {
                                           return a.omega_c < b.omega_c;
                                       });
    return {best->t_c, best->omega_c};
}

// ---------------------------------------------------------------------------
// Delay ladders

// tau_0 = (2/omega)(atan(omega T) + l*pi) with l in {0, 1} chosen so that
// tau_0 is the smallest nonnegative delay; the ladder steps by 2*pi/omega.
inline std::vector<double> taus_from_crossing(double t_c, double omega_c, int k_max) {
    if (!(omega_c > 0.0)) throw InputError("crossing frequency must be positive");
    if (k_max < 0) throw InputError("k_max must be nonnegative");
    const double theta = std::atan(omega_c * t_c);
    const double tau0 = (2.0 / omega_c) * (theta < 0.0 ? theta + kPi : theta);
    const double period = 2.0 * kPi / omega_c;
    std::vector<double> taus(static_cast<std::size_t>(k_max) + 1);
    for (int k = 0; k <= k_max; ++k)
        taus[static_cast<std::size_t>(k)] = tau0 + period * static_cast<double>(k);
    return taus;
}

// ---------------------------------------------------------------------------
// Full pipeline

namespace detail {

inline void ensure_analysis_preconditions(const RetardedSystem& sys) {
    if (!delay_free_stable(delay_free_spectrum(sys)))
        throw PreconditionError(
            "delay-free system (A0 + A1) is unstable; no finite delay margin exists to search for");
    if (check_zero_root(sys))
        throw PreconditionError(
            "det(A0 + A1) is numerically zero: s = 0 is a characteristic root for every delay; "
            "this degeneracy must be studied separately from omega > 0 crossings");
}

} // namespace detail

// Scan + refine + classify + ladder: everything except the stability walk.
inline SweepResult find_crossings(const RetardedSystem& sys, SweepConfig cfg_in) {
    const SweepConfig cfg = resolve_config(sys, cfg_in);
    detail::ensure_analysis_preconditions(sys);
    const auto grid = detail::evaluate_grid(sys, cfg, cfg.workers);
    const auto candidates = detail::detect_candidates(cfg, grid);

    std::vector<RefinedPoint> raw;
    for (const auto& cand : candidates) {
        auto pts = refine_candidate(sys, cand, cfg);
        raw.insert(raw.end(), pts.begin(), pts.end());
    }
    // Deduplicate: adjacent brackets and split recursion can reproduce the
    // same crossing. Polished points agree to ~1e-12, touches to refine_tol.
    std::sort(raw.begin(), raw.end(),
              [](const RefinedPoint& a, const RefinedPoint& b) { return a.t_c < b.t_c; });
    std::vector<RefinedPoint> uniq;
    for (const auto& p : raw) {
        bool dup = false;
        for (auto it = uniq.rbegin(); it != uniq.rend(); ++it) {
            const double t_tol =
                (p.touch || it->touch ? 100.0 * cfg.refine_tol : 1e-7) * (1.0 + std::abs(p.t_c));
            if (p.t_c - it->t_c > t_tol) break;
            if (std::abs(p.omega_c - it->omega_c) <= 1e-6 * (1.0 + p.omega_c)) {
                dup = true;
                if (it->touch && !p.touch) *it = p; // polished beats grazed
                break;
            }
        }
        if (!dup) uniq.push_back(p);
    }

    SweepResult res;
    res.config = cfg;
    for (const auto& p : uniq) {
        Crossing cr;
        cr.t_c = p.t_c;
        cr.omega_c = p.omega_c;
        cr.direction = p.touch ? Direction::Inconclusive
                               : classify_direction(sys, p.t_c, p.omega_c, cfg);
        cr.taus = taus_from_crossing(p.t_c, p.omega_c, cfg.k_max);
        // Sub-threshold frequencies sit too close to s = 0 to trust: report,
        // but keep them out of the margin walk.
        const bool conclusive = cr.direction != Direction::Inconclusive && p.omega_c > cfg.eps_imag;
        (conclusive ? res.crossings : res.inconclusive).push_back(std::move(cr));
    }
    auto by_tau0 = [](const Crossing& a, const Crossing& b) {
        return a.taus.front() < b.taus.front();
    };
    std::sort(res.crossings.begin(), res.crossings.end(), by_tau0);
    std::sort(res.inconclusive.begin(), res.inconclusive.end(), by_tau0);
    return res;
}

namespace detail {

// Walk the merged delay ladders from tau = 0, counting unstable pole pairs:
// +1 per destabilizing tau, -1 per stabilizing tau. Stable windows are the
// count == 0 stretches; the margin is the first departure from 0. Ladders
// are only known up to k_max entries, so results are clipped to the ladder
// coverage horizon.
inline void walk_ladders(const SweepResult& sweep, StabilityReport& rep) {
    rep.crossings = sweep.crossings;
    rep.inconclusive = sweep.inconclusive;
    rep.config = sweep.config;
    const double inf = std::numeric_limits<double>::infinity();
    if (sweep.crossings.empty()) {
        rep.delay_margin.reset();
        rep.tau_coverage = inf;
        rep.windows = {{0.0, inf}};
        return;
    }
    double coverage = inf;
    for (const auto& cr : sweep.crossings) {
        const double period = 2.0 * kPi / cr.omega_c;
        coverage = std::min(coverage, cr.taus.front() +
                                          period * static_cast<double>(cr.taus.size()));
    }
    rep.tau_coverage = coverage;

    struct Event {
        double tau;
        int delta;
    };
    std::vector<Event> events;
    for (const auto& cr : sweep.crossings) {
        const int delta = cr.direction == Direction::Destabilizing ? +1 : -1;
        for (double tau : cr.taus)
            if (tau <= coverage) events.push_back({tau, delta});
    }
    std::sort(events.begin(), events.end(),
              [](const Event& a, const Event& b) { return a.tau < b.tau; });

    int count = 0;
    bool window_open = true; // delay-free stability was checked upstream
    double window_lo = 0.0;
    std::size_t i = 0;
    while (i < events.size()) {
        // Group coincident taus (e.g. two ladders meeting) and apply the net.
        const double tau = events[i].tau;
        int delta = 0;
        while (i < events.size() && events[i].tau - tau <= 1e-9 * std::max(1.0, tau)) {
            delta += events[i].delta;
            ++i;
        }
        const int prev = count;
        count += delta;
        if (count < 0)
            throw ConsistencyError(
                "stability walk went negative at tau=" + std::to_string(tau) +
                ": a stabilizing ladder has no destabilizing partner; the matching crossing most "
                "likely lies outside the scanned T range [" + std::to_string(sweep.config.t_min) +
                ", " + std::to_string(sweep.config.t_max) + "]");
        if (prev == 0 && count > 0) {
            if (tau > window_lo) rep.windows.emplace_back(window_lo, tau);
            window_open = false;
            if (!rep.delay_margin) rep.delay_margin = tau;
        } else if (prev > 0 && count == 0) {
            window_lo = tau;
            window_open = true;
        }
    }
    if (window_open && coverage > window_lo) rep.windows.emplace_back(window_lo, coverage);
}

} // namespace detail

// Full analysis: crossings, direction labels, delay ladders, margin, windows.
inline StabilityReport analyze(const RetardedSystem& sys, SweepConfig cfg = {}) {
    const SweepResult sweep = find_crossings(sys, cfg);
    StabilityReport rep;
    detail::walk_ladders(sweep, rep);
    return rep;
}

} // namespace delaymargin
