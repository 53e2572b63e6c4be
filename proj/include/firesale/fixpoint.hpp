// Limiting functionals f^m and the roots that describe the auxiliary process limit:
// the smallest joint root chi_hat (Picard from 0 on the monotone map) and the
// connected-component supremum chi_star (limit of the epsilon-inflated smallest
// fixed points, whose value satisfies f^m = -epsilon for every asset).
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "firesale/common.hpp"
#include "firesale/limit.hpp"

namespace firesale {

struct RootOptions {
    double tol = 1e-10;
    std::int64_t max_iters = 1'000'000;
};

struct PicardResult {
    std::vector<double> chi;
    std::int64_t iters = 0;
    bool converged = false;
};

// f^m(chi) = E[X^m rho((L + X . h(chi)) / C)] - chi^m
inline std::vector<double> eval_f(const LimitSystem& sys, std::span<const double> chi) {
    std::vector<double> out = sys.phi(chi);
    for (std::size_t m = 0; m < out.size(); ++m) out[m] -= chi[m];
    return out;
}

inline double eval_g(const LimitSystem& sys, std::span<const double> chi, bool strict = false) {
    return sys.prob_default(chi, strict);
}

// Picard iteration of chi <- E[X rho(...)] + inflate from chi = 0. The map is monotone
// and bounded by E[X] + inflate, so iterates increase toward the smallest fixed point.
inline PicardResult picard_smallest_fixed_point(const LimitSystem& sys, const RootOptions& opts,
                                                double inflate = 0.0) {
    if (!(opts.tol > 0.0)) throw DomainError("fixpoint: tol must be positive");
    const int M = sys.assets();
    PicardResult res;
    res.chi.assign(static_cast<std::size_t>(M), 0.0);
    for (std::int64_t k = 1; k <= opts.max_iters; ++k) {
        std::vector<double> next = sys.phi(res.chi);
        double step = 0.0;
        for (int m = 0; m < M; ++m) {
            auto mm = static_cast<std::size_t>(m);
            next[mm] += inflate;
            if (next[mm] < res.chi[mm]) next[mm] = res.chi[mm];  // guard MC/quadrature noise
            step = std::max(step, next[mm] - res.chi[mm]);
        }
        res.chi = std::move(next);
        res.iters = k;
        if (step < opts.tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

inline PicardResult smallest_joint_root(const LimitSystem& sys, const RootOptions& opts = {}) {
    return picard_smallest_fixed_point(sys, opts);
}

// The coupled lower-bound system of eq-style (1-eps) holdings and min(rho, eps) sales.
inline LimitSystem epsilon_reduced_system(const LimitSystem& sys, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("epsilon_reduced_system: eps in (0,1)");
    return sys.scaled_holdings(1.0 - eps).with_sales(sys.sales().capped(eps));
}

struct Root1d {
    double chi = 0.0;
    double slope = 0.0;   // numeric df/dchi at the root
    bool stable = false;  // f falls through zero (+ to -)
    bool merged = false;  // other sign changes within one grid cell were merged in
};

// Dense scan of f over [0, E[X]] at the given grid with bisection refinement. Serves
// as the independent root oracle for one-asset systems.
inline std::vector<Root1d> root_inventory_1d(const LimitSystem& sys, double grid_factor = 1e-3,
                                             double refine_tol = 1e-10) {
    if (sys.assets() != 1) throw PreconditionViolated("root inventory requires M = 1");
    double hi = sys.mean_holdings(0) * (1.0 + 1e-9) + refine_tol;
    double step = grid_factor * sys.mean_holdings(0);
    auto f1 = [&](double x) {
        double c[1] = {x};
        return eval_f(sys, c)[0];
    };
    std::vector<Root1d> roots;
    double a = 0.0, fa = f1(0.0);
    while (a < hi) {
        double b = std::min(a + step, hi);
        double fb = f1(b);
        bool change = (fa > 0.0 && fb <= 0.0) || (fa < 0.0 && fb >= 0.0);
        if (change) {
            double lo = a, lh = b, flo = fa;
            while (lh - lo > refine_tol) {
                double mid = 0.5 * (lo + lh);
                double fm = f1(mid);
                if ((flo > 0.0) == (fm > 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    lh = mid;
                }
            }
            Root1d r;
            r.chi = 0.5 * (lo + lh);
            double d = std::max(1e-7, step * 1e-3);
            r.slope = (f1(r.chi + d) - f1(std::max(0.0, r.chi - d))) / (2.0 * d);
            r.stable = fa > 0.0;  // came from positive territory
            if (!roots.empty() && r.chi - roots.back().chi < step) {
                roots.back().merged = true;
            } else {
                roots.push_back(r);
            }
        }
        a = b;
        fa = fb;
    }
    return roots;
}

struct ChiReport {
    std::vector<double> chi_hat;
    std::vector<double> chi_star;
    std::vector<std::pair<double, std::vector<double>>> epsilon_ladder;  // (eps, chi_hat(eps))
    std::vector<Root1d> roots_1d;  // filled for one-asset systems
    bool chi_hat_converged = false;
    bool ladder_converged = false;
    double terminal_epsilon = 0.0;
    bool pathological = false;  // positive shock with chi_hat != chi_star beyond tolerance
    double g_at_chi_hat = 0.0, g_at_chi_star = 0.0;
    double g_strict_at_chi_hat = 0.0, g_strict_at_chi_star = 0.0;
};

inline std::vector<double> default_epsilon_ladder() {
    std::vector<double> out;
    for (int j = 3; j <= 20; ++j) out.push_back(std::ldexp(1.0, -j));
    return out;
}

// Computes chi_hat, the epsilon ladder and its limit chi_star, the one-dimensional
// root inventory, and the default fractions at both points. `ladder_tol` declares the
// ladder converged once two successive points agree to that resolution; the terminal
// epsilon is reported alongside since it bounds |f(chi_star)|.
inline ChiReport chi_star_report(const LimitSystem& sys,
                                 std::vector<double> ladder = default_epsilon_ladder(),
                                 const RootOptions& opts = {}, double ladder_tol = 1e-5) {
    if (ladder.empty()) throw DomainError("chi_star: epsilon ladder must be non-empty");
    for (std::size_t i = 1; i < ladder.size(); ++i)
        if (!(ladder[i] < ladder[i - 1]) || !(ladder[i] > 0.0))
            throw DomainError("chi_star: ladder must be strictly decreasing and positive");

    ChiReport rep;
    PicardResult hat = picard_smallest_fixed_point(sys, opts);
    rep.chi_hat = hat.chi;
    rep.chi_hat_converged = hat.converged;

    std::vector<double> prev;
    double last_step = kInf;
    for (double eps : ladder) {
        PicardResult pe = picard_smallest_fixed_point(sys, opts, eps);
        rep.epsilon_ladder.emplace_back(eps, pe.chi);
        rep.terminal_epsilon = eps;
        if (!prev.empty()) {
            last_step = 0.0;
            for (std::size_t m = 0; m < prev.size(); ++m)
                last_step = std::max(last_step, std::abs(prev[m] - pe.chi[m]));
            if (last_step < ladder_tol) {
                rep.ladder_converged = true;
                prev = pe.chi;
                break;
            }
        }
        prev = pe.chi;
    }
    rep.chi_star = prev;

    if (sys.assets() == 1) rep.roots_1d = root_inventory_1d(sys, 1e-3, 1e-10);

    // A shocked system where the ladder limit stays away from the smallest root by
    // more than the ladder's own resolution is the unstable-first-root situation.
    double mism = 0.0;
    for (std::size_t m = 0; m < rep.chi_hat.size(); ++m)
        mism = std::max(mism, std::abs(rep.chi_star[m] - rep.chi_hat[m]));
    double resolution = std::max(opts.tol, std::isfinite(last_step) ? last_step : 0.0);
    rep.pathological = sys.shock_positive() && mism > 10.0 * resolution;

    rep.g_at_chi_hat = eval_g(sys, rep.chi_hat, false);
    rep.g_strict_at_chi_hat = eval_g(sys, rep.chi_hat, true);
    rep.g_at_chi_star = eval_g(sys, rep.chi_star, false);
    rep.g_strict_at_chi_star = eval_g(sys, rep.chi_star, true);
    return rep;
}

}  // namespace firesale
