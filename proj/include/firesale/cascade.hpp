// Round-by-round execution of the fire sales process and its auxiliary overestimate.
//
// Fire sales process: institutions sell x_i * rho(loss/c_i); shares sold in round k
// realize the price impact prevailing at the start of round k, so the loss credits
// each past sale at its own round's prices. Auxiliary process: all past sales are
// priced at the current (worst) impact, which yields the monotone fixed-point map.
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "firesale/common.hpp"
#include "firesale/system.hpp"

namespace firesale {

struct CascadeOptions {
    double tol = 1e-12;            // sup-norm step on sold shares per n
    std::int64_t max_rounds = 1'000'000;
    bool trace = false;            // keep per-round (sold/n, impact) rows
};

struct CascadeResult {
    std::vector<double> sold_per_n;       // finally sold shares divided by n, per asset
    double default_fraction = 0.0;
    std::vector<std::uint32_t> defaults;  // institution indices
    std::int64_t rounds = 0;
    bool converged = false;
    bool has_trace = false;
    std::vector<double> trace_sold;       // rounds x M, cumulative sold/n at round start
    std::vector<double> trace_impact;     // rounds x M, h at round start
};

namespace detail {

struct Engine {
    const FiniteSystem& sys;
    std::size_t n;
    int M;
    std::vector<double> sold_frac;           // s_i, non-decreasing per institution
    std::vector<double> tau;                 // cumulative sold shares (not divided by n)
    std::vector<double> hv;                  // h(tau / n)
    std::vector<double> chi_scratch;
    std::vector<std::vector<double>> batch;  // per-asset share increments this round

    explicit Engine(const FiniteSystem& s)
        : sys(s),
          n(s.size()),
          M(s.assets),
          sold_frac(s.size(), 0.0),
          tau(static_cast<std::size_t>(s.assets), 0.0),
          hv(static_cast<std::size_t>(s.assets), 0.0),
          chi_scratch(static_cast<std::size_t>(s.assets), 0.0),
          batch(static_cast<std::size_t>(s.assets)) {}

    void refresh_impact() {
        for (int m = 0; m < M; ++m)
            chi_scratch[static_cast<std::size_t>(m)] =
                tau[static_cast<std::size_t>(m)] / static_cast<double>(n);
        sys.impact.eval(chi_scratch, hv);
    }

    double dot_row(std::size_t i) const {
        const double* x = sys.row(i);
        double d = 0.0;
        for (int m = 0; m < M; ++m) d += x[m] * hv[static_cast<std::size_t>(m)];
        return d;
    }

    // Advances sold fractions to new_frac[i] (clamped to be non-decreasing) and adds
    // x_i * ds into tau. Each round's additions are sorted per asset before summing,
    // so the trajectory is exactly invariant under permutations of the rows.
    bool advance(std::span<const double> new_frac) {
        for (auto& b : batch) b.clear();
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            double ds = new_frac[i] - sold_frac[i];
            if (ds <= 0.0) continue;
            const double* x = sys.row(i);
            for (int m = 0; m < M; ++m) {
                double inc = x[m] * ds;
                if (inc > 0.0) batch[static_cast<std::size_t>(m)].push_back(inc);
            }
            sold_frac[i] = new_frac[i];
            changed = true;
        }
        for (int m = 0; m < M; ++m) {
            auto& b = batch[static_cast<std::size_t>(m)];
            if (!b.empty()) tau[static_cast<std::size_t>(m)] += sorted_sum(b);
        }
        return changed;
    }

    double step_sup(std::span<const double> prev_tau) const {
        double diff = 0.0;
        for (int m = 0; m < M; ++m) {
            double d = (tau[static_cast<std::size_t>(m)] - prev_tau[m]) / static_cast<double>(n);
            if (d > diff) diff = d;
        }
        return diff;
    }
};

inline void record_trace(CascadeResult& res, const Engine& eng) {
    for (int m = 0; m < eng.M; ++m) {
        res.trace_sold.push_back(eng.tau[static_cast<std::size_t>(m)] /
                                 static_cast<double>(eng.n));
        res.trace_impact.push_back(eng.hv[static_cast<std::size_t>(m)]);
    }
}

inline void finish(CascadeResult& res, Engine& eng, std::span<const double> final_loss) {
    res.sold_per_n.resize(static_cast<std::size_t>(eng.M));
    for (int m = 0; m < eng.M; ++m)
        res.sold_per_n[static_cast<std::size_t>(m)] =
            eng.tau[static_cast<std::size_t>(m)] / static_cast<double>(eng.n);
    for (std::size_t i = 0; i < eng.n; ++i)
        if (final_loss[i] >= eng.sys.capitals[i])
            res.defaults.push_back(static_cast<std::uint32_t>(i));
    res.default_fraction = static_cast<double>(res.defaults.size()) / static_cast<double>(eng.n);
}

}  // namespace detail

inline CascadeResult run_fire_sales(const FiniteSystem& sys, const CascadeOptions& opts = {}) {
    if (!(opts.tol > 0.0)) throw DomainError("cascade: tol must be positive");
    sys.validate();
    detail::Engine eng(sys);
    const std::size_t n = eng.n;
    std::vector<double> realized(n, 0.0);  // loss credited to sales of earlier rounds
    std::vector<double> loss(n, 0.0);
    std::vector<double> dot(n, 0.0);
    std::vector<double> new_frac(n, 0.0);
    std::vector<double> prev_tau(static_cast<std::size_t>(eng.M), 0.0);
    CascadeResult res;
    res.has_trace = opts.trace;

    for (std::int64_t k = 1; k <= opts.max_rounds; ++k) {
        eng.refresh_impact();
        if (opts.trace) detail::record_trace(res, eng);
        for (std::size_t i = 0; i < n; ++i) {
            double s = eng.sold_frac[i];
            if (s >= 1.0) {
                new_frac[i] = s;  // fully liquidated; nothing left to mark or sell
                continue;
            }
            dot[i] = eng.dot_row(i);
            loss[i] = sys.losses[i] + (1.0 - s) * dot[i] + realized[i];
            double sn = sys.sales(loss[i] / sys.capitals[i]);
            new_frac[i] = sn > s ? sn : s;
            realized[i] += (new_frac[i] - s) * dot[i];
        }
        prev_tau.assign(eng.tau.begin(), eng.tau.end());
        bool changed = eng.advance(new_frac);
        res.rounds = k;
        if (!changed || eng.step_sup(prev_tau) < opts.tol) {
            res.converged = true;
            break;
        }
    }

    eng.refresh_impact();
    for (std::size_t i = 0; i < n; ++i)
        loss[i] = sys.losses[i] + (1.0 - eng.sold_frac[i]) * eng.dot_row(i) + realized[i];
    detail::finish(res, eng, loss);
    return res;
}

inline CascadeResult run_auxiliary(const FiniteSystem& sys, const CascadeOptions& opts = {}) {
    if (!(opts.tol > 0.0)) throw DomainError("cascade: tol must be positive");
    sys.validate();
    detail::Engine eng(sys);
    const std::size_t n = eng.n;
    std::vector<double> loss(n, 0.0);
    std::vector<double> new_frac(n, 0.0);
    std::vector<double> prev_tau(static_cast<std::size_t>(eng.M), 0.0);
    CascadeResult res;
    res.has_trace = opts.trace;

    for (std::int64_t k = 1; k <= opts.max_rounds; ++k) {
        eng.refresh_impact();
        if (opts.trace) detail::record_trace(res, eng);
        for (std::size_t i = 0; i < n; ++i) {
            loss[i] = sys.losses[i] + eng.dot_row(i);
            double sn = sys.sales(loss[i] / sys.capitals[i]);
            new_frac[i] = sn > eng.sold_frac[i] ? sn : eng.sold_frac[i];
        }
        prev_tau.assign(eng.tau.begin(), eng.tau.end());
        bool changed = eng.advance(new_frac);
        res.rounds = k;
        if (!changed || eng.step_sup(prev_tau) < opts.tol) {
            res.converged = true;
            break;
        }
    }

    // defaults evaluated at the limiting sold shares: loss_i = l_i + x_i . h(chi_n)
    eng.refresh_impact();
    for (std::size_t i = 0; i < n; ++i) loss[i] = sys.losses[i] + eng.dot_row(i);
    detail::finish(res, eng, loss);
    return res;
}

// --- Coupling of the two processes -------------------------------------------------

struct CouplingReport {
    std::int64_t rounds = 0;
    int assets = 0;
    std::vector<double> margins;        // rounds x M, sigma_(k) - tau_(k), per n
    std::int64_t first_violation = -1;  // round index (1-based), -1 when none
    bool ok = true;
};

// Compares two cumulative-sales traces (rows of sold/n per round); trace rows beyond a
// process' convergence are extended with its final row.
inline CouplingReport coupling_report(std::span<const double> tau_trace,
                                      std::span<const double> sigma_trace, int assets,
                                      std::int64_t rounds) {
    CouplingReport rep;
    rep.rounds = rounds;
    rep.assets = assets;
    auto at = [&](std::span<const double> tr, std::int64_t k, int m) {
        std::int64_t have = static_cast<std::int64_t>(tr.size()) / assets;
        std::int64_t row = k < have ? k : have - 1;
        return tr[static_cast<std::size_t>(row * assets + m)];
    };
    for (std::int64_t k = 0; k < rounds; ++k) {
        for (int m = 0; m < assets; ++m) {
            double margin = at(sigma_trace, k, m) - at(tau_trace, k, m);
            rep.margins.push_back(margin);
            if (margin < 0.0 && rep.first_violation < 0) rep.first_violation = k + 1;
        }
    }
    rep.ok = rep.first_violation < 0;
    return rep;
}

// Runs both processes side by side for `rounds` rounds and checks tau_(k) <= sigma_(k)
// componentwise; a violation signals an engine bug, not a property of the system.
inline CouplingReport verify_coupling(const FiniteSystem& sys, std::int64_t rounds,
                                      double tol = 1e-12) {
    CascadeOptions opts;
    opts.tol = tol;
    opts.max_rounds = rounds;
    opts.trace = true;
    CascadeResult real = run_fire_sales(sys, opts);
    CascadeResult aux = run_auxiliary(sys, opts);
    return coupling_report(real.trace_sold, aux.trace_sold, sys.assets, rounds);
}

// --- Smallest fixed point of the finite-system auxiliary map -----------------------

struct FinitePicardResult {
    std::vector<double> chi;        // Picard limit with the given sales function
    std::vector<double> chi_lower;  // same with the left-continuous modification
    bool converged = false;
    bool lower_converged = false;
    std::int64_t rounds = 0;
};

// Picard iteration from 0 of chi -> (1/n) sum_i x_i rho((l_i + x_i . h(chi)) / c_i);
// equals the run_auxiliary limit. For jump sales functions the second component
// iterates the left-continuous modification, giving the lower-bound root.
inline FinitePicardResult smallest_fixed_point_finite(const FiniteSystem& sys,
                                                      double tol = 1e-12,
                                                      std::int64_t max_rounds = 1'000'000) {
    FinitePicardResult out;
    CascadeOptions opts;
    opts.tol = tol;
    opts.max_rounds = max_rounds;
    CascadeResult upper = run_auxiliary(sys, opts);
    out.chi = upper.sold_per_n;
    out.converged = upper.converged;
    out.rounds = upper.rounds;
    if (sys.sales.continuous()) {
        out.chi_lower = out.chi;
        out.lower_converged = out.converged;
    } else {
        FiniteSystem lower = sys;
        lower.sales = sys.sales.left_continuous_modification();
        CascadeResult lo = run_auxiliary(lower, opts);
        out.chi_lower = lo.sold_per_n;
        out.lower_converged = lo.converged;
    }
    return out;
}

}  // namespace firesale
