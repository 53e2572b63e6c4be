// Sampling finite systems from limiting distributions and running replicated studies.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "firesale/cascade.hpp"
#include "firesale/common.hpp"
#include "firesale/limit.hpp"
#include "firesale/rng.hpp"
#include "firesale/system.hpp"

namespace firesale {

struct EnsembleSpec {
    std::size_t n = 0;

    struct Structure {
        enum class Kind { WeightedSplit, SubsystemGrid };
        Kind kind = Kind::WeightedSplit;
        std::vector<double> weights;  // WeightedSplit: lambda per asset, summing to 1
        int S = 1, D = 0, J = 0;      // SubsystemGrid: M = S*D + J, Delta = D + J
    } structure;

    struct Holdings {
        enum class Kind { Pareto, Exponential, Fixed };
        Kind kind = Kind::Pareto;
        double beta = 3.0;           // sampling allows beta > 1; mean claims need > 2
        double rate = 1.0;
        std::vector<double> fixed;   // cycled when shorter than n
    } holdings;

    CapitalRule capital = CapitalRule::constant(1.0);

    struct Shock {
        enum class Kind { Spec, InitialDefaultFraction };
        Kind kind = Kind::Spec;
        ShockSpec spec;               // realized independently per institution
        double p = 0.0;               // InitialDefaultFraction: l_i = c_i for round(p n)
        bool stratified = true;       // split the defaulted set equally across subsystems
    } shock;

    std::uint64_t seed = 1;
    bool pad_to_divisible = false;    // SubsystemGrid: pad n up to a multiple of S

    SalesFunction sales = SalesFunction::indicator();
    ImpactComponent impact = PriceImpact::exponential();
};

namespace detail {

inline void shuffle_indices(std::vector<std::uint32_t>& idx, CounterRng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
        std::swap(idx[i - 1], idx[j]);
    }
}

inline double draw_total(const EnsembleSpec::Holdings& h, std::size_t i, CounterRng& rng) {
    switch (h.kind) {
        case EnsembleSpec::Holdings::Kind::Pareto:
            if (!(h.beta > 1.0)) throw DomainError("ensemble: pareto beta must exceed 1");
            return rng.next_pareto(h.beta);
        case EnsembleSpec::Holdings::Kind::Exponential:
            return rng.next_exponential(h.rate);
        case EnsembleSpec::Holdings::Kind::Fixed:
            if (h.fixed.empty()) throw DomainError("ensemble: fixed sample is empty");
            return h.fixed[i % h.fixed.size()];
    }
    return 0.0;
}

}  // namespace detail

// Deterministic given the seed: stream 0 draws holdings, stream 1 realizes shocks,
// stream 2 shuffles for initial-default selection. The recorded total x_i^tot is the
// sequential sum of the constructed components, so row sums match it exactly.
inline FiniteSystem sample_system(const EnsembleSpec& spec) {
    if (spec.n == 0) throw DomainError("ensemble: n must be positive");
    std::size_t n = spec.n;
    int M;
    int S = 1, D = 0, J = 0, delta = 0;
    if (spec.structure.kind == EnsembleSpec::Structure::Kind::SubsystemGrid) {
        S = spec.structure.S;
        D = spec.structure.D;
        J = spec.structure.J;
        if (S < 1 || D < 0 || J < 0 || D + J < 1)
            throw DomainError("ensemble: invalid (S, D, J)");
        delta = D + J;
        M = S * D + J;
        if (n % static_cast<std::size_t>(S) != 0) {
            if (!spec.pad_to_divisible)
                throw DomainError("ensemble: n not divisible by S (set pad flag to pad)");
            n += static_cast<std::size_t>(S) - n % static_cast<std::size_t>(S);
        }
    } else {
        if (spec.structure.weights.empty())
            throw DomainError("ensemble: weighted split needs weights");
        double sum = 0.0;
        for (double w : spec.structure.weights) {
            if (!(w > 0.0)) throw DomainError("ensemble: weights must be positive");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw DomainError("ensemble: weights must sum to 1");
        M = static_cast<int>(spec.structure.weights.size());
    }
    FiniteSystem sys;
    sys.assets = M;
    sys.sales = spec.sales;
    sys.impact = PriceImpact::uniform(spec.impact, M);
    sys.holdings.assign(n * static_cast<std::size_t>(M), 0.0);
    sys.capitals.resize(n);
    sys.losses.assign(n, 0.0);

    CounterRng draws = CounterRng::stream(spec.seed, 0);
    CounterRng shocks = CounterRng::stream(spec.seed, 1);
    CounterRng shuffler = CounterRng::stream(spec.seed, 2);

    std::vector<double> totals(n);
    for (std::size_t i = 0; i < n; ++i) {
        double t = detail::draw_total(spec.holdings, i, draws);
        double* row = sys.holdings.data() + i * static_cast<std::size_t>(M);
        double recorded = 0.0;
        if (spec.structure.kind == EnsembleSpec::Structure::Kind::SubsystemGrid) {
            int s = static_cast<int>(i % static_cast<std::size_t>(S));
            double q = t / static_cast<double>(delta);
            for (int j = 0; j < J; ++j) row[j] = q;
            for (int d = 0; d < D; ++d) row[J + s * D + d] = q;
        } else {
            for (int m = 0; m < M; ++m)
                row[m] = spec.structure.weights[static_cast<std::size_t>(m)] * t;
        }
        for (int m = 0; m < M; ++m) recorded += row[m];
        totals[i] = recorded;
        sys.capitals[i] = spec.capital.eval(recorded);
    }

    if (spec.shock.kind == EnsembleSpec::Shock::Kind::Spec) {
        for (std::size_t i = 0; i < n; ++i) {
            double u = shocks.next_unit();
            switch (spec.shock.spec.kind) {
                case ShockSpec::Kind::None: break;
                case ShockSpec::Kind::AtomicDefault:
                    if (u < spec.shock.spec.p)
                        sys.losses[i] = spec.shock.spec.multiple * sys.capitals[i];
                    break;
                case ShockSpec::Kind::ProportionalCap:
                    sys.losses[i] = spec.shock.spec.delta * sys.capitals[i];
                    break;
            }
        }
    } else {
        std::size_t k = static_cast<std::size_t>(std::llround(spec.shock.p * static_cast<double>(n)));
        k = std::min(k, n);
        bool stratify = spec.shock.stratified &&
                        spec.structure.kind == EnsembleSpec::Structure::Kind::SubsystemGrid &&
                        S > 1;
        if (stratify) {
            std::size_t per = k / static_cast<std::size_t>(S);
            std::size_t rem = k - per * static_cast<std::size_t>(S);
            for (int s = 0; s < S; ++s) {
                std::vector<std::uint32_t> idx;
                for (std::size_t i = static_cast<std::size_t>(s); i < n;
                     i += static_cast<std::size_t>(S))
                    idx.push_back(static_cast<std::uint32_t>(i));
                detail::shuffle_indices(idx, shuffler);
                std::size_t take = per + (static_cast<std::size_t>(s) < rem ? 1 : 0);
                for (std::size_t j = 0; j < take && j < idx.size(); ++j)
                    sys.losses[idx[j]] = sys.capitals[idx[j]];
            }
        } else {
            std::vector<std::uint32_t> idx(n);
            std::iota(idx.begin(), idx.end(), 0u);
            detail::shuffle_indices(idx, shuffler);
            for (std::size_t j = 0; j < k; ++j) sys.losses[idx[j]] = sys.capitals[idx[j]];
        }
    }
    return sys;
}

// --- Replicated studies -------------------------------------------------------------

struct SweepSpec {
    enum class Kind { Diversification, Similarity };
    Kind kind = Kind::Diversification;
    std::vector<double> values;   // Delta values, or Sigma values
    double fixed_sigma = 0.5;     // Diversification sweep holds Sigma here
    int fixed_delta = 20;         // Similarity sweep holds Delta here
};

enum class ProcessKind { Real, Auxiliary };

struct StudyRow {
    double sweep_param = 0.0;
    double realized_sigma = 0.0;
    std::uint64_t replication = 0;
    std::uint64_t seed = 0;
    double default_fraction = 0.0;
    std::vector<double> sold;  // sold_per_n; asset count varies across sweep points
    std::int64_t rounds = 0;
    bool converged = true;
};

struct StudySummary {
    double sweep_param = 0.0;
    double median = 0.0, q25 = 0.0, q75 = 0.0;
    int n_excluded = 0;  // non-convergent replications left out of the quantiles
};

struct StudyResult {
    std::vector<StudyRow> rows;        // sorted by (sweep point, replication)
    std::vector<StudySummary> summary;
};

namespace detail {

// Nearest integer split of Delta at a target similarity; realized Sigma = J / Delta.
inline std::pair<int, int> realize_split(int delta, double sigma) {
    int J = static_cast<int>(std::llround(sigma * delta));
    J = std::max(0, std::min(delta, J));
    return {delta - J, J};
}

inline double quantile_sorted(const std::vector<double>& v, double q) {
    if (v.empty()) return std::nan("");
    double pos = q * static_cast<double>(v.size() - 1);
    std::size_t i = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(i);
    if (i + 1 < v.size()) return v[i] * (1.0 - frac) + v[i + 1] * frac;
    return v[i];
}

}  // namespace detail

// Runs `replications` seeded systems per sweep point. Determinism contract: rows are a
// pure function of (spec, sweep, replications, process, options); scheduling order
// does not matter because every task derives its own child seed.
inline StudyResult run_study(const EnsembleSpec& spec, const SweepSpec& sweep, int replications,
                             ProcessKind process, const CascadeOptions& cascade_opts = {},
                             unsigned threads = thread_count()) {
    if (replications <= 0) throw DomainError("study: empty study (replications must be > 0)");
    if (sweep.values.empty()) throw DomainError("study: no sweep values");
    if (spec.structure.kind != EnsembleSpec::Structure::Kind::SubsystemGrid)
        throw DomainError("study: sweeps are defined over the subsystem grid structure");

    struct Task {
        std::size_t point;
        int rep;
    };
    std::vector<Task> tasks;
    for (std::size_t p = 0; p < sweep.values.size(); ++p)
        for (int r = 0; r < replications; ++r) tasks.push_back({p, r});

    std::vector<StudyRow> rows(tasks.size());
    parallel_for(tasks.size(), threads, [&](std::size_t ti) {
        const Task& task = tasks[ti];
        double value = sweep.values[task.point];
        int delta;
        double sigma;
        if (sweep.kind == SweepSpec::Kind::Diversification) {
            delta = static_cast<int>(std::llround(value));
            sigma = sweep.fixed_sigma;
        } else {
            delta = sweep.fixed_delta;
            sigma = value;
        }
        auto [D, J] = detail::realize_split(delta, sigma);
        EnsembleSpec point_spec = spec;
        point_spec.structure.kind = EnsembleSpec::Structure::Kind::SubsystemGrid;
        point_spec.structure.D = D;
        point_spec.structure.J = J;
        point_spec.seed = child_seed(spec.seed, static_cast<std::uint64_t>(task.point),
                                     static_cast<std::uint64_t>(task.rep));
        FiniteSystem sys = sample_system(point_spec);
        CascadeResult res = process == ProcessKind::Real ? run_fire_sales(sys, cascade_opts)
                                                         : run_auxiliary(sys, cascade_opts);
        StudyRow row;
        row.sweep_param = value;
        row.realized_sigma = static_cast<double>(J) / static_cast<double>(D + J);
        row.replication = static_cast<std::uint64_t>(task.rep);
        row.seed = point_spec.seed;
        row.default_fraction = res.default_fraction;
        row.sold = res.sold_per_n;
        row.rounds = res.rounds;
        row.converged = res.converged;
        rows[ti] = std::move(row);
    });

    StudyResult out;
    out.rows = std::move(rows);
    for (std::size_t p = 0; p < sweep.values.size(); ++p) {
        StudySummary s;
        s.sweep_param = sweep.values[p];
        std::vector<double> vals;
        for (int r = 0; r < replications; ++r) {
            const StudyRow& row = out.rows[p * static_cast<std::size_t>(replications) +
                                           static_cast<std::size_t>(r)];
            if (row.converged)
                vals.push_back(row.default_fraction);
            else
                ++s.n_excluded;
        }
        std::sort(vals.begin(), vals.end());
        s.median = detail::quantile_sorted(vals, 0.5);
        s.q25 = detail::quantile_sorted(vals, 0.25);
        s.q75 = detail::quantile_sorted(vals, 0.75);
        out.summary.push_back(s);
    }
    return out;
}

}  // namespace firesale
