// Resilience classification: closed-form criteria on the system parameters and a
// numeric probe that shrinks an atomic shock and tracks the smallest joint root.
#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "firesale/common.hpp"
#include "firesale/fixpoint.hpp"
#include "firesale/limit.hpp"

namespace firesale {

enum class Label { Resilient, NonResilient, Inconclusive };

inline const char* label_name(Label l) {
    switch (l) {
        case Label::Resilient: return "Resilient";
        case Label::NonResilient: return "NonResilient";
        case Label::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

struct Verdict {
    Label label = Label::Inconclusive;
    std::string rule;
    std::vector<std::pair<std::string, double>> certificate;
    std::vector<std::string> notes;
    std::vector<std::pair<double, std::vector<double>>> probe_curve;  // (delta, chi_hat_L)
};

// Criterion values within this relative band of their threshold stay Inconclusive;
// the theorems are silent exactly at equality.
inline constexpr double kBoundaryBand = 1e-6;

namespace detail {
inline bool near(double value, double threshold) {
    return std::abs(value - threshold) <= kBoundaryBand * std::max(1.0, std::abs(threshold));
}
}  // namespace detail

// One asset, linear price impact: the E[X^2/C] rho'(0) dichotomy.
inline Verdict classify_linear_impact(const LimitSystem& sys) {
    if (sys.assets() != 1)
        throw PreconditionViolated("classify_linear_impact: requires a single asset");
    if (sys.impact().component(0).kind != ImpactKind::Linear)
        throw PreconditionViolated("classify_linear_impact: requires linear price impact");
    Verdict v;
    v.rule = "linear-impact-second-moment";
    double d0 = sys.sales().derivative_at_zero();
    Moment m2 = sys.second_moment_over_capital(0);
    v.certificate.emplace_back("rho_prime_0", d0);
    v.certificate.emplace_back("second_moment_over_capital", m2.divergent ? kInf : m2.value);
    if (m2.estimated) v.notes.push_back("second moment estimated from a sample cloud");

    if (m2.divergent) {
        if (d0 > 0.0) {
            v.label = Label::NonResilient;
        } else {
            v.label = Label::Inconclusive;
            v.notes.push_back("E[X^2/C] diverges with rho'(0) = 0; criterion gives no answer");
        }
        return v;
    }
    double value = d0 == 0.0 ? 0.0 : m2.value * d0;
    v.certificate.emplace_back("criterion_value", value);
    if (!std::isfinite(value)) {
        v.label = Label::NonResilient;
    } else if (detail::near(value, 1.0)) {
        v.label = Label::Inconclusive;
        v.notes.push_back("criterion value at the threshold");
    } else {
        v.label = value < 1.0 ? Label::Resilient : Label::NonResilient;
    }
    return v;
}

// Power-form systems rho = u^q ^ 1, h = chi^nu, Pareto-tailed holdings with exponent
// beta and capital alpha * x^gamma. q may be infinite (sales at default).
struct PowerFormParams {
    double beta = 3.0;
    double nu = 1.0;
    double q = kInf;
    CapitalRule capital{1.0, 0.0};
};

inline Verdict classify_power_forms(const PowerFormParams& p) {
    if (!(p.beta > 2.0)) throw DomainError("classify_power_forms: beta must exceed 2");
    if (!(p.nu > 0.0)) throw DomainError("classify_power_forms: nu must be positive");
    if (!(p.q > 0.0)) throw DomainError("classify_power_forms: q must be positive");
    Verdict v;
    double nuq = std::isfinite(p.q) ? p.nu * p.q : kInf;
    double gap = 1.0 - nuq;  // -inf for sales at default
    v.certificate.emplace_back("one_minus_nu_q", gap);

    if (std::isfinite(gap) && gap > kBoundaryBand) {
        v.rule = "nu-q-product";
        v.label = Label::NonResilient;
        return v;
    }
    if (std::isfinite(gap) && std::abs(gap) <= kBoundaryBand) {
        // balanced case: compare E[X (X/C)^{1/nu}] with 1
        v.rule = "nu-q-balanced-moment";
        double q = 1.0 / p.nu;
        double s = 1.0 + q * (1.0 - p.capital.gamma);
        double value = s < p.beta - 1.0
                           ? std::pow(p.capital.alpha, -q) * (p.beta - 1.0) / (p.beta - 1.0 - s)
                           : kInf;
        v.certificate.emplace_back("coupling_moment", value);
        if (!std::isfinite(value) || value > 1.0 + kBoundaryBand) {
            v.label = Label::NonResilient;
        } else if (detail::near(value, 1.0)) {
            v.label = Label::Inconclusive;
            v.notes.push_back("coupling moment at the threshold");
        } else {
            v.label = Label::Resilient;
        }
        return v;
    }

    // 1 - nu q < 0 or q = inf: the moment-finiteness supremum decides
    v.rule = "power-capital-exponent";
    double alpha_star = p.capital.gamma >= 1.0 ? kInf : (p.beta - 2.0) / (1.0 - p.capital.gamma);
    double gamma_thr = 1.0 - p.nu * (p.beta - 2.0);
    v.certificate.emplace_back("alpha_star", alpha_star);
    v.certificate.emplace_back("one_over_nu", 1.0 / p.nu);
    v.certificate.emplace_back("gamma", p.capital.gamma);
    v.certificate.emplace_back("gamma_threshold", gamma_thr);
    if (detail::near(p.capital.gamma, gamma_thr)) {
        v.label = Label::Inconclusive;
        v.notes.push_back("gamma at the critical exponent; the boundary case is unresolved");
    } else {
        v.label = p.capital.gamma > gamma_thr ? Label::Resilient : Label::NonResilient;
    }
    return v;
}

// Per-asset derivative criterion: E[X^m rho'(0) (sum_l X^l d h^l / d chi^m (0)) / C] > 1
// for some m implies non-resilience; values below 1 decide nothing on their own.
inline Verdict classify_derivative_criterion(const LimitSystem& sys) {
    if (sys.assets() == 1 && sys.impact().component(0).kind == ImpactKind::Linear)
        return classify_linear_impact(sys);
    Verdict v;
    v.rule = "derivative-criterion";
    double d0 = sys.sales().derivative_at_zero();
    v.certificate.emplace_back("rho_prime_0", d0);
    bool indeterminate = false;
    double worst = 0.0;
    for (int m = 0; m < sys.assets(); ++m) {
        double hprime = sys.impact().derivative_at_zero(m);
        Moment m2 = sys.second_moment_over_capital(m);
        double value;
        if (d0 == 0.0) {
            value = (std::isinf(hprime) || m2.divergent) ? std::nan("") : 0.0;
        } else {
            double moment = m2.divergent ? kInf : m2.value;
            value = d0 * hprime * moment;
        }
        if (std::isnan(value)) indeterminate = true;
        v.certificate.emplace_back("criterion_value_" + std::to_string(m + 1), value);
        if (!std::isnan(value)) worst = std::max(worst, value);
    }
    if (worst > 1.0 + kBoundaryBand && !detail::near(worst, 1.0)) {
        v.label = Label::NonResilient;
    } else {
        v.label = Label::Inconclusive;
        if (indeterminate)
            v.notes.push_back("0 * inf encountered; criterion value indeterminate");
        else
            v.notes.push_back("all criterion values at most 1; the theorem is one-sided");
    }
    return v;
}

struct ProbeOptions {
    std::vector<double> delta_grid{1e-1, 1e-2, 1e-3, 1e-4};  // decreasing E[L/C] targets
    double multiple = 1.0;          // AtomicDefault loss multiple of capital
    RootOptions root;
    double resilience_floor_factor = 1e-3;  // of E[X^tot]
    double nonres_floor_factor = 1e-2;
};

// Shrinks an atomic shock along the delta grid and reads the limit of the smallest
// joint root: vanishing roots certify resilience, a persistent floor certifies
// non-resilience; everything in between stays inconclusive.
inline Verdict probe_resilience(const LimitSystem& sys, const ProbeOptions& opts = {}) {
    if (opts.delta_grid.empty()) throw DomainError("probe: delta grid must be non-empty");
    for (std::size_t i = 1; i < opts.delta_grid.size(); ++i)
        if (!(opts.delta_grid[i] < opts.delta_grid[i - 1]))
            throw DomainError("probe: delta grid must decrease");
    Verdict v;
    v.rule = "numeric-probe";
    double ex_tot = sys.mean_total_holdings();
    double res_floor = opts.resilience_floor_factor * ex_tot;
    double nonres_floor = opts.nonres_floor_factor * ex_tot;
    bool all_converged = true;
    double terminal = 0.0, curve_min = kInf;
    for (double delta : opts.delta_grid) {
        double p = delta / opts.multiple;
        if (p > 1.0) throw DomainError("probe: delta / multiple exceeds 1");
        LimitSystem shocked = sys.with_shock(ShockSpec::atomic_default(p, opts.multiple));
        PicardResult r = picard_smallest_fixed_point(shocked, opts.root);
        all_converged = all_converged && r.converged;
        double worst = 0.0;
        for (double c : r.chi) worst = std::max(worst, c);
        terminal = worst;
        curve_min = std::min(curve_min, worst);
        v.probe_curve.emplace_back(delta, r.chi);
    }
    v.certificate.emplace_back("mean_total_holdings", ex_tot);
    v.certificate.emplace_back("resilience_floor", res_floor);
    v.certificate.emplace_back("nonres_floor", nonres_floor);
    v.certificate.emplace_back("terminal_delta", opts.delta_grid.back());
    v.certificate.emplace_back("terminal_chi", terminal);
    v.certificate.emplace_back("curve_min_chi", curve_min);
    if (!all_converged) {
        v.label = Label::Inconclusive;
        v.notes.push_back("fixed-point iteration did not converge for some shock sizes");
        return v;
    }
    if (terminal < res_floor) {
        v.label = Label::Resilient;
    } else if (curve_min >= nonres_floor) {
        v.label = Label::NonResilient;
        if (sys.sales().derivative_at_zero() == 0.0) {
            // sales do not react to arbitrarily small relative losses: the probe's
            // constructed shocks witness weak non-resilience only
            v.rule = "weak";
            v.notes.push_back(
                "sales function is flat at 0; lower bound shown for the constructed "
                "atomic shocks, not for every shock family");
        }
    } else {
        v.label = Label::Inconclusive;
    }
    return v;
}

struct CapitalThreshold {
    double gamma_threshold = 0.0;  // clamped at 0
    double raw = 0.0;              // 1 - nu (beta - 2)
    bool clamped = false;
    std::string note;
};

inline CapitalThreshold capital_threshold(double beta, double nu) {
    if (!(beta > 2.0)) throw DomainError("capital_threshold: beta must exceed 2");
    if (!(nu > 0.0)) throw DomainError("capital_threshold: nu must be positive");
    CapitalThreshold out;
    out.raw = 1.0 - nu * (beta - 2.0);
    out.gamma_threshold = std::max(0.0, out.raw);
    out.clamped = out.raw < 0.0;
    if (out.clamped) out.note = "threshold negative: any gamma >= 0 gives resilience";
    return out;
}

struct CriticalCapital {
    double gamma_c = 0.0;
    double alpha_c = 0.0;
    double diversification = 0.0;  // Delta = D + J (subsystem form only)
    double similarity = 0.0;       // Sigma = J / Delta
};

// Weighted one-draw portfolios: gamma_c = 3 - beta, alpha_c = sum lambda^2 (b-1)/(b-2).
inline CriticalCapital critical_capital_weights(const std::vector<double>& lambda, double beta) {
    if (!(beta > 2.0)) throw DomainError("critical_capital: beta must exceed 2");
    if (lambda.empty()) throw DomainError("critical_capital: weights must be non-empty");
    double sum = 0.0, sq = 0.0;
    for (double l : lambda) {
        if (!(l > 0.0)) throw DomainError("critical_capital: weights must be positive");
        sum += l;
        sq += l * l;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw DomainError("critical_capital: weights must sum to 1");
    CriticalCapital out;
    out.gamma_c = 3.0 - beta;
    out.alpha_c = sq * (beta - 1.0) / (beta - 2.0);
    return out;
}

// Subsystem grid: S subsystems, D specialized assets each, J joint assets.
inline CriticalCapital critical_capital_subsystems(int S, int D, int J, double beta) {
    if (!(beta > 2.0)) throw DomainError("critical_capital: beta must exceed 2");
    if (S < 1 || D < 0 || J < 0 || D + J < 1)
        throw DomainError("critical_capital: invalid (S, D, J)");
    CriticalCapital out;
    double delta = static_cast<double>(D + J);
    double sigma = static_cast<double>(J) / delta;
    out.gamma_c = 3.0 - beta;
    out.alpha_c = (1.0 + (static_cast<double>(S) - 1.0) * sigma) /
                  (delta * static_cast<double>(S)) * (beta - 1.0) / (beta - 2.0);
    out.diversification = delta;
    out.similarity = sigma;
    return out;
}

struct TailExponent {
    double beta_min = 0.0;
    std::string certificate;
};

// The sum of power-law tails keeps the smallest exponent (sandwich bounds), so the
// multi-asset capital corollary reduces to the one-dimensional threshold at beta_min.
inline TailExponent min_tail_exponent(const std::vector<double>& betas) {
    if (betas.empty()) throw DomainError("min_tail_exponent: empty list");
    double mn = kInf;
    for (double b : betas) {
        if (!(b > 2.0)) throw DomainError("min_tail_exponent: all exponents must exceed 2");
        mn = std::min(mn, b);
    }
    TailExponent out;
    out.beta_min = mn;
    out.certificate = "tail of the holdings sum is bounded between B1 x^{1-" + fmt12(mn) +
                      "} and B2 x^{1-" + fmt12(mn) + "}";
    return out;
}

}  // namespace firesale
