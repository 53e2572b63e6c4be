// Ensemble limits: joint distributions of (X, C, L) with an expectation evaluator.
//
// Catalog systems are driven by a scalar latent T (exponential, Pareto, or a point
// mass) with per-asset holdings w_m * T, capital alpha * T^gamma and an atomic shock
// L = multiple * C. Expectations of the form E[T rho(m0 + kappa T^{1-gamma})] resolve
// to closed forms where elementary and to adaptive quadrature otherwise. Sample clouds
// evaluate the same functionals over a frozen Monte Carlo sample with common random
// numbers, so repeated evaluations are deterministic and monotone in chi.
#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "firesale/common.hpp"
#include "firesale/impact.hpp"
#include "firesale/rng.hpp"
#include "firesale/sales.hpp"

namespace firesale {

struct Moment {
    double value = 0.0;
    bool divergent = false;
    bool estimated = false;  // sample-based, not a closed form
};

// --- Shock specification ------------------------------------------------------------

struct ShockSpec {
    enum class Kind { None, AtomicDefault, ProportionalCap };
    Kind kind = Kind::None;
    double p = 0.0;         // AtomicDefault probability
    double multiple = 1.0;  // AtomicDefault: L = multiple * C with probability p
    double delta = 0.0;     // ProportionalCap: L = delta * C surely

    static ShockSpec none() { return {}; }
    static ShockSpec atomic_default(double p, double multiple = 1.0) {
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("shock: p must be a probability");
        if (!(multiple >= 0.0)) throw DomainError("shock: multiple must be >= 0");
        ShockSpec s;
        s.kind = Kind::AtomicDefault;
        s.p = p;
        s.multiple = multiple;
        return s;
    }
    static ShockSpec proportional(double delta) {
        if (!(delta >= 0.0)) throw DomainError("shock: delta must be >= 0");
        ShockSpec s;
        s.kind = Kind::ProportionalCap;
        s.delta = delta;
        return s;
    }

    // (probability, loss multiple of capital) atoms; independent of (X, C).
    std::vector<std::pair<double, double>> atoms() const {
        switch (kind) {
            case Kind::None: return {{1.0, 0.0}};
            case Kind::AtomicDefault:
                if (p >= 1.0) return {{1.0, multiple}};
                return {{p, multiple}, {1.0 - p, 0.0}};
            case Kind::ProportionalCap: return {{1.0, delta}};
        }
        return {{1.0, 0.0}};
    }

    double mean_loss_ratio() const {
        switch (kind) {
            case Kind::None: return 0.0;
            case Kind::AtomicDefault: return p * multiple;
            case Kind::ProportionalCap: return delta;
        }
        return 0.0;
    }

    bool positive() const { return mean_loss_ratio() > 0.0; }
};

// --- Capital rule -------------------------------------------------------------------

// C = alpha * T^gamma over the latent total holdings T; the per-asset linear
// combination (sum_m alpha_m x^m)^gamma collapses to this form for split holdings.
struct CapitalRule {
    double alpha = 1.0;
    double gamma = 0.0;

    static CapitalRule constant(double c) {
        if (!(c > 0.0)) throw DomainError("capital: constant must be positive");
        return {c, 0.0};
    }
    static CapitalRule power(double alpha, double gamma) {
        if (!(alpha > 0.0)) throw DomainError("capital: alpha must be positive");
        if (!(gamma >= 0.0)) throw DomainError("capital: gamma must be >= 0");
        return {alpha, gamma};
    }

    double eval(double t) const { return gamma == 0.0 ? alpha : alpha * std::pow(t, gamma); }
};

// --- Holdings families --------------------------------------------------------------

enum class HoldingsKind { ExpSingle, ParetoSplit, ConstSplit };

struct HoldingsFamily {
    HoldingsKind kind = HoldingsKind::ExpSingle;
    double rate = 1.0;             // ExpSingle
    double beta = 3.0;             // ParetoSplit tail exponent, > 2 for finite mean claims
    double x0 = 1.0;               // ConstSplit latent value
    std::vector<double> weights;   // per-asset multiples of the latent draw

    static HoldingsFamily exponential(double rate) {
        if (!(rate > 0.0)) throw DomainError("holdings: rate must be positive");
        HoldingsFamily f;
        f.kind = HoldingsKind::ExpSingle;
        f.rate = rate;
        f.weights = {1.0};
        return f;
    }
    static HoldingsFamily pareto_split(double beta, std::vector<double> weights) {
        if (!(beta > 1.0)) throw DomainError("holdings: pareto beta must exceed 1");
        if (weights.empty()) throw DomainError("holdings: weights must be non-empty");
        for (double w : weights)
            if (!(w > 0.0)) throw DomainError("holdings: weights must be positive");
        HoldingsFamily f;
        f.kind = HoldingsKind::ParetoSplit;
        f.beta = beta;
        f.weights = std::move(weights);
        return f;
    }
    static HoldingsFamily constant(double x0, std::vector<double> weights = {1.0}) {
        if (!(x0 > 0.0)) throw DomainError("holdings: x0 must be positive");
        HoldingsFamily f;
        f.kind = HoldingsKind::ConstSplit;
        f.x0 = x0;
        f.weights = std::move(weights);
        return f;
    }

    int assets() const { return static_cast<int>(weights.size()); }

    bool mean_finite() const { return kind != HoldingsKind::ParetoSplit || beta > 2.0; }

    // E[T^s]; +inf when the moment diverges.
    double latent_moment(double s) const {
        switch (kind) {
            case HoldingsKind::ExpSingle: return std::tgamma(s + 1.0) / std::pow(rate, s);
            case HoldingsKind::ParetoSplit:
                if (s >= beta - 1.0) return kInf;
                return (beta - 1.0) / (beta - 1.0 - s);
            case HoldingsKind::ConstSplit: return std::pow(x0, s);
        }
        return 0.0;
    }

    double latent_mean() const { return latent_moment(1.0); }

    // E[T 1{T >= a}]
    double mean_tail(double a) const {
        switch (kind) {
            case HoldingsKind::ExpSingle: {
                double aa = std::max(a, 0.0);
                return (aa + 1.0 / rate) * std::exp(-rate * aa);
            }
            case HoldingsKind::ParetoSplit: {
                if (a <= 1.0) return latent_mean();
                if (beta <= 2.0) return kInf;
                return (beta - 1.0) / (beta - 2.0) * std::pow(a, 2.0 - beta);
            }
            case HoldingsKind::ConstSplit: return x0 >= a ? x0 : 0.0;
        }
        return 0.0;
    }

    // P(T >= a) / P(T > a); the two differ only for the point mass.
    double prob_tail(double a, bool strict) const {
        switch (kind) {
            case HoldingsKind::ExpSingle: return std::exp(-rate * std::max(a, 0.0));
            case HoldingsKind::ParetoSplit: return a <= 1.0 ? 1.0 : std::pow(a, 1.0 - beta);
            case HoldingsKind::ConstSplit: return (strict ? x0 > a : x0 >= a) ? 1.0 : 0.0;
        }
        return 0.0;
    }

    // E[T^s 1{T <= b}] for the Pareto family (closed form used by power sales).
    double pareto_truncated_moment(double s, double b) const {
        if (b <= 1.0) return 0.0;
        double e = s + 1.0 - beta;
        if (e == 0.0) return (beta - 1.0) * std::log(b);
        return (beta - 1.0) * (std::pow(b, e) - 1.0) / e;
    }

    double sample(CounterRng& rng) const {
        switch (kind) {
            case HoldingsKind::ExpSingle: return rng.next_exponential(rate);
            case HoldingsKind::ParetoSplit: return rng.next_pareto(beta);
            case HoldingsKind::ConstSplit: return x0;
        }
        return 0.0;
    }
};

// --- Frozen Monte Carlo sample ------------------------------------------------------

struct CloudData {
    std::size_t count = 0;
    int assets = 0;
    std::vector<double> X;        // count x assets
    std::vector<double> C;
    std::vector<double> shock_u;  // uniforms; atomic shocks nest across probabilities
    std::uint64_t seed = 0;
};

inline std::shared_ptr<const CloudData> make_cloud(const HoldingsFamily& family,
                                                   const CapitalRule& capital,
                                                   std::size_t count, std::uint64_t seed) {
    if (count == 0) throw DomainError("cloud: sample count must be positive");
    auto cloud = std::make_shared<CloudData>();
    cloud->count = count;
    cloud->assets = family.assets();
    cloud->seed = seed;
    cloud->X.resize(count * family.weights.size());
    cloud->C.resize(count);
    cloud->shock_u.resize(count);
    CounterRng latent = CounterRng::stream(seed, 0);
    CounterRng shocks = CounterRng::stream(seed, 1);
    for (std::size_t i = 0; i < count; ++i) {
        double t = family.sample(latent);
        for (std::size_t m = 0; m < family.weights.size(); ++m)
            cloud->X[i * family.weights.size() + m] = family.weights[m] * t;
        cloud->C[i] = capital.eval(t);
        cloud->shock_u[i] = shocks.next_unit();
    }
    return cloud;
}

// --- Quadrature helper --------------------------------------------------------------

namespace detail {

template <typename F>
double adaptive_simpson_rec(const F& f, double a, double fa, double b, double fb, double m,
                            double fm, double whole, double eps, int depth) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0) throw IntegrationError("quadrature did not reach requested precision");
    if (std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * eps, depth - 1) +
           adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * eps, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double eps, int depth = 48) {
    if (!(b > a)) return 0.0;
    double m = 0.5 * (a + b);
    double fa = f(a), fb = f(b), fm = f(m);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, eps, depth);
}

template <typename F>
double integrate_segments(const F& f, std::vector<double> cuts, double eps) {
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 1; i < cuts.size(); ++i)
        if (cuts[i] > cuts[i - 1])
            total += adaptive_simpson(f, cuts[i - 1], cuts[i], eps / (cuts.size() - 1));
    return total;
}

}  // namespace detail

// --- Limit system -------------------------------------------------------------------

class LimitSystem {
public:
    static LimitSystem catalog(HoldingsFamily family, CapitalRule capital, ShockSpec shock,
                               SalesFunction sales, PriceImpact impact) {
        LimitSystem s(std::move(sales), std::move(impact));
        s.family_ = std::move(family);
        s.capital_ = capital;
        s.shock_ = shock;
        if (s.impact_.assets() != s.family_.assets())
            throw DomainError("limit system: impact asset count mismatch");
        if (s.family_.kind == HoldingsKind::ParetoSplit && !(s.family_.beta > 2.0))
            throw DomainError("limit system: pareto holdings need beta > 2 for a finite mean");
        return s;
    }

    // Freezes a Monte Carlo sample of the catalog distribution; expectations then use
    // the same draws for every chi (common random numbers).
    LimitSystem sampled(std::size_t count, std::uint64_t seed) const {
        if (cloud_) throw DomainError("limit system: already sample-based");
        LimitSystem s(sales_, impact_);
        s.family_ = family_;
        s.capital_ = capital_;
        s.shock_ = shock_;
        s.scale_ = scale_;
        s.cloud_ = make_cloud(family_, capital_, count, seed);
        return s;
    }

    static LimitSystem from_cloud(std::shared_ptr<const CloudData> cloud, ShockSpec shock,
                                  SalesFunction sales, PriceImpact impact) {
        LimitSystem s(std::move(sales), std::move(impact));
        if (!cloud || cloud->count == 0) throw DomainError("limit system: empty cloud");
        s.cloud_ = std::move(cloud);
        s.shock_ = shock;
        if (s.impact_.assets() != s.cloud_->assets)
            throw DomainError("limit system: impact asset count mismatch");
        return s;
    }

    int assets() const { return cloud_ ? cloud_->assets : family_.assets(); }
    const SalesFunction& sales() const { return sales_; }
    const PriceImpact& impact() const { return impact_; }
    const ShockSpec& shock() const { return shock_; }
    const HoldingsFamily& family() const { return family_; }
    const CapitalRule& capital() const { return capital_; }
    bool is_cloud() const { return cloud_ != nullptr; }
    double holdings_scale() const { return scale_; }

    LimitSystem with_shock(ShockSpec shock) const {
        LimitSystem s = *this;
        s.shock_ = shock;
        return s;
    }
    LimitSystem with_sales(SalesFunction sales) const {
        LimitSystem s = *this;
        s.sales_ = std::move(sales);
        return s;
    }
    LimitSystem scaled_holdings(double factor) const {
        if (!(factor > 0.0 && factor <= 1.0))
            throw DomainError("limit system: holdings scale must be in (0, 1]");
        LimitSystem s = *this;
        s.scale_ = scale_ * factor;
        return s;
    }

    bool shock_positive() const { return shock_.positive(); }
    double shock_mean_ratio() const { return shock_.mean_loss_ratio(); }

    double mean_holdings(int m) const {
        if (cloud_) {
            double s = 0.0;
            for (std::size_t i = 0; i < cloud_->count; ++i)
                s += cloud_->X[i * static_cast<std::size_t>(cloud_->assets) +
                               static_cast<std::size_t>(m)];
            return scale_ * s / static_cast<double>(cloud_->count);
        }
        return scale_ * family_.weights[static_cast<std::size_t>(m)] * family_.latent_mean();
    }

    double mean_total_holdings() const {
        double s = 0.0;
        for (int m = 0; m < assets(); ++m) s += mean_holdings(m);
        return s;
    }

    // E[X^m rho((L + X . h(chi)) / C)] for every asset m.
    std::vector<double> phi(std::span<const double> chi) const {
        std::vector<double> hv = impact_.eval(chi);
        return cloud_ ? phi_cloud(hv) : phi_catalog(hv);
    }

    // g(chi) = P(L + X . h(chi) >= C); strict replaces >= by >.
    double prob_default(std::span<const double> chi, bool strict) const {
        std::vector<double> hv = impact_.eval(chi);
        return cloud_ ? g_cloud(hv, strict) : g_catalog(hv, strict);
    }

    // E[(X^m)^2 / C]
    Moment second_moment_over_capital(int m) const {
        if (cloud_) return cloud_ratio_moment(m, 2.0, 1.0);
        double w = scale_ * family_.weights[static_cast<std::size_t>(m)];
        double lm = family_.latent_moment(2.0 - capital_.gamma);
        return Moment{w * w / capital_.alpha * lm, !std::isfinite(lm), false};
    }

    // E[X^m (X^m / C)^e]
    Moment holding_capital_moment(int m, double e) const {
        if (cloud_) return cloud_ratio_moment(m, 1.0 + e, e);
        double w = scale_ * family_.weights[static_cast<std::size_t>(m)];
        double lm = family_.latent_moment(1.0 + e * (1.0 - capital_.gamma));
        double scale = std::pow(w, 1.0 + e) / std::pow(capital_.alpha, e);
        return Moment{scale * lm, !std::isfinite(lm), false};
    }

    // sup { a : E[X^{1+a} / C^a] < inf }; exact for catalog families.
    Moment alpha_star() const {
        if (cloud_) return alpha_star_estimate();
        if (family_.kind != HoldingsKind::ParetoSplit) return Moment{kInf, false, false};
        if (capital_.gamma >= 1.0) return Moment{kInf, false, false};
        return Moment{(family_.beta - 2.0) / (1.0 - capital_.gamma), false, false};
    }

private:
    LimitSystem(SalesFunction sales, PriceImpact impact)
        : sales_(std::move(sales)), impact_(std::move(impact)) {}

    // ---- catalog evaluation ----

    double weighted_impact(std::span<const double> hv) const {
        double H = 0.0;
        for (std::size_t m = 0; m < family_.weights.size(); ++m) H += family_.weights[m] * hv[m];
        return H;
    }

    std::vector<double> phi_catalog(std::span<const double> hv) const {
        double H = weighted_impact(hv);
        double kappa = scale_ * H / capital_.alpha;
        double base = 0.0;
        for (auto [p, mult] : shock_.atoms())
            if (p > 0.0) base += p * latent_expectation(mult, kappa);
        std::vector<double> out(family_.weights.size());
        for (std::size_t m = 0; m < family_.weights.size(); ++m)
            out[m] = scale_ * family_.weights[m] * base;
        return out;
    }

    // E[T rho(m0 + kappa T^{1-gamma})]
    double latent_expectation(double m0, double kappa) const {
        const double expo = 1.0 - capital_.gamma;
        if (family_.kind == HoldingsKind::ConstSplit)
            return family_.x0 * sales_(m0 + kappa * std::pow(family_.x0, expo));
        if (kappa == 0.0 || expo == 0.0)
            return sales_(m0 + kappa) * family_.latent_mean();

        const double u_sat = sales_.saturation_point();
        const double rho_max = sales_.max_value();
        if (rho_max <= 0.0) return 0.0;

        auto arg_inv = [&](double u) {  // t with m0 + kappa t^expo = u
            return std::pow((u - m0) / kappa, 1.0 / expo);
        };

        if (expo > 0.0) {
            // argument increases in t
            if (m0 >= u_sat) return rho_max * family_.latent_mean();
            double t_star = arg_inv(u_sat);
            double tail = rho_max * family_.mean_tail(t_star);
            bool step_at_sat = sales_(std::nextafter(u_sat, 0.0)) == 0.0;
            if (step_at_sat) return tail;  // indicator-shaped: nothing below saturation
            return tail + unsaturated_integral(m0, kappa, t_star);
        }

        // gamma > 1: argument decreases in t toward m0
        double lo = family_.kind == HoldingsKind::ParetoSplit ? 1.0 : 0.0;
        double arg_at_lo = family_.kind == HoldingsKind::ParetoSplit
                               ? m0 + kappa
                               : kInf;  // Exp support touches t = 0, arg blows up
        double t_star = arg_at_lo > u_sat ? arg_inv(u_sat) : lo;
        double saturated = rho_max * (family_.latent_mean() - family_.mean_tail(t_star));
        return saturated + decreasing_tail_integral(m0, kappa, std::max(t_star, lo));
    }

    // integral of t rho(arg(t)) dF over {t < t_star} for an increasing argument
    double unsaturated_integral(double m0, double kappa, double t_star) const {
        const double expo = 1.0 - capital_.gamma;
        const double eps = 1e-12 * std::max(1.0, family_.latent_mean());
        auto arg = [&](double t) { return m0 + kappa * std::pow(t, expo); };
        auto arg_inv = [&](double u) { return std::pow((u - m0) / kappa, 1.0 / expo); };

        if (family_.kind == HoldingsKind::ParetoSplit) {
            if (t_star <= 1.0) return 0.0;
            // Elementary closed form: pure power sales from an unshocked atom.
            if (sales_.kind() == SalesKind::PowerCapped &&
                std::isfinite(sales_.power_exponent()) && m0 == 0.0 &&
                !sales_.left_continuous_view()) {
                double q = sales_.power_exponent();
                return std::pow(kappa, q) *
                       family_.pareto_truncated_moment(1.0 + q * expo, t_star);
            }
            // integrate in z = log t against (beta-1) e^{(2-beta) z} rho(arg(e^z))
            double beta = family_.beta;
            double z_star = std::log(t_star);
            double z_cut = std::log(1e15 * (beta - 1.0) / (beta - 2.0)) / (beta - 2.0);
            double z_hi = std::min(z_star, std::max(z_cut, 1.0));
            std::vector<double> cuts{0.0, z_hi};
            for (double u : sales_.kink_points())
                if (u > m0 && arg_inv(u) > 1.0 && std::log(arg_inv(u)) < z_hi)
                    cuts.push_back(std::log(arg_inv(u)));
            double val = detail::integrate_segments(
                [&](double z) {
                    return (beta - 1.0) * std::exp((2.0 - beta) * z) * sales_(arg(std::exp(z)));
                },
                cuts, eps);
            if (z_hi < z_star) {
                // truncated far tail, still below saturation: bracket rho there
                double mt = family_.mean_tail(std::exp(z_hi));
                double lo = sales_(arg(std::exp(z_hi)));
                double hi = sales_.max_value();
                val += 0.5 * (lo + hi) * mt;
            }
            return val;
        }

        // exponential latent
        double t_cut = 45.0 / family_.rate;
        double t_hi = std::min(t_star, t_cut);
        std::vector<double> cuts{0.0, t_hi};
        for (double u : sales_.kink_points())
            if (u > m0) {
                double t = arg_inv(u);
                if (t > 0.0 && t < t_hi) cuts.push_back(t);
            }
        double val = detail::integrate_segments(
            [&](double t) {
                return family_.rate * std::exp(-family_.rate * t) * t * sales_(arg(t));
            },
            cuts, eps);
        if (t_hi < t_star) {
            double mt = family_.mean_tail(t_hi);
            val += 0.5 * (sales_(arg(t_hi)) + sales_.max_value()) * mt;
        }
        return val;
    }

    // integral of t rho(arg(t)) dF over {t > t_from} for a decreasing argument
    double decreasing_tail_integral(double m0, double kappa, double t_from) const {
        const double expo = 1.0 - capital_.gamma;  // negative here
        const double eps = 1e-12 * std::max(1.0, family_.latent_mean());
        auto arg = [&](double t) { return m0 + kappa * std::pow(t, expo); };
        double rho_limit = sales_(std::min(m0, 1.0));  // value as t -> inf
        double t_hi = t_from;
        double lo_bound = family_.kind == HoldingsKind::ParetoSplit ? 1.0 : 1e-12;
        t_hi = std::max(t_hi, lo_bound);
        // grow the finite window until the bracketed tail is negligible
        double t_end = std::max(4.0 * t_hi, 16.0);
        while (t_end < 1e12) {
            double spread = sales_(arg(t_end)) - rho_limit;
            if (spread * family_.mean_tail(t_end) < eps) break;
            t_end *= 4.0;
        }
        double val = detail::integrate_segments(
            [&](double t) {
                double dens = family_.kind == HoldingsKind::ParetoSplit
                                  ? (family_.beta - 1.0) * std::pow(t, -family_.beta)
                                  : family_.rate * std::exp(-family_.rate * t);
                return dens * t * sales_(arg(t));
            },
            {t_hi, t_end}, eps);
        val += 0.5 * (sales_(arg(t_end)) + rho_limit) * family_.mean_tail(t_end);
        return val;
    }

    double g_catalog(std::span<const double> hv, bool strict) const {
        double H = weighted_impact(hv);
        double kappa = scale_ * H / capital_.alpha;
        const double expo = 1.0 - capital_.gamma;
        double total = 0.0;
        for (auto [p, mult] : shock_.atoms()) {
            if (p <= 0.0) continue;
            if (family_.kind == HoldingsKind::ConstSplit) {
                double v = mult + kappa * std::pow(family_.x0, expo);
                total += p * ((strict ? v > 1.0 : v >= 1.0) ? 1.0 : 0.0);
                continue;
            }
            if (kappa == 0.0 || expo == 0.0) {
                double v = mult + kappa;
                total += p * ((strict ? v > 1.0 : v >= 1.0) ? 1.0 : 0.0);
                continue;
            }
            if (mult >= 1.0) {
                total += p;  // arg >= 1 everywhere (kappa > 0)
                continue;
            }
            double t1 = std::pow((1.0 - mult) / kappa, 1.0 / expo);
            total += p * (expo > 0.0 ? family_.prob_tail(t1, strict)
                                     : 1.0 - family_.prob_tail(t1, !strict));
        }
        return total;
    }

    // ---- cloud evaluation ----

    static constexpr std::size_t kChunk = 1 << 16;

    double cloud_loss(std::size_t i) const {
        switch (shock_.kind) {
            case ShockSpec::Kind::None: return 0.0;
            case ShockSpec::Kind::AtomicDefault:
                return cloud_->shock_u[i] < shock_.p ? shock_.multiple * cloud_->C[i] : 0.0;
            case ShockSpec::Kind::ProportionalCap: return shock_.delta * cloud_->C[i];
        }
        return 0.0;
    }

    std::vector<double> phi_cloud(std::span<const double> hv) const {
        const auto& cd = *cloud_;
        const int M = cd.assets;
        std::size_t chunks = (cd.count + kChunk - 1) / kChunk;
        std::vector<double> partial(chunks * static_cast<std::size_t>(M), 0.0);
        parallel_for(chunks, thread_count(), [&](std::size_t c) {
            std::size_t lo = c * kChunk, hi = std::min(cd.count, lo + kChunk);
            double* acc = partial.data() + c * static_cast<std::size_t>(M);
            for (std::size_t i = lo; i < hi; ++i) {
                const double* x = cd.X.data() + i * static_cast<std::size_t>(M);
                double dot = 0.0;
                for (int m = 0; m < M; ++m) dot += x[m] * hv[static_cast<std::size_t>(m)];
                double r = sales_((cloud_loss(i) + scale_ * dot) / cd.C[i]);
                if (r > 0.0)
                    for (int m = 0; m < M; ++m) acc[m] += x[m] * r;
            }
        });
        std::vector<double> out(static_cast<std::size_t>(M), 0.0);
        for (std::size_t c = 0; c < chunks; ++c)
            for (int m = 0; m < M; ++m)
                out[static_cast<std::size_t>(m)] += partial[c * static_cast<std::size_t>(M) +
                                                            static_cast<std::size_t>(m)];
        for (int m = 0; m < M; ++m)
            out[static_cast<std::size_t>(m)] *= scale_ / static_cast<double>(cd.count);
        return out;
    }

    double g_cloud(std::span<const double> hv, bool strict) const {
        const auto& cd = *cloud_;
        const int M = cd.assets;
        std::size_t chunks = (cd.count + kChunk - 1) / kChunk;
        std::vector<std::size_t> partial(chunks, 0);
        parallel_for(chunks, thread_count(), [&](std::size_t c) {
            std::size_t lo = c * kChunk, hi = std::min(cd.count, lo + kChunk);
            std::size_t acc = 0;
            for (std::size_t i = lo; i < hi; ++i) {
                const double* x = cd.X.data() + i * static_cast<std::size_t>(M);
                double dot = 0.0;
                for (int m = 0; m < M; ++m) dot += x[m] * hv[static_cast<std::size_t>(m)];
                double lhs = cloud_loss(i) + scale_ * dot;
                if (strict ? lhs > cd.C[i] : lhs >= cd.C[i]) ++acc;
            }
            partial[c] = acc;
        });
        std::size_t total = 0;
        for (auto v : partial) total += v;
        return static_cast<double>(total) / static_cast<double>(cd.count);
    }

    Moment cloud_ratio_moment(int m, double x_pow, double c_pow) const {
        const auto& cd = *cloud_;
        const int M = cd.assets;
        std::vector<double> vals(cd.count);
        for (std::size_t i = 0; i < cd.count; ++i) {
            double x = scale_ * cd.X[i * static_cast<std::size_t>(M) + static_cast<std::size_t>(m)];
            vals[i] = std::pow(x, x_pow) / std::pow(cd.C[i], c_pow);
        }
        std::sort(vals.begin(), vals.end());
        double sum = 0.0;
        for (double v : vals) sum += v;
        double mean = sum / static_cast<double>(cd.count);
        // divergence heuristic: the top 0.1% tail carrying as much as everything below
        // it signals an infinite-mean integrand
        std::size_t cut = cd.count - std::max<std::size_t>(1, cd.count / 1000);
        double tail = 0.0;
        for (std::size_t i = cut; i < cd.count; ++i) tail += vals[i];
        return Moment{mean, tail > 0.5 * sum, true};
    }

    Moment alpha_star_estimate() const {
        // truncated-tail extrapolation on an alpha grid; reported as an estimate
        double best = 0.0;
        for (double a : {0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0}) {
            Moment mm = cloud_ratio_moment(0, 1.0 + a, a);
            if (mm.divergent) break;
            best = a;
        }
        return Moment{best, false, true};
    }

    SalesFunction sales_;
    PriceImpact impact_;
    HoldingsFamily family_;
    CapitalRule capital_;
    ShockSpec shock_;
    double scale_ = 1.0;
    std::shared_ptr<const CloudData> cloud_;
};

}  // namespace firesale
