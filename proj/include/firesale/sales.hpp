// Sales functions rho: fraction of holdings liquidated as a function of relative loss.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "firesale/common.hpp"

namespace firesale {

enum class SalesKind { Indicator, PowerCapped, LeverageLinear, LeveragePrice, TableDriven };

// A sales function is non-decreasing with rho(0) = 0, values in [0,1] and
// rho(u) = rho(1) for u >= 1. Evaluation is right-continuous for the jump kinds;
// the left-continuous modification is a view flag on the same object, and an
// optional pointwise cap min(rho, eps) supports the coupled lower-bound system.
class SalesFunction {
public:
    static SalesFunction indicator() { return SalesFunction(SalesKind::Indicator); }

    // rho(u) = min(u^q, 1); q = +inf reproduces the indicator exactly.
    static SalesFunction power_capped(double q) {
        if (!(q > 0.0)) throw DomainError("power_capped: q must be positive (or infinite)");
        SalesFunction s(SalesKind::PowerCapped);
        s.q_ = q;
        return s;
    }

    // Divestment forced by a leverage cap after an exogenous equity loss:
    // rho(u) = (1 - (1-u) * lambda_max / lambda)^+ on [0,1].
    static SalesFunction leverage_linear(double lambda, double lambda_max) {
        check_leverage(lambda, lambda_max);
        SalesFunction s(SalesKind::LeverageLinear);
        s.lambda_ = lambda;
        s.lambda_max_ = lambda_max;
        return s;
    }

    // Same constraint when the loss stems from a price change:
    // rho(u) = (1 - lambda_max * (1-u) / (lambda - u))^+ on [0,1).
    static SalesFunction leverage_price(double lambda, double lambda_max) {
        check_leverage(lambda, lambda_max);
        if (lambda <= 1.0) throw DomainError("leverage_price: lambda must exceed 1");
        SalesFunction s(SalesKind::LeveragePrice);
        s.lambda_ = lambda;
        s.lambda_max_ = lambda_max;
        return s;
    }

    // Right-continuous step function: value of the last breakpoint with bp.u <= u.
    // Breakpoints must be sorted, start at (0, 0), stay within [0,1] and be non-decreasing.
    static SalesFunction table(std::vector<std::pair<double, double>> breakpoints) {
        if (breakpoints.empty()) throw DomainError("table: empty breakpoint list");
        if (breakpoints.front().first != 0.0 || breakpoints.front().second != 0.0)
            throw DomainError("table: first breakpoint must be (0, 0)");
        double pu = -1.0, pv = 0.0;
        for (auto& [u, v] : breakpoints) {
            if (u <= pu) throw DomainError("table: breakpoints not strictly increasing in u");
            if (u > 1.0) throw DomainError("table: breakpoints beyond u=1 are redundant");
            if (v < pv || v < 0.0 || v > 1.0)
                throw DomainError("table: values must be non-decreasing within [0,1]");
            pu = u;
            pv = v;
        }
        SalesFunction s(SalesKind::TableDriven);
        s.table_ = std::move(breakpoints);
        return s;
    }

    SalesKind kind() const { return kind_; }
    double power_exponent() const { return q_; }
    double cap() const { return cap_; }
    bool left_continuous_view() const { return left_view_; }

    bool continuous() const {
        switch (kind_) {
            case SalesKind::Indicator: return cap_ == 0.0;
            case SalesKind::PowerCapped: return std::isfinite(q_) || cap_ == 0.0;
            case SalesKind::LeverageLinear:
            case SalesKind::LeveragePrice: return true;
            case SalesKind::TableDriven:
                for (std::size_t i = 1; i < table_.size(); ++i)
                    if (std::min(table_[i].second, cap_) > std::min(table_[i - 1].second, cap_))
                        return false;
                return true;
        }
        return true;
    }

    double operator()(double u) const {
        if (!(u >= 0.0)) throw DomainError("sales function argument must be non-negative");
        double raw = left_view_ ? raw_left(u) : raw_right(std::min(u, 1.0));
        return std::min(raw, cap_);
    }

    // rho'(0), exact by kind; +inf for kinds that jump or have infinite slope at 0.
    double derivative_at_zero() const {
        if (cap_ == 0.0) return 0.0;
        switch (kind_) {
            case SalesKind::Indicator: return 0.0;
            case SalesKind::PowerCapped:
                if (!std::isfinite(q_)) return 0.0;
                if (q_ > 1.0) return 0.0;
                if (q_ == 1.0) return 1.0;
                return kInf;
            case SalesKind::LeverageLinear:
                return lambda_ < lambda_max_ ? 0.0 : lambda_max_ / lambda_;
            case SalesKind::LeveragePrice:
                if (lambda_ < lambda_max_) return 0.0;
                return (lambda_ - 1.0) / lambda_;  // lambda == lambda_max
            case SalesKind::TableDriven:
                return 0.0;  // step function, constant 0 on [0, u_1)
        }
        return 0.0;
    }

    double value_at_one() const { return (*this)(1.0); }

    // Largest value the function attains (= rho at saturation).
    double max_value() const { return std::min(raw_right(1.0), cap_); }

    // Smallest u at which the function reaches max_value(); used to split integrals.
    double saturation_point() const {
        double target = max_value();
        if (target <= 0.0) return 0.0;
        switch (kind_) {
            case SalesKind::Indicator: return 1.0;
            case SalesKind::PowerCapped:
                if (!std::isfinite(q_)) return 1.0;
                return std::min(1.0, std::pow(target, 1.0 / q_));
            case SalesKind::LeverageLinear: {
                // raw = 1 - (1-u) lmax/l reaches target at u = 1 - (1-target) l/lmax
                double u = 1.0 - (1.0 - target) * lambda_ / lambda_max_;
                return std::min(1.0, std::max(0.0, u));
            }
            case SalesKind::LeveragePrice: {
                // solve 1 - lmax (1-u)/(l-u) = target
                double t = 1.0 - target;
                double u = (lambda_max_ - t * lambda_) / (lambda_max_ - t);
                return std::min(1.0, std::max(0.0, u));
            }
            case SalesKind::TableDriven:
                for (auto& [u, v] : table_)
                    if (std::min(v, cap_) >= target) return u;
                return 1.0;
        }
        return 1.0;
    }

    // Interior points where the function has a kink or jump, for quadrature splitting.
    std::vector<double> kink_points() const {
        std::vector<double> ks;
        switch (kind_) {
            case SalesKind::Indicator: ks.push_back(1.0); break;
            case SalesKind::PowerCapped:
                ks.push_back(std::isfinite(q_) ? saturation_point() : 1.0);
                break;
            case SalesKind::LeverageLinear:
                ks.push_back(1.0 - lambda_ / lambda_max_);
                break;
            case SalesKind::LeveragePrice:
                ks.push_back((lambda_max_ - lambda_) / (lambda_max_ - 1.0));
                break;
            case SalesKind::TableDriven:
                for (std::size_t i = 1; i < table_.size(); ++i) ks.push_back(table_[i].first);
                break;
        }
        if (cap_ < 1.0) ks.push_back(saturation_point());
        return ks;
    }

    SalesFunction left_continuous_modification() const {
        SalesFunction s = *this;
        s.left_view_ = true;
        return s;
    }

    SalesFunction capped(double eps) const {
        if (!(eps >= 0.0 && eps <= 1.0)) throw DomainError("cap_sales: eps must be in [0,1]");
        SalesFunction s = *this;
        s.cap_ = std::min(cap_, eps);
        return s;
    }

    bool operator==(const SalesFunction& o) const {
        return kind_ == o.kind_ && q_ == o.q_ && lambda_ == o.lambda_ &&
               lambda_max_ == o.lambda_max_ && table_ == o.table_ && cap_ == o.cap_ &&
               left_view_ == o.left_view_;
    }

private:
    explicit SalesFunction(SalesKind k) : kind_(k) {}

    static void check_leverage(double lambda, double lambda_max) {
        if (!(lambda >= 1.0)) throw DomainError("leverage: lambda must be >= 1");
        if (!(lambda_max >= lambda)) throw DomainError("leverage: lambda_max must be >= lambda");
    }

    // Right-continuous evaluation of the uncapped function on [0, 1].
    double raw_right(double u) const {
        switch (kind_) {
            case SalesKind::Indicator: return u >= 1.0 ? 1.0 : 0.0;
            case SalesKind::PowerCapped:
                if (!std::isfinite(q_)) return u >= 1.0 ? 1.0 : 0.0;
                return u >= 1.0 ? 1.0 : std::pow(u, q_);
            case SalesKind::LeverageLinear: {
                double v = 1.0 - (1.0 - u) * lambda_max_ / lambda_;
                return v > 0.0 ? std::min(v, 1.0) : 0.0;
            }
            case SalesKind::LeveragePrice: {
                if (u >= 1.0) return 1.0;
                double v = 1.0 - lambda_max_ * (1.0 - u) / (lambda_ - u);
                return v > 0.0 ? std::min(v, 1.0) : 0.0;
            }
            case SalesKind::TableDriven: {
                double v = 0.0;
                for (auto& [bu, bv] : table_) {
                    if (bu > u) break;
                    v = bv;
                }
                return v;
            }
        }
        return 0.0;
    }

    // Left-continuous evaluation: lim_{e->0+} rho((1-e) u); equals rho(1) above 1.
    double raw_left(double u) const {
        if (u > 1.0) return raw_right(1.0);
        switch (kind_) {
            case SalesKind::Indicator: return 0.0;  // u <= 1 here, limit from below is 0
            case SalesKind::PowerCapped:
                if (!std::isfinite(q_)) return 0.0;
                return raw_right(u);
            case SalesKind::LeverageLinear:
            case SalesKind::LeveragePrice:
                return raw_right(u);
            case SalesKind::TableDriven: {
                double v = 0.0;
                for (auto& [bu, bv] : table_) {
                    if (bu >= u) break;
                    v = bv;
                }
                return v;
            }
        }
        return 0.0;
    }

    SalesKind kind_;
    double q_ = kInf;
    double lambda_ = 0.0, lambda_max_ = 0.0;
    std::vector<std::pair<double, double>> table_;
    double cap_ = 1.0;
    bool left_view_ = false;
};

inline SalesFunction left_continuous_modification(const SalesFunction& rho) {
    return rho.left_continuous_modification();
}

inline SalesFunction cap_sales(const SalesFunction& rho, double eps) { return rho.capped(eps); }

inline double eval_sales(const SalesFunction& rho, double u) { return rho(u); }

}  // namespace firesale
