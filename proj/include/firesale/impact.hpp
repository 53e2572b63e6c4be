// Price impact functions h^m: relative price drop per asset as sold shares accumulate.
#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "firesale/common.hpp"

namespace firesale {

enum class ImpactKind { Linear, Power, Exponential, Table };

// One asset's impact curve. Evaluation clamps to [0, 1]; a user-supplied table with
// values above 1 is rejected by the loader rather than clamped silently there.
struct ImpactComponent {
    ImpactKind kind = ImpactKind::Linear;
    double nu = 1.0;                                   // Power exponent
    std::vector<std::pair<double, double>> table;      // piecewise linear, from (0,0)

    double eval(double x) const {
        switch (kind) {
            case ImpactKind::Linear: return std::min(x, 1.0);
            case ImpactKind::Power: return std::min(std::pow(x, nu), 1.0);
            case ImpactKind::Exponential: return -std::expm1(-x);
            case ImpactKind::Table: {
                if (x <= 0.0) return 0.0;
                for (std::size_t i = 1; i < table.size(); ++i) {
                    auto [x0, v0] = table[i - 1];
                    auto [x1, v1] = table[i];
                    if (x <= x1) {
                        double v = v0 + (x - x0) * ((v1 - v0) / (x1 - x0));
                        // clamp to the segment range so evaluation stays monotone
                        return std::min(std::max(v, v0), v1);
                    }
                }
                return table.back().second;
            }
        }
        return 0.0;
    }

    // Right derivative at 0; +inf for Power with nu < 1.
    double derivative_at_zero() const {
        switch (kind) {
            case ImpactKind::Linear: return 1.0;
            case ImpactKind::Power:
                if (nu == 1.0) return 1.0;
                return nu > 1.0 ? 0.0 : kInf;
            case ImpactKind::Exponential: return 1.0;
            case ImpactKind::Table:
                if (table.size() < 2) return 0.0;
                return (table[1].second - table[0].second) / (table[1].first - table[0].first);
        }
        return 0.0;
    }
};

class PriceImpact {
public:
    PriceImpact() = default;

    explicit PriceImpact(std::vector<ImpactComponent> comps) : comps_(std::move(comps)) {
        for (auto& c : comps_) validate(c);
    }

    static PriceImpact uniform(ImpactComponent c, int assets) {
        validate(c);
        return PriceImpact(std::vector<ImpactComponent>(static_cast<std::size_t>(assets), c));
    }

    static ImpactComponent linear() { return ImpactComponent{ImpactKind::Linear, 1.0, {}}; }
    static ImpactComponent power(double nu) {
        if (!(nu > 0.0)) throw DomainError("impact power: nu must be positive");
        return ImpactComponent{ImpactKind::Power, nu, {}};
    }
    static ImpactComponent exponential() { return ImpactComponent{ImpactKind::Exponential, 1.0, {}}; }
    static ImpactComponent table(std::vector<std::pair<double, double>> pts) {
        ImpactComponent c{ImpactKind::Table, 1.0, std::move(pts)};
        validate(c);
        return c;
    }

    int assets() const { return static_cast<int>(comps_.size()); }
    const ImpactComponent& component(int m) const { return comps_[static_cast<std::size_t>(m)]; }

    double eval1(int m, double x) const { return comps_[static_cast<std::size_t>(m)].eval(x); }

    void eval(std::span<const double> chi, std::span<double> out) const {
        for (std::size_t m = 0; m < comps_.size(); ++m) out[m] = comps_[m].eval(chi[m]);
    }

    std::vector<double> eval(std::span<const double> chi) const {
        std::vector<double> out(comps_.size());
        eval(chi, out);
        return out;
    }

    double derivative_at_zero(int m) const {
        return comps_[static_cast<std::size_t>(m)].derivative_at_zero();
    }

private:
    static void validate(const ImpactComponent& c) {
        if (c.kind == ImpactKind::Power && !(c.nu > 0.0))
            throw DomainError("impact power: nu must be positive");
        if (c.kind == ImpactKind::Table) {
            if (c.table.size() < 2 || c.table.front() != std::pair<double, double>{0.0, 0.0})
                throw DomainError("impact table: needs at least two points starting at (0,0)");
            for (std::size_t i = 1; i < c.table.size(); ++i) {
                if (c.table[i].first <= c.table[i - 1].first)
                    throw DomainError("impact table: x values must increase");
                if (c.table[i].second < c.table[i - 1].second)
                    throw DomainError("impact table: values must be non-decreasing");
                if (c.table[i].second > 1.0)
                    throw DomainError("impact table: values above 1 are not allowed");
            }
        }
    }

    std::vector<ImpactComponent> comps_;
};

inline std::vector<double> eval_impact(const PriceImpact& h, std::span<const double> chi) {
    return h.eval(chi);
}

}  // namespace firesale
