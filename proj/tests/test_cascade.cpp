#include <catch2/catch_amalgamated.hpp>

#include "firesale/cascade.hpp"
#include "firesale/ensemble.hpp"
#include "firesale/rng.hpp"

using namespace firesale;

namespace {

FiniteSystem make_system(int M, std::vector<double> holdings, std::vector<double> capitals,
                         std::vector<double> losses, SalesFunction sales, PriceImpact impact) {
    FiniteSystem sys;
    sys.assets = M;
    sys.holdings = std::move(holdings);
    sys.capitals = std::move(capitals);
    sys.losses = std::move(losses);
    sys.sales = std::move(sales);
    sys.impact = std::move(impact);
    return sys;
}

FiniteSystem worked_two_bank() {
    // n=2, M=1, indicator sales, linear impact, x=(1,1), c=(0.5,1.2), l=(0.5,0)
    return make_system(1, {1.0, 1.0}, {0.5, 1.2}, {0.5, 0.0}, SalesFunction::indicator(),
                       PriceImpact::uniform(PriceImpact::linear(), 1));
}

// Seeded random small system mixing all sales kinds; used by the property suites.
FiniteSystem random_system(std::uint64_t seed) {
    CounterRng rng(seed);
    std::size_t n = 2 + rng.next_u64() % 49;
    int M = 1 + static_cast<int>(rng.next_u64() % 3);
    std::vector<SalesFunction> kinds = {
        SalesFunction::indicator(),
        SalesFunction::power_capped(0.7),
        SalesFunction::power_capped(1.0),
        SalesFunction::power_capped(2.0),
        SalesFunction::power_capped(kInf),
        SalesFunction::leverage_linear(3.0, 4.0),
        SalesFunction::leverage_price(2.0, 3.0),
        SalesFunction::table({{0.0, 0.0}, {0.3, 0.2}, {0.7, 0.5}, {1.0, 1.0}}),
    };
    std::vector<ImpactComponent> impacts = {PriceImpact::linear(), PriceImpact::exponential(),
                                            PriceImpact::power(0.5), PriceImpact::power(2.0)};
    SalesFunction sales = kinds[rng.next_u64() % kinds.size()];
    std::vector<ImpactComponent> comps;
    for (int m = 0; m < M; ++m) comps.push_back(impacts[rng.next_u64() % impacts.size()]);
    std::vector<double> x, c, l;
    for (std::size_t i = 0; i < n; ++i) {
        bool any = false;
        for (int m = 0; m < M; ++m) {
            double v = rng.next_unit() < 0.2 ? 0.0 : 2.0 * rng.next_unit();
            if (v > 0.0) any = true;
            x.push_back(v);
        }
        if (!any) x[x.size() - 1] = 0.5;  // keep rows non-degenerate
        c.push_back(0.2 + 2.0 * rng.next_unit());
        l.push_back(rng.next_unit() < 0.3 ? rng.next_unit() : 0.0);
    }
    return make_system(M, std::move(x), std::move(c), std::move(l), sales,
                       PriceImpact(std::move(comps)));
}

}  // namespace

TEST_CASE("worked two-bank example") {
    auto sys = worked_two_bank();
    SECTION("fire sales process") {
        auto res = run_fire_sales(sys);
        REQUIRE(res.converged);
        CHECK(res.sold_per_n[0] == 0.5);
        CHECK(res.defaults == std::vector<std::uint32_t>{0});
        CHECK(res.default_fraction == 0.5);
        CHECK(res.rounds == 2);
    }
    SECTION("auxiliary process agrees here") {
        auto res = run_auxiliary(sys);
        REQUIRE(res.converged);
        CHECK(res.sold_per_n[0] == 0.5);
        CHECK(res.defaults == std::vector<std::uint32_t>{0});
    }
}

TEST_CASE("single bank sells at the pre-sale price") {
    auto sys = make_system(1, {1.0}, {1.0}, {1.0}, SalesFunction::indicator(),
                           PriceImpact::uniform(PriceImpact::linear(), 1));
    auto res = run_fire_sales(sys);
    REQUIRE(res.converged);
    CHECK(res.sold_per_n[0] == 1.0);
    CHECK(res.defaults == std::vector<std::uint32_t>{0});
}

TEST_CASE("no shock means no process") {
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        auto sys = random_system(seed);
        std::fill(sys.losses.begin(), sys.losses.end(), 0.0);
        auto real = run_fire_sales(sys);
        auto aux = run_auxiliary(sys);
        for (double v : real.sold_per_n) CHECK(v == 0.0);
        for (double v : aux.sold_per_n) CHECK(v == 0.0);
        CHECK(real.defaults.empty());
        CHECK(aux.defaults.empty());
    }
}

TEST_CASE("zero sales function gives identical zero traces") {
    auto sys = worked_two_bank();
    sys.sales = cap_sales(SalesFunction::indicator(), 0.0);
    auto rep = verify_coupling(sys, 5);
    CHECK(rep.ok);
    for (double m : rep.margins) CHECK(m == 0.0);
}

TEST_CASE("coupling margins on the worked example") {
    auto rep = verify_coupling(worked_two_bank(), 6);
    CHECK(rep.ok);
    CHECK(rep.first_violation == -1);
    for (double m : rep.margins) CHECK(m >= 0.0);
}

TEST_CASE("corrupted trace is flagged at the right round") {
    // round 2 of the tau trace deliberately exceeds sigma
    std::vector<double> tau{0.0, 0.6, 0.6};
    std::vector<double> sigma{0.0, 0.5, 0.7};
    auto rep = coupling_report(tau, sigma, 1, 3);
    CHECK_FALSE(rep.ok);
    CHECK(rep.first_violation == 2);
}

TEST_CASE("coupling holds on seeded random systems") {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        auto sys = random_system(seed);
        auto rep = verify_coupling(sys, 30);
        INFO("seed " << seed);
        REQUIRE(rep.ok);
        auto real = run_fire_sales(sys);
        auto aux = run_auxiliary(sys);
        for (int m = 0; m < sys.assets; ++m)
            CHECK(real.sold_per_n[static_cast<std::size_t>(m)] <=
                  aux.sold_per_n[static_cast<std::size_t>(m)]);
    }
}

TEST_CASE("monotone trajectories bounded by total holdings") {
    for (std::uint64_t seed : {3u, 7u, 21u}) {
        auto sys = random_system(seed);
        CascadeOptions opts;
        opts.trace = true;
        for (auto res : {run_fire_sales(sys, opts), run_auxiliary(sys, opts)}) {
            std::size_t rows = res.trace_sold.size() / static_cast<std::size_t>(sys.assets);
            for (std::size_t r = 1; r < rows; ++r)
                for (int m = 0; m < sys.assets; ++m)
                    CHECK(res.trace_sold[r * sys.assets + m] >=
                          res.trace_sold[(r - 1) * sys.assets + m]);
            for (int m = 0; m < sys.assets; ++m) {
                double bound = 0.0;
                for (std::size_t i = 0; i < sys.size(); ++i) bound += sys.row(i)[m];
                CHECK(res.sold_per_n[static_cast<std::size_t>(m)] <=
                      bound / static_cast<double>(sys.size()) + 1e-15);
            }
        }
    }
}

TEST_CASE("permutation invariance is exact") {
    for (std::uint64_t seed : {5u, 17u, 40u}) {
        auto sys = random_system(seed);
        auto base_real = run_fire_sales(sys);
        auto base_aux = run_auxiliary(sys);
        // rotate rows by one and compare bitwise
        FiniteSystem rot = sys;
        std::size_t n = sys.size();
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t j = (i + 1) % n;
            for (int m = 0; m < sys.assets; ++m)
                rot.holdings[i * sys.assets + m] = sys.holdings[j * sys.assets + m];
            rot.capitals[i] = sys.capitals[j];
            rot.losses[i] = sys.losses[j];
        }
        auto rot_real = run_fire_sales(rot);
        auto rot_aux = run_auxiliary(rot);
        CHECK(rot_real.sold_per_n == base_real.sold_per_n);
        CHECK(rot_aux.sold_per_n == base_aux.sold_per_n);
        CHECK(rot_real.default_fraction == base_real.default_fraction);
        CHECK(rot_aux.default_fraction == base_aux.default_fraction);
    }
}

TEST_CASE("raising a loss never shrinks the outcome") {
    for (std::uint64_t seed : {9u, 33u}) {
        auto sys = random_system(seed);
        auto base_real = run_fire_sales(sys);
        auto base_aux = run_auxiliary(sys);
        FiniteSystem bumped = sys;
        bumped.losses[0] += 0.4;
        auto bump_real = run_fire_sales(bumped);
        auto bump_aux = run_auxiliary(bumped);
        for (int m = 0; m < sys.assets; ++m) {
            CHECK(bump_real.sold_per_n[static_cast<std::size_t>(m)] >=
                  base_real.sold_per_n[static_cast<std::size_t>(m)]);
            CHECK(bump_aux.sold_per_n[static_cast<std::size_t>(m)] >=
                  base_aux.sold_per_n[static_cast<std::size_t>(m)]);
        }
    }
}

TEST_CASE("max_rounds cap reports non-convergence") {
    auto sys = worked_two_bank();
    CascadeOptions opts;
    opts.max_rounds = 1;
    auto res = run_fire_sales(sys, opts);
    CHECK_FALSE(res.converged);
    CHECK(res.rounds == 1);
}

TEST_CASE("finite fixed point equals the auxiliary limit") {
    SECTION("indicator on the worked example") {
        auto fp = smallest_fixed_point_finite(worked_two_bank());
        REQUIRE(fp.converged);
        CHECK(fp.chi[0] == 0.5);
        // the shocked bank sits exactly at the jump (l = c), so the left-continuous
        // lower-bound process never starts and its smallest root is 0
        CHECK(fp.chi_lower[0] == 0.0);
        CHECK(fp.chi_lower[0] <= fp.chi[0]);
    }
    SECTION("indicator with the jump cleared: both bounds coincide") {
        auto sys = worked_two_bank();
        sys.losses[0] = 0.51;  // strictly past the default point
        auto fp = smallest_fixed_point_finite(sys);
        REQUIRE(fp.converged);
        CHECK(fp.chi[0] == 0.5);
        CHECK(fp.chi_lower[0] == 0.5);  // jump point not attained at the root
    }
    SECTION("continuous sales functions: lower equals upper") {
        for (std::uint64_t seed : {2u, 14u}) {
            auto sys = random_system(seed);
            sys.sales = SalesFunction::power_capped(2.0);
            auto fp = smallest_fixed_point_finite(sys);
            auto aux = run_auxiliary(sys);
            for (int m = 0; m < sys.assets; ++m) {
                CHECK(fp.chi[static_cast<std::size_t>(m)] ==
                      Catch::Approx(aux.sold_per_n[static_cast<std::size_t>(m)]).margin(1e-9));
                CHECK(fp.chi_lower[static_cast<std::size_t>(m)] ==
                      fp.chi[static_cast<std::size_t>(m)]);
            }
        }
    }
}

TEST_CASE("auxiliary limit matches an independent scan-and-bisection root") {
    // one-asset residual R(chi) = (1/n) sum_i x_i rho((l_i + x_i h(chi))/c_i) - chi,
    // scanned densely from 0; the first sign change is refined by bisection.
    int checked = 0;
    for (std::uint64_t seed = 200; checked < 50; ++seed) {
        auto sys = random_system(seed);
        if (sys.assets != 1) continue;
        sys.sales = (seed % 2 == 0) ? SalesFunction::indicator() : SalesFunction::power_capped(2.0);
        ++checked;
        auto aux = run_auxiliary(sys);
        auto residual = [&](double chi) {
            std::vector<double> cv{chi};
            auto hv = sys.impact.eval(cv);
            double s = 0.0;
            for (std::size_t i = 0; i < sys.size(); ++i)
                s += sys.row(i)[0] *
                     sys.sales((sys.losses[i] + sys.row(i)[0] * hv[0]) / sys.capitals[i]);
            return s / static_cast<double>(sys.size()) - chi;
        };
        double bound = 0.0;
        for (std::size_t i = 0; i < sys.size(); ++i) bound += sys.row(i)[0];
        bound = bound / static_cast<double>(sys.size()) + 1e-6;
        double step = 1e-4;
        double root = 0.0;
        double a = 0.0, fa = residual(0.0);
        bool found = false;
        if (fa <= 0.0) {
            root = 0.0;
            found = true;
        }
        while (!found && a < bound) {
            double b = std::min(a + step, bound);
            double fb = residual(b);
            if (fa > 0.0 && fb <= 0.0) {
                double lo = a, hi = b;
                while (hi - lo > 1e-10) {
                    double mid = 0.5 * (lo + hi);
                    if (residual(mid) > 0.0)
                        lo = mid;
                    else
                        hi = mid;
                }
                root = 0.5 * (lo + hi);
                found = true;
            }
            a = b;
            fa = fb;
        }
        INFO("seed " << seed);
        REQUIRE(found);
        CHECK(aux.sold_per_n[0] == Catch::Approx(root).margin(1e-6));
    }
}
