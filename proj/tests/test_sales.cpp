#include <catch2/catch_amalgamated.hpp>

#include "firesale/rng.hpp"
#include "firesale/sales.hpp"

using namespace firesale;

namespace {
std::vector<SalesFunction> all_kinds() {
    return {
        SalesFunction::indicator(),
        SalesFunction::power_capped(0.7),
        SalesFunction::power_capped(1.0),
        SalesFunction::power_capped(2.0),
        SalesFunction::power_capped(kInf),
        SalesFunction::leverage_linear(3.0, 4.0),
        SalesFunction::leverage_price(2.0, 3.0),
        SalesFunction::table({{0.0, 0.0}, {0.4, 0.25}, {0.8, 0.6}, {1.0, 1.0}}),
    };
}
}  // namespace

TEST_CASE("evaluation matches the catalog formulas") {
    CHECK(eval_sales(SalesFunction::indicator(), 0.5) == 0.0);
    CHECK(eval_sales(SalesFunction::indicator(), 1.0) == 1.0);
    CHECK(eval_sales(SalesFunction::power_capped(2.0), 0.5) == 0.25);
    CHECK(eval_sales(SalesFunction::leverage_linear(3.0, 4.0), 0.625) ==
          Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("values freeze at one") {
    for (const auto& rho : all_kinds()) {
        CHECK(rho(1.7) == rho(1.0));
        CHECK(rho(25.0) == rho(1.0));
        CHECK(rho(0.0) == 0.0);
    }
}

TEST_CASE("power cap with infinite exponent is the indicator") {
    auto ind = SalesFunction::indicator();
    auto pc = SalesFunction::power_capped(kInf);
    for (double u : {0.0, 0.3, 0.999, 1.0, 1.5}) CHECK(pc(u) == ind(u));
}

TEST_CASE("monotone in the argument for every kind") {
    CounterRng rng(20240817);
    for (const auto& rho : all_kinds()) {
        for (int i = 0; i < 10000; ++i) {
            double a = 2.0 * rng.next_unit();
            double b = 2.0 * rng.next_unit();
            if (a > b) std::swap(a, b);
            CHECK(rho(a) <= rho(b));
        }
    }
}

TEST_CASE("left-continuous modification") {
    SECTION("indicator keeps the jump open at 1") {
        auto lc = left_continuous_modification(SalesFunction::indicator());
        CHECK(lc(1.0) == 0.0);
        CHECK(lc(1.0 + 1e-12) == 1.0);
        CHECK(lc(2.0) == 1.0);
    }
    SECTION("continuous kinds are unchanged") {
        auto rho = SalesFunction::power_capped(2.0);
        auto lc = left_continuous_modification(rho);
        for (double u = 0.0; u <= 1.5; u += 0.01) CHECK(lc(u) == rho(u));
    }
    SECTION("table jump evaluated from both sides") {
        auto rho = SalesFunction::table({{0.0, 0.0}, {0.4, 0.25}, {1.0, 1.0}});
        auto lc = left_continuous_modification(rho);
        CHECK(rho(0.4) == 0.25);
        CHECK(rho(0.4 - 1e-9) == 0.0);
        CHECK(lc(0.4) == 0.0);
        CHECK(lc(0.4 + 1e-9) == 0.25);
    }
    SECTION("pointwise below the right-continuous version") {
        for (const auto& rho : all_kinds()) {
            auto lc = left_continuous_modification(rho);
            for (double u = 0.0; u <= 2.0; u += 1.0 / 512) CHECK(lc(u) <= rho(u));
        }
    }
}

TEST_CASE("cap_sales is the exact pointwise minimum") {
    for (const auto& rho : all_kinds()) {
        CHECK(cap_sales(rho, 1.0)(0.77) == rho(0.77));
        CHECK(cap_sales(rho, 0.0)(0.77) == 0.0);
        auto capped = cap_sales(rho, 0.3);
        for (double u = 0.0; u <= 2.0; u += 1.0 / 256)
            CHECK(capped(u) == std::min(rho(u), 0.3));
    }
    auto ind03 = cap_sales(SalesFunction::indicator(), 0.3);
    CHECK(ind03(0.9) == 0.0);
    CHECK(ind03(1.0) == 0.3);
    CHECK(ind03(3.0) == 0.3);
}

TEST_CASE("exact derivative at zero") {
    CHECK(SalesFunction::indicator().derivative_at_zero() == 0.0);
    CHECK(SalesFunction::power_capped(1.0).derivative_at_zero() == 1.0);
    CHECK(SalesFunction::power_capped(2.0).derivative_at_zero() == 0.0);
    CHECK(SalesFunction::power_capped(0.5).derivative_at_zero() == kInf);
    CHECK(SalesFunction::power_capped(kInf).derivative_at_zero() == 0.0);
    CHECK(SalesFunction::leverage_linear(3.0, 4.0).derivative_at_zero() == 0.0);
    CHECK(SalesFunction::leverage_linear(2.0, 2.0).derivative_at_zero() == 1.0);
    CHECK(SalesFunction::leverage_price(2.0, 3.0).derivative_at_zero() == 0.0);
    CHECK(SalesFunction::table({{0.0, 0.0}, {0.5, 1.0}}).derivative_at_zero() == 0.0);
}

TEST_CASE("leverage formulas against hand substitution") {
    auto ll = SalesFunction::leverage_linear(3.0, 4.0);
    CHECK(ll(0.25) == 0.0);  // exactly at the threshold 1 - lambda/lambda_max
    CHECK(ll(0.2) == 0.0);
    CHECK(ll(1.0) == 1.0);
    auto lp = SalesFunction::leverage_price(2.0, 3.0);
    // threshold (lambda_max - lambda) / (lambda_max - 1) = 0.5
    CHECK(lp(0.5) == 0.0);
    CHECK(lp(0.4) == 0.0);
    CHECK(lp(0.75) == Catch::Approx(1.0 - 3.0 * 0.25 / 1.25).margin(1e-15));
    CHECK(lp(1.0) == 1.0);
}

TEST_CASE("continuity flags") {
    CHECK_FALSE(SalesFunction::indicator().continuous());
    CHECK(SalesFunction::power_capped(2.0).continuous());
    CHECK_FALSE(SalesFunction::power_capped(kInf).continuous());
    CHECK(SalesFunction::leverage_linear(3.0, 4.0).continuous());
    CHECK_FALSE(SalesFunction::table({{0.0, 0.0}, {0.4, 0.25}}).continuous());
    CHECK(cap_sales(SalesFunction::indicator(), 0.0).continuous());
}

TEST_CASE("invalid constructions are rejected") {
    CHECK_THROWS_AS(SalesFunction::power_capped(0.0), DomainError);
    CHECK_THROWS_AS(SalesFunction::leverage_linear(0.5, 4.0), DomainError);
    CHECK_THROWS_AS(SalesFunction::leverage_linear(4.0, 3.0), DomainError);
    CHECK_THROWS_AS(SalesFunction::table({{0.1, 0.0}}), DomainError);
    CHECK_THROWS_AS(SalesFunction::table({{0.0, 0.0}, {0.4, 0.5}, {0.6, 0.4}}), DomainError);
    CHECK_THROWS_AS(cap_sales(SalesFunction::indicator(), 1.5), DomainError);
}
