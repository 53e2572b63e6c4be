#include <catch2/catch_amalgamated.hpp>

#include "firesale/impact.hpp"
#include "firesale/rng.hpp"

using namespace firesale;

TEST_CASE("componentwise evaluation of the catalog kinds") {
    PriceImpact h(std::vector<ImpactComponent>{
        PriceImpact::linear(), PriceImpact::exponential(), PriceImpact::power(0.5)});
    std::vector<double> chi{0.0, 1.0, 0.25};
    auto out = eval_impact(h, chi);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == Catch::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
    CHECK(out[2] == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("zero maps to zero and outputs stay within the unit interval") {
    PriceImpact h(std::vector<ImpactComponent>{
        PriceImpact::linear(), PriceImpact::power(2.0), PriceImpact::exponential(),
        PriceImpact::table({{0.0, 0.0}, {0.5, 0.8}, {2.0, 1.0}})});
    std::vector<double> zero(4, 0.0);
    for (double v : h.eval(zero)) CHECK(v == 0.0);
    std::vector<double> large(4, 50.0);
    for (double v : h.eval(large)) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(h.eval(large)[0] == 1.0);  // linear clamps at 1
}

TEST_CASE("power with unit exponent equals linear on the unit interval") {
    auto lin = PriceImpact::linear();
    auto pow1 = PriceImpact::power(1.0);
    for (double x = 0.0; x <= 1.0; x += 1.0 / 128) CHECK(pow1.eval(x) == lin.eval(x));
}

TEST_CASE("monotone componentwise") {
    PriceImpact h(std::vector<ImpactComponent>{
        PriceImpact::linear(), PriceImpact::power(0.5), PriceImpact::power(2.0),
        PriceImpact::exponential(), PriceImpact::table({{0.0, 0.0}, {0.3, 0.2}, {1.0, 0.9}})});
    CounterRng rng(77);
    std::vector<double> a(5), b(5);
    for (int it = 0; it < 2000; ++it) {
        for (int m = 0; m < 5; ++m) {
            double x = 2.0 * rng.next_unit();
            double y = x + rng.next_unit();
            a[static_cast<std::size_t>(m)] = x;
            b[static_cast<std::size_t>(m)] = y;
        }
        auto va = h.eval(a);
        auto vb = h.eval(b);
        for (int m = 0; m < 5; ++m)
            CHECK(va[static_cast<std::size_t>(m)] <= vb[static_cast<std::size_t>(m)]);
    }
}

TEST_CASE("derivative at zero per kind") {
    CHECK(PriceImpact::linear().derivative_at_zero() == 1.0);
    CHECK(PriceImpact::exponential().derivative_at_zero() == 1.0);
    CHECK(PriceImpact::power(2.0).derivative_at_zero() == 0.0);
    CHECK(PriceImpact::power(0.5).derivative_at_zero() == kInf);
    CHECK(PriceImpact::table({{0.0, 0.0}, {0.5, 0.25}}).derivative_at_zero() == 0.5);
}

TEST_CASE("invalid tables rejected") {
    CHECK_THROWS_AS(PriceImpact::table({{0.0, 0.0}}), DomainError);
    CHECK_THROWS_AS(PriceImpact::table({{0.1, 0.0}, {0.5, 0.2}}), DomainError);
    CHECK_THROWS_AS(PriceImpact::table({{0.0, 0.0}, {0.5, 1.2}}), DomainError);
    CHECK_THROWS_AS(PriceImpact::table({{0.0, 0.0}, {0.5, 0.5}, {0.4, 0.6}}), DomainError);
    CHECK_THROWS_AS(PriceImpact::power(-1.0), DomainError);
}
