#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "firesale/system.hpp"

using namespace firesale;

namespace {
PriceImpact linear1() { return PriceImpact::uniform(PriceImpact::linear(), 1); }
}  // namespace

TEST_CASE("csv loading happy path") {
    std::istringstream in(
        "id,x_1,x_2,c,l\n"
        "a,1.0,0.5,2.0,0.0\n"
        "b,0.0,2.0,1.5,0.25\n");
    CsvLoadReport rep;
    auto sys = load_system_csv(in, SalesFunction::indicator(),
                               PriceImpact::uniform(PriceImpact::linear(), 2), &rep);
    CHECK(sys.size() == 2);
    CHECK(sys.assets == 2);
    CHECK(rep.rows_dropped == 0);
    CHECK(sys.ids[0] == "a");
    CHECK(sys.row(1)[1] == 2.0);
    CHECK(sys.losses[1] == 0.25);
    sys.validate();
}

TEST_CASE("all-zero holdings rows are dropped and counted") {
    std::istringstream in(
        "id,x_1,c,l\n"
        "a,1.0,2.0,0.0\n"
        "zero,0.0,1.0,0.5\n"
        "b,2.0,1.0,0.0\n");
    CsvLoadReport rep;
    auto sys = load_system_csv(in, SalesFunction::indicator(), linear1(), &rep);
    CHECK(sys.size() == 2);
    CHECK(rep.rows_dropped == 1);
    CHECK(sys.ids == std::vector<std::string>{"a", "b"});
}

TEST_CASE("loader errors name the offending row or column") {
    SECTION("zero capital") {
        std::istringstream in("id,x_1,c,l\nbad,1.0,0.0,0.0\n");
        CHECK_THROWS_WITH(load_system_csv(in, SalesFunction::indicator(), linear1()),
                          Catch::Matchers::ContainsSubstring("bad"));
    }
    SECTION("missing capital column") {
        std::istringstream in("id,x_1,l\nr,1.0,0.0\n");
        CHECK_THROWS_WITH(load_system_csv(in, SalesFunction::indicator(), linear1()),
                          Catch::Matchers::ContainsSubstring("'c'"));
    }
    SECTION("negative holding") {
        std::istringstream in("id,x_1,c,l\nr,-1.0,1.0,0.0\n");
        CHECK_THROWS_AS(load_system_csv(in, SalesFunction::indicator(), linear1()), DomainError);
    }
    SECTION("unparseable field") {
        std::istringstream in("id,x_1,c,l\nr,oops,1.0,0.0\n");
        CHECK_THROWS_WITH(load_system_csv(in, SalesFunction::indicator(), linear1()),
                          Catch::Matchers::ContainsSubstring("x_1"));
    }
    SECTION("asset count mismatch with impact") {
        std::istringstream in("id,x_1,x_2,c,l\nr,1.0,1.0,1.0,0.0\n");
        CHECK_THROWS_AS(load_system_csv(in, SalesFunction::indicator(), linear1()), DomainError);
    }
}
