#include <doctest.h>

#include "mse/random.hpp"
#include "properties.hpp"

TEST_SUITE("properties") {

TEST_CASE("randomized property suites at the default seed") {
    for (const auto& r : mse::testing::all_property_suites(mse::kDefaultSeed)) {
        INFO(r.name << ": " << r.cases << " cases, worst " << r.worst << " (tolerance " << r.tolerance << ") "
                    << r.detail);
        CHECK(r.pass());
    }
}

}  // TEST_SUITE
