#pragma once
// Randomized property suites shared by the unit tests and the acceptance
// runner. Every suite uses a fixed seed and checks the library against an
// oracle computed independently of the code path under test.

#include <cstdint>
#include <string>
#include <vector>

#include "mse/random.hpp"
#include "mse/table.hpp"

namespace mse::testing {

struct PropertyResult {
    std::string name;
    int cases = 0;
    int failures = 0;
    double worst = 0.0;      // largest observed error in the suite's own units
    double tolerance = 0.0;
    std::string detail;

    bool pass() const { return cases > 0 && failures == 0; }
};

// Random table with counts uniform in [lo, hi] and lists named L1..LK.
ObservedTable random_table(Engine& rng, int num_lists, std::int64_t lo, std::int64_t hi);

// Random strictly positive observed probabilities, each cell at least floor
// before normalization.
ObservedProbs random_probs(Engine& rng, int num_lists, double floor = 0.02);

// Marginal NHOI over a subset versus NHOI on the table restricted to that
// subset (relative difference of the two estimates).
PropertyResult equivalence_suite(std::uint64_t seed, int cases = 500);

// Analytic gradient of the unobserved odds versus central finite differences
// over the free coordinates, for each family.
PropertyResult gradient_suite(std::uint64_t seed, int cases_per_family = 100);

// C m equals the nonzero cells of the directly computed mixture probabilities.
PropertyResult reconstruction_suite(std::uint64_t seed, int cases = 100);

// Dirichlet sampler means versus (alpha_h + n_h) / (sum alpha + n), in units of
// Monte Carlo standard errors.
PropertyResult conjugacy_suite(std::uint64_t seed, int cases = 100);

// Under the scale prior the posterior mean of N given pi0 is n / (1 - pi0),
// in units of Monte Carlo standard errors.
PropertyResult ht_mean_suite(std::uint64_t seed, int cases = 100);

// Point estimates strictly decrease as xi grows, for both families.
PropertyResult monotonicity_suite(std::uint64_t seed, int cases = 100);

// K = 2 NHOI(1) versus the Petersen estimator n1+ n+1 / n11.
PropertyResult petersen_suite(std::uint64_t seed, int cases = 200);

std::vector<PropertyResult> all_property_suites(std::uint64_t seed);

}  // namespace mse::testing
