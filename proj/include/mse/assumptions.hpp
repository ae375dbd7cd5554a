#pragma once
// Identifying assumptions: explicit maps from the observed cell probabilities
// pi~ to the unobserved cell probability pi0.
//
//   NHOI(xi):            pi0 = r / (xi + r),  r = Pi_odd / Pi_even over all
//                        nonzero cells.
//   MarginalNHOI(S, xi): pi0 = (r+ - xi p0+) / (xi + r+ - xi p0+), with r+ the
//                        odd/even product ratio of the marginal table of the
//                        lists in S and p0+ the observed mass absent from S.
//
// xi = 1 recovers the no-highest-order-interaction assumption (or marginal
// independence for |S| = 2). NHOI places no restriction on pi~; the marginal
// family requires r+ / p0+ > xi.

#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mse/table.hpp"

namespace mse {

enum class AssumptionKind { Nhoi, MarginalNhoi };

struct IdentifyingAssumption {
    AssumptionKind kind = AssumptionKind::Nhoi;
    double xi = 1.0;
    std::vector<int> subset;  // sorted list indices, MarginalNhoi only

    static IdentifyingAssumption nhoi(double xi = 1.0);
    static IdentifyingAssumption marginal_nhoi(std::vector<int> subset, double xi = 1.0);

    IdentifyingAssumption with_xi(double new_xi) const;

    // Highest-order log-linear interaction implied by xi for K lists:
    // xi = exp{(-1)^(K+1) lambda}.
    double lambda(int num_lists) const;

    std::string describe(const std::vector<std::string>& list_names) const;
};

struct DomainReport {
    bool in_domain = true;
    double margin = std::numeric_limits<double>::infinity();
};

// Checks xi > 0 and (for the marginal family) that the subset fits K lists.
void validate(const IdentifyingAssumption& a, int num_lists);

DomainReport in_domain(const IdentifyingAssumption& a, const ObservedProbs& probs);

double unobserved_prob(const IdentifyingAssumption& a, const ObservedProbs& probs);

// Inverse diagnostic: the xi that the complete distribution (pi~, pi0)
// actually has under the given family. xi in `family` is ignored.
double implied_xi(const ObservedProbs& probs, double pi0, const IdentifyingAssumption& family);

// Odds form g = pi0 / (1 - pi0), computed without forming pi0 first.
double unobserved_odds(const IdentifyingAssumption& a, const ObservedProbs& probs);

// {"kind":"nhoi","xi":1.0} or {"kind":"marginal_nhoi","subset":["ABA","HRW"],"xi":0.8}
IdentifyingAssumption assumption_from_json(const nlohmann::json& doc,
                                           const std::vector<std::string>& list_names);
nlohmann::json assumption_to_json(const IdentifyingAssumption& a,
                                  const std::vector<std::string>& list_names);

// Compact CLI form: "nhoi", "nhoi:0.5", "marginal_nhoi:ABA,HRW",
// "marginal_nhoi:ABA,HRW:0.8".
IdentifyingAssumption parse_assumption(const std::string& text,
                                       const std::vector<std::string>& list_names);

}  // namespace mse
