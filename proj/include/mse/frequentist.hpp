#pragma once
// Conditional maximum likelihood + Horvitz-Thompson population size
// estimation with delta-method intervals.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mse/assumptions.hpp"
#include "mse/table.hpp"

namespace mse {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct PopEstimate {
    double n_hat = 0.0;           // n / (1 - pi0)
    std::int64_t n_hat_floor = 0;
    std::int64_t n_observed = 0;
    double se_conditional = 0.0;  // sqrt(n grad_f' Sigma grad_f)
    double se_unconditional = 0.0;  // sqrt(N g + n grad_g' Sigma grad_g)
    Interval ci_conditional;
    Interval ci_unconditional;    // default reported interval
    double level = 0.95;
    double z = 1.96;
    double pi0_hat = 0.0;
    IdentifyingAssumption assumption;

    const Interval& reported_interval() const noexcept { return ci_unconditional; }
};

// z such that P(|Z| <= z) = level. Exactly 1.96 at level 0.95 so that
// printed tables reproduce to the integer.
double z_quantile(double level);

// Sample proportions when they lie in the assumption's domain.
ObservedProbs conditional_mle(const ObservedTable& table, const IdentifyingAssumption& a);

struct HtEstimate {
    double value = 0.0;
    std::int64_t floor = 0;
};

HtEstimate ht_estimate(std::int64_t n, double pi0);

// Gradient of g = T/(1 - T) with respect to every nonzero cell, treating the
// cells as unconstrained (no simplex elimination yet).
std::vector<double> odds_gradient_unconstrained(const IdentifyingAssumption& a,
                                                const ObservedProbs& probs);

// Projects an unconstrained gradient onto the free coordinates obtained by
// eliminating cell slot `dropped` (p_dropped = 1 - sum of the others).
std::vector<double> free_gradient(std::span<const double> unconstrained, std::size_t dropped);

// grad' Sigma grad with Sigma = diag(p) - p p' over the free coordinates.
double multinomial_quadratic_form(std::span<const double> free_grad, const ObservedProbs& probs,
                                  std::size_t dropped);

struct Gradients {
    std::vector<double> f;
    std::vector<double> g;
};

// Analytic gradients of f = 1/(1 - T) and g = T/(1 - T) over the 2^K - 2 free
// coordinates, eliminating the highest-code cell. f = 1 + g, so they agree.
Gradients grad_f_g(const IdentifyingAssumption& a, const ObservedProbs& probs);

PopEstimate estimate(const ObservedTable& table, const IdentifyingAssumption& a,
                     double level = 0.95);

// Builds the estimate from the odds g = pi0/(1 - pi0) and the quadratic form
// grad_g' Sigma grad_g. g = 0 gives the degenerate interval [n, n].
PopEstimate assemble_estimate(std::int64_t n, double odds, double quad_form,
                              const IdentifyingAssumption& a, double level = 0.95);

// Same computation starting from given proportions (e.g. with a pseudo-count).
PopEstimate estimate_from_probs(std::int64_t n, const ObservedProbs& probs,
                                const IdentifyingAssumption& a, double level = 0.95);

struct SweepEntry {
    double xi = 1.0;
    std::optional<PopEstimate> result;
    std::string note;  // set when result is empty
};

// One estimate per xi; domain failures are recorded per entry.
std::vector<SweepEntry> sensitivity_sweep(const ObservedTable& table,
                                          const IdentifyingAssumption& family,
                                          std::span<const double> xis, double level = 0.95);

// Bisection on xi so that N(xi) hits target_n.
double invert_xi(const ObservedTable& table, const IdentifyingAssumption& family, double target_n,
                 double xi_lo, double xi_hi);

struct EquivalenceCheck {
    double n_hat_full = 0.0;        // K lists, marginal NHOI(subset, 1)
    double n_hat_restricted = 0.0;  // subset-only table, NHOI(1)
};

EquivalenceCheck equivalence_check(const ObservedTable& table, std::span<const int> subset);

nlohmann::json to_json(const PopEstimate& est, const std::vector<std::string>& list_names);

// "9691 [8074, 11308]"
std::string format_point_interval(const PopEstimate& est);

}  // namespace mse
