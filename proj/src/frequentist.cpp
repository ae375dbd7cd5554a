#include "mse/frequentist.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "mse/errors.hpp"

namespace mse {

double z_quantile(double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "confidence level must lie in (0, 1)");
    }
    if (level == 0.95) return 1.96;
    const boost::math::normal_distribution<double> standard;
    return boost::math::quantile(standard, 0.5 + level / 2.0);
}

ObservedProbs conditional_mle(const ObservedTable& table, const IdentifyingAssumption& a) {
    auto probs = observed_proportions(table);
    const auto report = in_domain(a, probs);
    if (!report.in_domain) {
        throw Error(ErrorCode::MleMayNotExist,
                    "sample proportions lie outside the domain of " + a.describe(table.list_names()) +
                        " (margin " + std::to_string(report.margin) +
                        "); the conditional MLE may not exist, use the Bayesian estimator instead");
    }
    return probs;
}

HtEstimate ht_estimate(std::int64_t n, double pi0) {
    if (!(pi0 >= 0.0 && pi0 < 1.0)) {
        throw Error(ErrorCode::InvalidPi0, "pi0 must lie in [0, 1), got " + std::to_string(pi0));
    }
    const double value = static_cast<double>(n) / (1.0 - pi0);
    return {value, static_cast<std::int64_t>(std::floor(value))};
}

std::vector<double> odds_gradient_unconstrained(const IdentifyingAssumption& a,
                                                const ObservedProbs& probs) {
    const double g = unobserved_odds(a, probs);
    const auto& p = probs.values();
    std::vector<double> grad(p.size(), 0.0);
    if (a.kind == AssumptionKind::Nhoi) {
        // g = r / xi with log r = sum_odd log p - sum_even log p.
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double sign = odd_parity(static_cast<std::uint32_t>(i + 1)) ? 1.0 : -1.0;
            grad[i] = g * sign / p[i];
        }
        return grad;
    }
    // g = r+ / xi - p0+, r+ the odd/even ratio over marginal cells.
    const auto marginal = marginal_probs(probs, a.subset);
    const double r_over_xi = g + marginal.zero_margin;
    for (std::uint32_t code = 1; code <= p.size(); ++code) {
        const auto cell = InclusionPattern(code, probs.num_lists()).restrict_to(a.subset).code();
        if (cell == 0) {
            grad[code - 1] = -1.0;
        } else {
            const double sign = odd_parity(cell) ? 1.0 : -1.0;
            grad[code - 1] = r_over_xi * sign / marginal.probs[cell - 1];
        }
    }
    return grad;
}

std::vector<double> free_gradient(std::span<const double> unconstrained, std::size_t dropped) {
    if (dropped >= unconstrained.size()) throw Error(ErrorCode::InvalidArgument, "dropped cell out of range");
    std::vector<double> out;
    out.reserve(unconstrained.size() - 1);
    for (std::size_t i = 0; i < unconstrained.size(); ++i) {
        if (i != dropped) out.push_back(unconstrained[i] - unconstrained[dropped]);
    }
    return out;
}

double multinomial_quadratic_form(std::span<const double> free_grad, const ObservedProbs& probs,
                                  std::size_t dropped) {
    const auto& p = probs.values();
    if (free_grad.size() + 1 != p.size()) throw Error(ErrorCode::InvalidArgument, "gradient length mismatch");
    double weighted_sq = 0.0;
    double weighted = 0.0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i == dropped) continue;
        weighted_sq += p[i] * free_grad[j] * free_grad[j];
        weighted += p[i] * free_grad[j];
        ++j;
    }
    return std::max(0.0, weighted_sq - weighted * weighted);
}

Gradients grad_f_g(const IdentifyingAssumption& a, const ObservedProbs& probs) {
    const auto full = odds_gradient_unconstrained(a, probs);
    auto g = free_gradient(full, full.size() - 1);
    return {g, g};
}

PopEstimate assemble_estimate(std::int64_t n, double odds, double quad_form,
                              const IdentifyingAssumption& a, double level) {
    if (!(odds >= 0.0) || !(quad_form >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "odds and quadratic form must be >= 0");
    }
    PopEstimate est;
    est.assumption = a;
    est.level = level;
    est.z = z_quantile(level);
    est.n_observed = n;
    est.pi0_hat = odds / (1.0 + odds);
    const auto ht = ht_estimate(n, est.pi0_hat);
    est.n_hat = ht.value;
    est.n_hat_floor = ht.floor;

    const double dn = static_cast<double>(n);
    est.se_conditional = std::sqrt(dn * quad_form);
    est.se_unconditional = std::sqrt(est.n_hat * odds + dn * quad_form);

    auto make_interval = [&](double se) {
        Interval ci{est.n_hat - est.z * se, est.n_hat + est.z * se};
        ci.lo = std::max(ci.lo, dn);
        ci.hi = std::max(ci.hi, ci.lo);
        return ci;
    };
    est.ci_conditional = make_interval(est.se_conditional);
    est.ci_unconditional = make_interval(est.se_unconditional);
    return est;
}

PopEstimate estimate_from_probs(std::int64_t n, const ObservedProbs& probs,
                                const IdentifyingAssumption& a, double level) {
    const double g = unobserved_odds(a, probs);
    const std::size_t dropped = probs.size() - 1;
    const auto grad = free_gradient(odds_gradient_unconstrained(a, probs), dropped);
    return assemble_estimate(n, g, multinomial_quadratic_form(grad, probs, dropped), a, level);
}

PopEstimate estimate(const ObservedTable& table, const IdentifyingAssumption& a, double level) {
    const auto probs = conditional_mle(table, a);
    return estimate_from_probs(table.total(), probs, a, level);
}

std::vector<SweepEntry> sensitivity_sweep(const ObservedTable& table,
                                          const IdentifyingAssumption& family,
                                          std::span<const double> xis, double level) {
    std::vector<SweepEntry> out;
    out.reserve(xis.size());
    for (double xi : xis) {
        SweepEntry entry;
        entry.xi = xi;
        try {
            entry.result = estimate(table, family.with_xi(xi), level);
        } catch (const Error& e) {
            entry.note = e.what();
        }
        out.push_back(std::move(entry));
    }
    return out;
}

double invert_xi(const ObservedTable& table, const IdentifyingAssumption& family, double target_n,
                 double xi_lo, double xi_hi) {
    if (!(xi_lo > 0.0 && xi_hi > xi_lo)) {
        throw Error(ErrorCode::InvalidArgument, "xi bracket must satisfy 0 < lo < hi");
    }
    // The marginal family is only defined for xi < r+/p0+; pull the upper
    // end of the bracket inside that limit.
    const auto probs = observed_proportions(table);
    const auto upper = in_domain(family.with_xi(xi_hi), probs);
    if (!upper.in_domain && std::isfinite(upper.margin)) {
        const double limit = xi_hi + upper.margin;
        if (limit > xi_lo) xi_hi = limit * (1.0 - 1e-9);
    }
    auto n_of = [&](double xi) { return estimate(table, family.with_xi(xi)).n_hat; };
    double f_lo = n_of(xi_lo) - target_n;
    double f_hi = n_of(xi_hi) - target_n;
    if (std::abs(f_lo) < 0.5) return xi_lo;
    if (std::abs(f_hi) < 0.5) return xi_hi;
    if ((f_lo > 0.0) == (f_hi > 0.0)) {
        throw Error(ErrorCode::NotBracketed,
                    "target " + std::to_string(target_n) + " is not between N(" +
                        std::to_string(xi_lo) + ") and N(" + std::to_string(xi_hi) + ")");
    }
    double lo = xi_lo;
    double hi = xi_hi;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = n_of(mid) - target_n;
        if (std::abs(f_mid) < 0.5 || hi - lo < 1e-6) return mid;
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

EquivalenceCheck equivalence_check(const ObservedTable& table, std::span<const int> subset) {
    const auto marginal_assumption =
        IdentifyingAssumption::marginal_nhoi(std::vector<int>(subset.begin(), subset.end()), 1.0);
    const auto probs = observed_proportions(table);
    const auto report = in_domain(marginal_assumption, probs);
    if (!report.in_domain) {
        throw OutsideDomainError(report.margin, "sample proportions outside the marginal NHOI domain");
    }
    EquivalenceCheck out;
    out.n_hat_full =
        ht_estimate(table.total(), unobserved_prob(marginal_assumption, probs)).value;

    const auto view = marginalize(table, subset);
    const auto restricted = view.as_table(table.list_names());
    out.n_hat_restricted =
        ht_estimate(restricted.total(),
                    unobserved_prob(IdentifyingAssumption::nhoi(1.0), observed_proportions(restricted)))
            .value;
    return out;
}

nlohmann::json to_json(const PopEstimate& est, const std::vector<std::string>& list_names) {
    auto interval = [](const Interval& ci) { return nlohmann::json::array({ci.lo, ci.hi}); };
    return {
        {"assumption", assumption_to_json(est.assumption, list_names)},
        {"lambda", est.assumption.lambda(static_cast<int>(list_names.size()))},
        {"n_observed", est.n_observed},
        {"pi0_hat", est.pi0_hat},
        {"n_hat", est.n_hat},
        {"n_hat_floor", est.n_hat_floor},
        {"level", est.level},
        {"z", est.z},
        {"se_conditional", est.se_conditional},
        {"se_unconditional", est.se_unconditional},
        {"ci_conditional", interval(est.ci_conditional)},
        {"ci_unconditional", interval(est.ci_unconditional)},
        {"reported", format_point_interval(est)},
    };
}

std::string format_point_interval(const PopEstimate& est) {
    const auto& ci = est.reported_interval();
    std::ostringstream os;
    os << est.n_hat_floor << " [" << static_cast<std::int64_t>(std::floor(ci.lo)) << ", "
       << static_cast<std::int64_t>(std::floor(ci.hi)) << ']';
    return os.str();
}

}  // namespace mse
