#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mse/assumptions.hpp"
#include "mse/bayes.hpp"
#include "mse/frequentist.hpp"
#include "mse/lcm.hpp"

namespace mse::testing {

namespace {

int uniform_int(Engine& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

double uniform_real(Engine& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::vector<int> random_subset(Engine& rng, int num_lists) {
    std::vector<int> all(static_cast<std::size_t>(num_lists));
    for (int k = 0; k < num_lists; ++k) all[static_cast<std::size_t>(k)] = k;
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(static_cast<std::size_t>(uniform_int(rng, 2, num_lists - 1)));
    std::sort(all.begin(), all.end());
    return all;
}

// Largest xi for which the marginal assumption is defined at these probs.
double marginal_xi_limit(const std::vector<int>& subset, const ObservedProbs& probs) {
    const auto report = in_domain(IdentifyingAssumption::marginal_nhoi(subset, 1.0), probs);
    return 1.0 + report.margin;
}

void record(PropertyResult& r, double error, bool failed) {
    ++r.cases;
    r.worst = std::max(r.worst, error);
    if (failed) ++r.failures;
}

}  // namespace

ObservedTable random_table(Engine& rng, int num_lists, std::int64_t lo, std::int64_t hi) {
    std::uniform_int_distribution<std::int64_t> count(lo, hi);
    std::vector<std::int64_t> counts(num_observed_cells(num_lists));
    for (auto& c : counts) c = count(rng);
    if (std::all_of(counts.begin(), counts.end(), [](auto c) { return c == 0; })) counts.back() = 1;
    std::vector<std::string> names;
    for (int k = 1; k <= num_lists; ++k) names.push_back("L" + std::to_string(k));
    return ObservedTable(std::move(names), std::move(counts));
}

ObservedProbs random_probs(Engine& rng, int num_lists, double floor) {
    std::vector<double> p(num_observed_cells(num_lists));
    double total = 0.0;
    for (auto& v : p) {
        v = floor + uniform_real(rng, 0.0, 1.0);
        total += v;
    }
    for (auto& v : p) v /= total;
    return ObservedProbs(num_lists, std::move(p));
}

PropertyResult equivalence_suite(std::uint64_t seed, int cases) {
    PropertyResult r{"marginal NHOI equals NHOI on the restricted table", 0, 0, 0.0, 1e-9, ""};
    auto rng = substream(seed, Stream::Simulation, 101);
    int attempts = 0;
    while (r.cases < cases && attempts < 50 * cases) {
        ++attempts;
        const int k = uniform_int(rng, 3, 5);
        const auto table = random_table(rng, k, 5, 500);
        const auto subset = random_subset(rng, k);
        const auto probs = observed_proportions(table);
        if (!in_domain(IdentifyingAssumption::marginal_nhoi(subset, 1.0), probs).in_domain) continue;
        const auto check = equivalence_check(table, subset);
        const double rel = std::abs(check.n_hat_full - check.n_hat_restricted) / check.n_hat_restricted;
        record(r, rel, !(rel < r.tolerance));
    }
    return r;
}

PropertyResult gradient_suite(std::uint64_t seed, int cases_per_family) {
    PropertyResult r{"analytic odds gradient matches central finite differences", 0, 0, 0.0, 1e-5, ""};
    auto rng = substream(seed, Stream::Simulation, 102);
    for (int family = 0; family < 2; ++family) {
        for (int c = 0; c < cases_per_family; ++c) {
            const int k = uniform_int(rng, 2 + family, 5);
            const auto probs = random_probs(rng, k);
            IdentifyingAssumption a = IdentifyingAssumption::nhoi(uniform_real(rng, 0.3, 3.0));
            if (family == 1) {
                const auto subset = random_subset(rng, k);
                a = IdentifyingAssumption::marginal_nhoi(
                    subset, marginal_xi_limit(subset, probs) * uniform_real(rng, 0.2, 0.8));
            }
            const std::size_t dropped = probs.size() - 1;
            const auto analytic = grad_f_g(a, probs).g;

            double max_abs = 0.0;
            double max_diff = 0.0;
            std::size_t j = 0;
            for (std::size_t i = 0; i < probs.size(); ++i) {
                if (i == dropped) continue;
                const double h = 1e-5 * std::min(probs.values()[i], probs.values()[dropped]);
                auto shifted = [&](double step) {
                    auto v = probs.values();
                    v[i] += step;
                    v[dropped] -= step;
                    return unobserved_odds(a, ObservedProbs(k, v));
                };
                const double fd = (shifted(h) - shifted(-h)) / (2.0 * h);
                max_abs = std::max(max_abs, std::abs(analytic[j]));
                max_diff = std::max(max_diff, std::abs(analytic[j] - fd));
                ++j;
            }
            const double rel = max_diff / std::max(max_abs, 1e-300);
            record(r, rel, !(rel < r.tolerance));
        }
    }
    return r;
}

PropertyResult reconstruction_suite(std::uint64_t seed, int cases) {
    PropertyResult r{"C m reproduces the mixture cell probabilities", 0, 0, 0.0, 1e-12, ""};
    auto rng = substream(seed, Stream::Simulation, 103);
    for (int c = 0; c < cases; ++c) {
        const int j_classes = uniform_int(rng, 1, 5);
        const int k = uniform_int(rng, 2, 5);
        LatentClassModel lcm;
        double total = 0.0;
        for (int j = 0; j < j_classes; ++j) {
            lcm.nu.push_back(uniform_real(rng, 0.05, 1.0));
            total += lcm.nu.back();
            std::vector<double> row;
            for (int list = 0; list < k; ++list) row.push_back(uniform_real(rng, 0.01, 0.99));
            lcm.q.push_back(row);
        }
        for (auto& w : lcm.nu) w /= total;

        // Direct mixture sum, written out independently of cell_probs.
        std::vector<double> direct(num_observed_cells(k), 0.0);
        for (std::uint32_t code = 1; code <= direct.size(); ++code) {
            for (int j = 0; j < j_classes; ++j) {
                double p = lcm.nu[static_cast<std::size_t>(j)];
                for (int list = 0; list < k; ++list) {
                    const double q = lcm.q[static_cast<std::size_t>(j)][static_cast<std::size_t>(list)];
                    p *= (code & (1U << list)) ? q : 1.0 - q;
                }
                direct[code - 1] += p;
            }
        }
        const auto reconstructed = coefficient_matrix(k).apply(moment_vector(lcm));
        double worst = 0.0;
        for (std::size_t i = 0; i < direct.size(); ++i) {
            worst = std::max(worst, std::abs(reconstructed[i] - direct[i]));
        }
        record(r, worst, !(worst < r.tolerance));
    }
    return r;
}

PropertyResult conjugacy_suite(std::uint64_t seed, int cases) {
    PropertyResult r{"Dirichlet sampler means match the conjugate posterior", 0, 0, 0.0, 4.0, ""};
    auto rng = substream(seed, Stream::Simulation, 104);
    constexpr std::size_t kDraws = 20000;
    for (int c = 0; c < cases; ++c) {
        const int k = uniform_int(rng, 2, 4);
        const auto table = random_table(rng, k, 0, 40);
        std::vector<double> alpha(table.counts().size());
        for (auto& a : alpha) a = uniform_real(rng, 0.2, 3.0);
        const auto draws = dirichlet_cond_posterior(table, alpha, kDraws, {seed + static_cast<std::uint64_t>(c), 1});
        double a0 = 0.0;
        for (std::size_t i = 0; i < alpha.size(); ++i) a0 += alpha[i] + static_cast<double>(table.counts()[i]);
        double worst = 0.0;
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            const double ai = alpha[i] + static_cast<double>(table.counts()[i]);
            const double mean = ai / a0;
            const double sd = std::sqrt(ai * (a0 - ai) / (a0 * a0 * (a0 + 1.0)));
            double sum = 0.0;
            for (const auto& d : draws) sum += d.values()[i];
            const double z = std::abs(sum / kDraws - mean) / (sd / std::sqrt(static_cast<double>(kDraws)));
            worst = std::max(worst, z);
        }
        record(r, worst, !(worst < r.tolerance));
    }
    return r;
}

PropertyResult ht_mean_suite(std::uint64_t seed, int cases) {
    PropertyResult r{"scale-prior posterior mean of N is the Horvitz-Thompson estimate", 0, 0, 0.0, 3.0, ""};
    auto rng = substream(seed, Stream::Simulation, 105);
    constexpr int kDraws = 20000;
    const NPrior scale = FienbergPrior{1};
    for (int c = 0; c < cases; ++c) {
        const std::int64_t n = uniform_int(rng, 10, 5000);
        const double pi0 = uniform_real(rng, 0.05, 0.9);
        auto draw_rng = substream(seed, Stream::PopulationDraw, 1000 + static_cast<std::uint64_t>(c));
        double sum = 0.0;
        for (int t = 0; t < kDraws; ++t) sum += static_cast<double>(draw_population(scale, n, pi0, draw_rng));
        const double expected = static_cast<double>(n) / (1.0 - pi0);
        // N - n is negative binomial with n successes: variance n pi0 / (1 - pi0)^2.
        const double sd = std::sqrt(static_cast<double>(n) * pi0) / (1.0 - pi0);
        const double z = std::abs(sum / kDraws - expected) / (sd / std::sqrt(static_cast<double>(kDraws)));
        record(r, z, !(z < r.tolerance));
    }
    return r;
}

PropertyResult monotonicity_suite(std::uint64_t seed, int cases) {
    PropertyResult r{"point estimates strictly decrease in xi (both families)", 0, 0, 0.0, 0.0, ""};
    auto rng = substream(seed, Stream::Simulation, 106);
    int attempts = 0;
    while (r.cases < cases && attempts < 50 * cases) {
        ++attempts;
        const int k = uniform_int(rng, 3, 5);
        const auto table = random_table(rng, k, 5, 500);
        const auto probs = observed_proportions(table);
        const bool marginal = r.cases % 2 == 1;
        IdentifyingAssumption family = IdentifyingAssumption::nhoi();
        double hi = 4.0;
        if (marginal) {
            const auto subset = random_subset(rng, k);
            family = IdentifyingAssumption::marginal_nhoi(subset, 1.0);
            hi = 0.95 * marginal_xi_limit(subset, probs);
        }
        const double lo = 0.25 * std::min(1.0, hi);
        if (!(hi > lo)) continue;
        double previous = std::numeric_limits<double>::infinity();
        bool ok = true;
        for (int step = 0; step < 8; ++step) {
            const double xi = lo + (hi - lo) * step / 7.0;
            const double n_hat = estimate(table, family.with_xi(xi)).n_hat;
            if (!(n_hat < previous)) ok = false;
            previous = n_hat;
        }
        record(r, ok ? 0.0 : 1.0, !ok);
    }
    return r;
}

PropertyResult petersen_suite(std::uint64_t seed, int cases) {
    PropertyResult r{"two-list NHOI equals the Petersen estimator", 0, 0, 0.0, 1e-9, ""};
    auto rng = substream(seed, Stream::Simulation, 107);
    for (int c = 0; c < cases; ++c) {
        const auto table = random_table(rng, 2, 1, 1000);
        const double n10 = static_cast<double>(table.count(1));
        const double n01 = static_cast<double>(table.count(2));
        const double n11 = static_cast<double>(table.count(3));
        const double petersen = (n10 + n11) * (n01 + n11) / n11;
        const double n_hat = estimate(table, IdentifyingAssumption::nhoi()).n_hat;
        const double rel = std::abs(n_hat - petersen) / petersen;
        record(r, rel, !(rel < r.tolerance));
    }
    return r;
}

std::vector<PropertyResult> all_property_suites(std::uint64_t seed) {
    return {equivalence_suite(seed), gradient_suite(seed),     reconstruction_suite(seed), conjugacy_suite(seed),
            ht_mean_suite(seed),     monotonicity_suite(seed), petersen_suite(seed)};
}

}  // namespace mse::testing
