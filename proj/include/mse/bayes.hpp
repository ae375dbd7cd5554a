#pragma once
// Bayesian population size estimation under an explicit identifying
// assumption.
//
// The pipeline takes draws of pi~ from the conditional "posterior"
// p_C(pi~ | n) (conjugate Dirichlet here, or imported from an external
// sampler run under the working prior p(N) ∝ 1/N), thins them with a
// rejection step whose acceptance ratio is p(n | T(pi~)) 1{pi~ in domain} /
// max p(n | pi0), and finally draws N | n, pi0 exactly from the closed-form
// conditional for the chosen N-prior.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mse/assumptions.hpp"
#include "mse/random.hpp"
#include "mse/table.hpp"

namespace mse {

// p(N) = M^N e^-M / N!
struct PoissonPrior {
    double mean = 0.0;
};

// Mean M, overdispersion a:
//   p(N) = C(N + a - 1, N) (M/(M+a))^N (a/(M+a))^a,
// i.e. the Poisson(M delta), delta ~ Gamma(a, a) mixture.
struct NegBinomialPrior {
    double mean = 0.0;
    double dispersion = 0.0;
};

// p(N) = C(M, N) q^N (1 - q)^(M - N)
struct BinomialPrior {
    std::int64_t size = 0;
    double prob = 0.0;
};

// p(N) ∝ (N - ell)! / N!; ell = 0 is the improper uniform prior and ell = 1
// the improper scale prior p(N) ∝ 1/N.
struct FienbergPrior {
    int ell = 1;
};

// Arbitrary prior truncated to {0, ..., N_max}; weights[N] ∝ p(N).
// Evidence and posterior draws are computed by direct summation.
struct TruncatedPrior {
    std::vector<double> weights;
    std::string label = "truncated";
};

using NPrior = std::variant<PoissonPrior, NegBinomialPrior, BinomialPrior, FienbergPrior, TruncatedPrior>;

void validate(const NPrior& prior);

// Beta-binomial(N_max, alpha, beta) expressed as a truncated prior.
TruncatedPrior beta_binomial_prior(std::int64_t n_max, double alpha, double beta);

// "poisson:M", "nb:M,a", "binomial:M,q", "fienberg:ell", "scale", "uniform",
// "betabinomial:Nmax,alpha,beta".
NPrior parse_prior(const std::string& text);
nlohmann::json prior_to_json(const NPrior& prior);
std::string prior_name(const NPrior& prior);

// log p(n | pi0). Improper Fienberg priors are reported up to the constant
// implied by p(N) = (N - ell)!/N!.
double log_evidence(const NPrior& prior, double pi0, std::int64_t n);
double evidence(const NPrior& prior, double pi0, std::int64_t n);

// log sup_{pi0 in (0,1)} p(n | pi0), including the 1 + 1e-9 safety factor
// for the numerically maximized families.
double log_evidence_max(const NPrior& prior, std::int64_t n);
double evidence_max(const NPrior& prior, std::int64_t n);

// One exact draw from p(N | n, pi0).
std::int64_t draw_population(const NPrior& prior, std::int64_t n, double pi0, Engine& rng);

// Smallest N with prior CDF >= p (proper priors only).
std::int64_t prior_quantile(const NPrior& prior, double p);

struct SamplerOptions {
    std::uint64_t seed = kDefaultSeed;
    unsigned threads = 1;
};

// Independent draws from Dirichlet(alpha + n); alpha empty means flat (all 1).
std::vector<ObservedProbs> dirichlet_cond_posterior(const ObservedTable& table,
                                                    std::span<const double> alpha, std::size_t draws,
                                                    const SamplerOptions& options = {});

enum class DrawFormat {
    ObservedProbs,  // columns p_1 ... p_(2^K-1)
    FullProbs,      // additionally p_0 (the unobserved cell)
};

// Header: canonical cell codes in binary, `p_0001,...` (list 1 rightmost),
// with `p_0000` present in FullProbs mode. Rows must sum to 1 within 1e-6.
std::vector<ObservedProbs> import_working_draws(std::istream& in, DrawFormat format, int num_lists);
void export_working_draws(std::ostream& out, std::span<const ObservedProbs> draws);
std::string cell_column_name(std::uint32_t code, int num_lists);

struct RejectionResult {
    std::vector<ObservedProbs> accepted;
    std::vector<double> pi0;  // T(pi~) of each accepted draw
    std::size_t proposed = 0;
    std::size_t in_domain = 0;
    double acceptance_rate = 0.0;
    bool low_acceptance = false;  // rate < 1e-4
};

RejectionResult rejection_filter(std::span<const ObservedProbs> draws, const IdentifyingAssumption& a,
                                 const NPrior& prior, std::int64_t n,
                                 const SamplerOptions& options = {});

struct PosteriorDraws {
    std::vector<std::int64_t> n_draws;
    std::vector<double> pi0_draws;
    double acceptance_rate = 1.0;
    std::uint64_t seed = kDefaultSeed;

    std::size_t size() const noexcept { return n_draws.size(); }
};

PosteriorDraws posterior_population(std::span<const ObservedProbs> accepted,
                                    const IdentifyingAssumption& a, const NPrior& prior,
                                    std::int64_t n, const SamplerOptions& options = {});

struct LevelInterval {
    double level = 0.95;
    double lo = 0.0;
    double hi = 0.0;
};

struct PosteriorSummary {
    double mean = 0.0;
    double median = 0.0;
    std::vector<LevelInterval> intervals;
    std::size_t draws = 0;
};

// Linear interpolation between order statistics (sample position q (T - 1)).
double interpolated_quantile(std::span<const double> sorted, double q);

PosteriorSummary summarize(std::span<const double> values, std::span<const double> levels);
PosteriorSummary summarize(const PosteriorDraws& draws, std::span<const double> levels);

struct BayesRun {
    PosteriorDraws posterior;
    PosteriorSummary summary;
    std::size_t proposed = 0;
    std::size_t accepted = 0;
    bool low_acceptance = false;
};

// Rejection + posterior draws + summary for an existing set of pi~ draws.
BayesRun run_bayes(std::span<const ObservedProbs> working_draws, const IdentifyingAssumption& a,
                   const NPrior& prior, std::int64_t n, std::span<const double> levels,
                   const SamplerOptions& options = {});

// Flat (or symmetric alpha) Dirichlet working draws followed by run_bayes.
BayesRun run_bayes_dirichlet(const ObservedTable& table, const IdentifyingAssumption& a, const NPrior& prior,
                             std::size_t draws, std::span<const double> levels,
                             const SamplerOptions& options = {}, double alpha = 1.0);

// Equal-width histogram of the N draws: rows bin_lo, bin_hi, count.
void write_histogram_csv(std::ostream& out, const PosteriorDraws& draws, int bins = 50);

void write_posterior_csv(std::ostream& out, const PosteriorDraws& draws);
nlohmann::json to_json(const BayesRun& run);

}  // namespace mse
