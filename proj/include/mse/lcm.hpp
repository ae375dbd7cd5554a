#pragma once
// Latent class models: mixtures in which lists sample independently given
// the class. Used to check identifiability, build non-identifiable pairs
// and generate tables for repeated-sampling studies.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mse/random.hpp"
#include "mse/table.hpp"

namespace mse {

struct LatentClassModel {
    std::vector<double> nu;              // J class weights
    std::vector<std::vector<double>> q;  // J rows of K capture probabilities

    int num_classes() const noexcept { return static_cast<int>(nu.size()); }
    int num_lists() const noexcept { return q.empty() ? 0 : static_cast<int>(q.front().size()); }
};

// Throws InvalidArgument unless sum(nu) = 1 within 1e-12, q in (0,1), J >= 1
// and 2 <= K <= kMaxLists.
void validate(const LatentClassModel& lcm);

LatentClassModel lcm_from_json(const nlohmann::json& j);
nlohmann::json lcm_to_json(const LatentClassModel& lcm);

struct LcmCellProbs {
    ObservedProbs observed;    // pi~ = pi / (1 - pi0)
    double pi0 = 0.0;
    std::vector<double> full;  // indexed by code, full[0] = pi0
};

LcmCellProbs cell_probs(const LatentClassModel& lcm);

// m[code - 1] = sum_j nu_j prod_{k in code} q_jk
std::vector<double> moment_vector(const LatentClassModel& lcm);

// C[h][h'] = (-1)^(|h'| - |h|) when h is a subset of h', else 0; rows and
// columns in code order 1 .. 2^K - 1. Nonzero cells satisfy pi = C m.
class CoefficientMatrix {
public:
    explicit CoefficientMatrix(int num_lists);

    std::size_t dim() const noexcept { return dim_; }
    int at(std::uint32_t row_code, std::uint32_t col_code) const;
    std::vector<double> apply(const std::vector<double>& v) const;

private:
    std::size_t dim_;
    std::vector<int> entries_;
};

// Size guard: 2 <= K <= 12, otherwise SizeGuard.
CoefficientMatrix coefficient_matrix(int num_lists);

struct IdentifiabilityVerdict {
    bool identifiable = false;
    std::string verdict;
    std::string note;
};

IdentifiabilityVerdict check_conditional_identifiability(int num_classes, int num_lists);

struct CounterexamplePair {
    LatentClassModel q_model;
    LatentClassModel r_model;
    double scale = 1.0;  // m_Q = scale * m_R
};

double default_counterexample_alpha(int num_classes);

// Requires K < 2J and 0 < alpha < 1/(2J); otherwise InvalidConstruction.
CounterexamplePair counterexample_pair(int num_classes, int num_lists, double alpha);

struct CounterexampleReport {
    double pi0_q = 0.0;
    double pi0_r = 0.0;
    double moment_gap = 0.0;     // max |m_Q - A m_R|
    double observed_gap = 0.0;   // max |pi~_Q - pi~_R|
    double scale_from_pi0 = 0.0; // (1 - pi0_Q) / (1 - pi0_R)
};

CounterexampleReport verify_counterexample(const CounterexamplePair& pair);
nlohmann::json to_json(const CounterexamplePair& pair, const CounterexampleReport& report);

struct SimulatedTable {
    std::vector<std::int64_t> counts;  // code order 1 .. 2^K - 1
    std::int64_t true_n0 = 0;
    std::int64_t observed_total() const;
};

// Multinomial draw of N individuals over all 2^K cells, by sequential
// binomial conditioning.
SimulatedTable simulate_counts(const LatentClassModel& lcm, std::int64_t population, Engine& rng);

// As simulate_counts, packaged as a table with lists named L1..LK. Throws
// Infeasible when nobody is observed.
std::pair<ObservedTable, std::int64_t> simulate_table(const LatentClassModel& lcm, std::int64_t population,
                                                      Engine& rng);

enum class StudyTarget { PopulationSize, UnobservedProb };

struct StudyInterval {
    double level = 0.95;
    double lo = 0.0;
    double hi = 0.0;
};

struct StudyEstimate {
    double point = 0.0;
    std::vector<StudyInterval> intervals;
};

// Estimator callback; the seed is a per-replicate value for estimators that
// draw random numbers themselves.
using StudyEstimator = std::function<StudyEstimate(const ObservedTable&, std::uint64_t seed)>;

struct StudyOptions {
    std::int64_t population = 10000;
    int reps = 200;
    std::vector<double> levels{0.95, 0.5};
    StudyTarget target = StudyTarget::PopulationSize;
    std::uint64_t seed = kDefaultSeed;
    unsigned threads = 1;
};

struct StudyRep {
    int rep = 0;
    double truth = 0.0;
    std::int64_t observed = 0;
    std::optional<StudyEstimate> estimate;
    std::string error;
};

struct StudyLevelSummary {
    double level = 0.95;
    double coverage = 0.0;
    double mean_width = 0.0;
};

struct StudySummary {
    int reps = 0;
    int failures = 0;
    double mean_point = 0.0;
    double mean_truth = 0.0;
    std::vector<StudyLevelSummary> levels;
};

struct StudyResult {
    std::vector<StudyRep> reps;
    StudySummary summary;
};

StudyResult simulation_study(const LatentClassModel& lcm, const StudyEstimator& estimator,
                             const StudyOptions& options);

// Column headers of the summary table, e.g. "95% CI Coverage".
std::vector<std::string> summary_headers(const std::vector<double>& levels);

void write_study_csv(std::ostream& out, const StudyResult& result, const std::vector<double>& levels);
void write_summary_csv(std::ostream& out, const StudySummary& summary);
nlohmann::json to_json(const StudySummary& summary, const StudyOptions& options);

}  // namespace mse
