#include "mse/lcm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>
#include <sstream>

#include "mse/errors.hpp"

namespace mse {

namespace {

double binomial_coefficient(int n, int k) {
    return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
}

// Order-independent enough for our purposes: Neumaier compensated sum.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

std::string percent_label(double level) {
    std::ostringstream os;
    os << level * 100.0;
    return os.str() + "%";
}

}  // namespace

void validate(const LatentClassModel& lcm) {
    if (lcm.nu.empty()) throw Error(ErrorCode::InvalidArgument, "a latent class model needs J >= 1");
    if (lcm.q.size() != lcm.nu.size()) {
        throw Error(ErrorCode::InvalidArgument, "q must have one row per class");
    }
    const int k = lcm.num_lists();
    if (k < 2 || k > kMaxLists) throw Error(ErrorCode::InvalidArgument, "K must lie in [2, 20]");
    double total = 0.0;
    for (double w : lcm.nu) {
        if (!(w >= 0.0)) throw Error(ErrorCode::InvalidArgument, "class weights must be >= 0");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw Error(ErrorCode::InvalidArgument, "class weights sum to " + std::to_string(total));
    }
    for (const auto& row : lcm.q) {
        if (static_cast<int>(row.size()) != k) throw Error(ErrorCode::InvalidArgument, "ragged q matrix");
        for (double v : row) {
            if (!(v > 0.0 && v < 1.0)) throw Error(ErrorCode::InvalidArgument, "q entries must lie in (0, 1)");
        }
    }
}

LatentClassModel lcm_from_json(const nlohmann::json& j) {
    LatentClassModel lcm;
    try {
        lcm.nu = j.at("nu").get<std::vector<double>>();
        lcm.q = j.at("q").get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("invalid model spec: ") + e.what());
    }
    validate(lcm);
    return lcm;
}

nlohmann::json lcm_to_json(const LatentClassModel& lcm) { return {{"nu", lcm.nu}, {"q", lcm.q}}; }

LcmCellProbs cell_probs(const LatentClassModel& lcm) {
    validate(lcm);
    const int k = lcm.num_lists();
    const std::size_t cells = std::size_t{1} << k;
    std::vector<double> full(cells, 0.0);
    for (std::size_t j = 0; j < lcm.nu.size(); ++j) {
        for (std::uint32_t code = 0; code < cells; ++code) {
            double p = lcm.nu[j];
            for (int list = 0; list < k; ++list) {
                const double qk = lcm.q[j][static_cast<std::size_t>(list)];
                p *= ((code >> list) & 1U) ? qk : 1.0 - qk;
            }
            full[code] += p;
        }
    }
    const double pi0 = full[0];
    double observed_mass = 0.0;
    for (std::size_t c = 1; c < cells; ++c) observed_mass += full[c];
    std::vector<double> observed(full.begin() + 1, full.end());
    for (auto& p : observed) p /= observed_mass;
    return {ObservedProbs(k, std::move(observed)), pi0, std::move(full)};
}

std::vector<double> moment_vector(const LatentClassModel& lcm) {
    validate(lcm);
    const int k = lcm.num_lists();
    std::vector<double> m(num_observed_cells(k), 0.0);
    for (std::uint32_t code = 1; code <= m.size(); ++code) {
        for (std::size_t j = 0; j < lcm.nu.size(); ++j) {
            double prod = lcm.nu[j];
            for (int list = 0; list < k; ++list) {
                if ((code >> list) & 1U) prod *= lcm.q[j][static_cast<std::size_t>(list)];
            }
            m[code - 1] += prod;
        }
    }
    return m;
}

CoefficientMatrix::CoefficientMatrix(int num_lists)
    : dim_(num_observed_cells(num_lists)), entries_(dim_ * dim_, 0) {
    for (std::uint32_t row = 1; row <= dim_; ++row) {
        for (std::uint32_t col = 1; col <= dim_; ++col) {
            if ((row & col) != row) continue;
            const int diff = std::popcount(col) - std::popcount(row);
            entries_[(row - 1) * dim_ + (col - 1)] = diff % 2 == 0 ? 1 : -1;
        }
    }
}

int CoefficientMatrix::at(std::uint32_t row_code, std::uint32_t col_code) const {
    if (row_code < 1 || col_code < 1 || row_code > dim_ || col_code > dim_) {
        throw Error(ErrorCode::InvalidArgument, "cell code out of range");
    }
    return entries_[(row_code - 1) * dim_ + (col_code - 1)];
}

std::vector<double> CoefficientMatrix::apply(const std::vector<double>& v) const {
    if (v.size() != dim_) throw Error(ErrorCode::InvalidArgument, "vector length mismatch");
    std::vector<double> out(dim_, 0.0);
    for (std::size_t r = 0; r < dim_; ++r) {
        CompensatedSum s;
        for (std::size_t c = 0; c < dim_; ++c) {
            const int e = entries_[r * dim_ + c];
            if (e != 0) s.add(e * v[c]);
        }
        out[r] = s.value();
    }
    return out;
}

CoefficientMatrix coefficient_matrix(int num_lists) {
    if (num_lists < 2 || num_lists > 12) {
        throw Error(ErrorCode::SizeGuard, "coefficient matrix is limited to 2 <= K <= 12");
    }
    return CoefficientMatrix(num_lists);
}

IdentifiabilityVerdict check_conditional_identifiability(int num_classes, int num_lists) {
    if (num_classes < 1 || num_lists < 2) {
        throw Error(ErrorCode::InvalidArgument, "need J >= 1 and K >= 2");
    }
    IdentifiabilityVerdict v;
    v.identifiable = 2 * num_classes <= num_lists;
    v.verdict = v.identifiable ? "conditionally identifiable (2J <= K)"
                               : "not conditionally identifiable (2J > K)";
    // 2^K - 2 free observed-cell parameters versus J(K+1) - 1 model parameters.
    const double free_cells = std::ldexp(1.0, num_lists) - 2.0;
    const double params = static_cast<double>(num_classes) * (num_lists + 1) - 1.0;
    if (params > free_cells) {
        std::ostringstream os;
        os << "parameter count J(K+1) - 1 = " << params << " also exceeds 2^K - 2 = " << free_cells;
        v.note = os.str();
    }
    return v;
}

double default_counterexample_alpha(int num_classes) { return 0.99 / (2.0 * num_classes); }

CounterexamplePair counterexample_pair(int num_classes, int num_lists, double alpha) {
    const int j_max = num_classes;
    if (j_max < 1 || num_lists < 2) {
        throw Error(ErrorCode::InvalidConstruction, "need J >= 1 and K >= 2");
    }
    if (num_lists >= 2 * j_max) {
        throw Error(ErrorCode::InvalidConstruction, "the construction needs K < 2J");
    }
    if (!(alpha > 0.0 && alpha < 1.0 / (2.0 * j_max))) {
        throw Error(ErrorCode::InvalidConstruction, "alpha must lie in (0, 1/(2J))");
    }
    const double half = std::ldexp(1.0, 2 * j_max - 1);
    CounterexamplePair pair;
    pair.scale = half / (half - 1.0);
    for (int j = 1; j <= j_max; ++j) {
        pair.q_model.nu.push_back(binomial_coefficient(2 * j_max, 2 * j) / (half - 1.0));
        pair.q_model.q.emplace_back(static_cast<std::size_t>(num_lists), 2.0 * j * alpha);
        pair.r_model.nu.push_back(binomial_coefficient(2 * j_max, 2 * j - 1) / half);
        pair.r_model.q.emplace_back(static_cast<std::size_t>(num_lists), (2.0 * j - 1.0) * alpha);
    }
    validate(pair.q_model);
    validate(pair.r_model);
    return pair;
}

CounterexampleReport verify_counterexample(const CounterexamplePair& pair) {
    CounterexampleReport report;
    const auto cq = cell_probs(pair.q_model);
    const auto cr = cell_probs(pair.r_model);
    report.pi0_q = cq.pi0;
    report.pi0_r = cr.pi0;
    const auto mq = moment_vector(pair.q_model);
    const auto mr = moment_vector(pair.r_model);
    for (std::size_t i = 0; i < mq.size(); ++i) {
        report.moment_gap = std::max(report.moment_gap, std::abs(mq[i] - pair.scale * mr[i]));
        report.observed_gap =
            std::max(report.observed_gap, std::abs(cq.observed.values()[i] - cr.observed.values()[i]));
    }
    report.scale_from_pi0 = (1.0 - cq.pi0) / (1.0 - cr.pi0);
    return report;
}

nlohmann::json to_json(const CounterexamplePair& pair, const CounterexampleReport& report) {
    return {
        {"Q", lcm_to_json(pair.q_model)},
        {"R", lcm_to_json(pair.r_model)},
        {"A", pair.scale},
        {"verification",
         {{"pi0_Q", report.pi0_q},
          {"pi0_R", report.pi0_r},
          {"max_moment_gap", report.moment_gap},
          {"max_observed_prob_gap", report.observed_gap},
          {"A_from_pi0", report.scale_from_pi0}}},
    };
}

std::int64_t SimulatedTable::observed_total() const {
    std::int64_t n = 0;
    for (auto c : counts) n += c;
    return n;
}

SimulatedTable simulate_counts(const LatentClassModel& lcm, std::int64_t population, Engine& rng) {
    if (population < 1) throw Error(ErrorCode::InvalidArgument, "population size must be >= 1");
    const auto probs = cell_probs(lcm);
    const auto& full = probs.full;
    std::int64_t remaining = population;
    double mass_left = 1.0;
    std::vector<std::int64_t> draws(full.size(), 0);
    for (std::size_t c = 0; c < full.size(); ++c) {
        if (remaining == 0) break;
        if (c + 1 == full.size()) {
            draws[c] = remaining;
            break;
        }
        const double p = mass_left > 0.0 ? std::clamp(full[c] / mass_left, 0.0, 1.0) : 1.0;
        draws[c] = draw_binomial(rng, remaining, p);
        remaining -= draws[c];
        mass_left -= full[c];
    }
    SimulatedTable out;
    out.true_n0 = draws[0];
    out.counts.assign(draws.begin() + 1, draws.end());
    return out;
}

std::pair<ObservedTable, std::int64_t> simulate_table(const LatentClassModel& lcm, std::int64_t population,
                                                      Engine& rng) {
    auto sim = simulate_counts(lcm, population, rng);
    if (sim.observed_total() == 0) throw Error(ErrorCode::Infeasible, "no individual was observed");
    std::vector<std::string> names;
    for (int k = 1; k <= lcm.num_lists(); ++k) names.push_back("L" + std::to_string(k));
    return {ObservedTable(std::move(names), std::move(sim.counts)), sim.true_n0};
}

StudyResult simulation_study(const LatentClassModel& lcm, const StudyEstimator& estimator,
                             const StudyOptions& options) {
    if (options.reps < 1) throw Error(ErrorCode::InvalidArgument, "reps must be >= 1");
    if (options.population < 1) throw Error(ErrorCode::InvalidArgument, "population size must be >= 1");
    validate(lcm);
    const double pi0 = cell_probs(lcm).pi0;

    StudyResult result;
    result.reps.resize(static_cast<std::size_t>(options.reps));
    parallel_chunks(result.reps.size(), 1, options.threads, [&](std::size_t rep, std::size_t, std::size_t) {
        auto& out = result.reps[rep];
        out.rep = static_cast<int>(rep) + 1;
        out.truth = options.target == StudyTarget::PopulationSize ? static_cast<double>(options.population) : pi0;
        auto rng = substream(options.seed, Stream::Simulation, rep);
        std::uint64_t seed_state = options.seed ^ (0x9e3779b97f4a7c15ULL * (rep + 1));
        const std::uint64_t rep_seed = splitmix64(seed_state);
        try {
            auto [table, n0] = simulate_table(lcm, options.population, rng);
            out.observed = table.total();
            out.estimate = estimator(table, rep_seed);
        } catch (const std::exception& e) {
            out.estimate.reset();
            out.error = e.what();
        }
    });

    StudySummary& s = result.summary;
    s.reps = options.reps;
    CompensatedSum point_sum;
    CompensatedSum truth_sum;
    std::vector<CompensatedSum> width_sum(options.levels.size());
    std::vector<int> covered(options.levels.size(), 0);
    int ok = 0;
    for (const auto& rep : result.reps) {
        if (!rep.estimate) {
            ++s.failures;
            continue;
        }
        ++ok;
        point_sum.add(rep.estimate->point);
        truth_sum.add(rep.truth);
        for (std::size_t l = 0; l < options.levels.size(); ++l) {
            const auto it = std::find_if(rep.estimate->intervals.begin(), rep.estimate->intervals.end(),
                                         [&](const StudyInterval& iv) {
                                             return std::abs(iv.level - options.levels[l]) < 1e-12;
                                         });
            if (it == rep.estimate->intervals.end()) continue;
            width_sum[l].add(it->hi - it->lo);
            if (it->lo <= rep.truth && rep.truth <= it->hi) ++covered[l];
        }
    }
    const double denom = ok > 0 ? static_cast<double>(ok) : std::nan("");
    s.mean_point = point_sum.value() / denom;
    s.mean_truth = truth_sum.value() / denom;
    for (std::size_t l = 0; l < options.levels.size(); ++l) {
        s.levels.push_back({options.levels[l], covered[l] / denom, width_sum[l].value() / denom});
    }
    return result;
}

std::vector<std::string> summary_headers(const std::vector<double>& levels) {
    std::vector<std::string> headers{"Mean Posterior Median"};
    for (double level : levels) {
        const auto label = percent_label(level);
        headers.push_back(label + " CI Coverage");
        headers.push_back("Mean " + label + " CI Width");
    }
    return headers;
}

void write_study_csv(std::ostream& out, const StudyResult& result, const std::vector<double>& levels) {
    out << "rep,truth,observed,point";
    for (double level : levels) {
        const auto tag = percent_label(level).substr(0, percent_label(level).size() - 1);
        out << ",lo_" << tag << ",hi_" << tag << ",covered_" << tag;
    }
    out << ",error\n";
    out.precision(17);
    for (const auto& rep : result.reps) {
        out << rep.rep << ',' << rep.truth << ',' << rep.observed << ',';
        if (rep.estimate) out << rep.estimate->point;
        for (double level : levels) {
            const StudyInterval* found = nullptr;
            if (rep.estimate) {
                for (const auto& iv : rep.estimate->intervals) {
                    if (std::abs(iv.level - level) < 1e-12) found = &iv;
                }
            }
            if (found) {
                out << ',' << found->lo << ',' << found->hi << ','
                    << (found->lo <= rep.truth && rep.truth <= found->hi ? 1 : 0);
            } else {
                out << ",,,";
            }
        }
        std::string err = rep.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out << ',' << err << '\n';
    }
}

void write_summary_csv(std::ostream& out, const StudySummary& summary) {
    std::vector<double> levels;
    for (const auto& l : summary.levels) levels.push_back(l.level);
    out << "N";
    for (const auto& h : summary_headers(levels)) out << ',' << h;
    out << ",Failures\n";
    out.precision(12);
    out << summary.mean_truth << ',' << summary.mean_point;
    for (const auto& l : summary.levels) out << ',' << l.coverage << ',' << l.mean_width;
    out << ',' << summary.failures << '\n';
}

nlohmann::json to_json(const StudySummary& summary, const StudyOptions& options) {
    std::vector<double> levels;
    for (const auto& l : summary.levels) levels.push_back(l.level);
    const auto headers = summary_headers(levels);
    nlohmann::json row;
    row["N"] = options.population;
    row[headers[0]] = summary.mean_point;
    for (std::size_t l = 0; l < summary.levels.size(); ++l) {
        row[headers[1 + 2 * l]] = summary.levels[l].coverage;
        row[headers[2 + 2 * l]] = summary.levels[l].mean_width;
    }
    nlohmann::json levels_json = nlohmann::json::array();
    for (const auto& l : summary.levels) {
        levels_json.push_back({{"level", l.level}, {"coverage", l.coverage}, {"mean_width", l.mean_width}});
    }
    return {
        {"columns", headers},
        {"row", row},
        {"reps", summary.reps},
        {"failures", summary.failures},
        {"mean_point", summary.mean_point},
        {"truth", summary.mean_truth},
        {"target", options.target == StudyTarget::PopulationSize ? "population_size" : "unobserved_prob"},
        {"levels", levels_json},
        {"seed", options.seed},
    };
}

}  // namespace mse
