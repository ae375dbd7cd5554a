// mse: command-line front end for multiple-systems population size
// estimation.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mse/assumptions.hpp"
#include "mse/bayes.hpp"
#include "mse/errors.hpp"
#include "mse/frequentist.hpp"
#include "mse/kosovo.hpp"
#include "mse/lcm.hpp"
#include "mse/table_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitEstimation = 2;
constexpr int kExitConfig = 3;
constexpr const char* kVersion = "1.0.0";

int exit_code_for(mse::ErrorCode code) {
    switch (code) {
        case mse::ErrorCode::ParseError:
        case mse::ErrorCode::DuplicateCell:
        case mse::ErrorCode::IllegalCell:
        case mse::ErrorCode::InvalidSubset:
        case mse::ErrorCode::MalformedDraw:
        case mse::ErrorCode::InvalidArgument:
            return kExitConfig;
        default:
            return kExitEstimation;
    }
}

struct DataOptions {
    std::string data;
    std::string fixture;
    std::vector<std::string> list_columns;
    std::string count_column = "count";
};

struct OutputOptions {
    std::string format = "table";
    std::string out_dir;
};

struct BayesOptions {
    std::string prior = "scale";
    std::size_t draws = 200000;
    std::uint64_t seed = mse::kDefaultSeed;
    unsigned threads = 1;
    double dirichlet_alpha = 1.0;
    std::string import_draws;
    std::string draw_format = "observed";
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
    cmd->add_option("--data", d.data, "Table file: CSV (list flags + count column) or JSON");
    cmd->add_option("--fixture", d.fixture, "Built-in dataset")->check(CLI::IsMember({"kosovo"}));
    cmd->add_option("--lists", d.list_columns, "CSV list columns to use (default: all but the count)")
        ->delimiter(',');
    cmd->add_option("--count-column", d.count_column, "CSV count column name");
}

void add_output_options(CLI::App* cmd, OutputOptions& o) {
    cmd->add_option("--format", o.format, "Console output format")
        ->check(CLI::IsMember({"json", "csv", "table"}));
    cmd->add_option("--out", o.out_dir, "Run directory for result files and manifest");
}

void add_bayes_options(CLI::App* cmd, BayesOptions& b) {
    cmd->add_option("--prior", b.prior,
                    "N prior: scale | uniform | poisson:M | nb:M,a | binomial:M,q | fienberg:l | "
                    "betabinomial:Nmax,a,b");
    cmd->add_option("--draws", b.draws, "Dirichlet working draws")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", b.seed, "Random seed");
    cmd->add_option("--threads", b.threads, "Worker threads (0 = all cores)");
    cmd->add_option("--alpha", b.dirichlet_alpha, "Symmetric Dirichlet concentration")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--import-draws", b.import_draws, "CSV of external working draws of pi~");
    cmd->add_option("--draw-format", b.draw_format, "Imported draw layout")
        ->check(CLI::IsMember({"observed", "full"}));
}

mse::ObservedTable load_data(const DataOptions& d) {
    if (!d.data.empty() && !d.fixture.empty()) {
        throw mse::Error(mse::ErrorCode::InvalidArgument, "use either --data or --fixture, not both");
    }
    if (d.fixture == "kosovo") return mse::kosovo_table();
    if (d.data.empty()) throw mse::Error(mse::ErrorCode::InvalidArgument, "--data or --fixture is required");
    mse::CsvTableOptions opts;
    opts.list_columns = d.list_columns;
    opts.count_column = d.count_column;
    return mse::load_table_file(d.data, opts);
}

std::string fixed(double v, int digits = 2) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

std::string floor_str(double v) { return std::to_string(static_cast<std::int64_t>(std::floor(v))); }

// Collects output files and writes them plus a manifest into the run dir.
class RunDirectory {
public:
    RunDirectory(std::string dir, std::string command) : dir_(std::move(dir)), command_(std::move(command)) {}

    void add(const std::string& name, const std::string& content) { files_[name] = content; }

    void commit(const json& settings) const {
        if (dir_.empty()) return;
        fs::create_directories(dir_);
        json manifest;
        manifest["tool"] = "mse";
        manifest["version"] = kVersion;
        manifest["command"] = command_;
        manifest["settings"] = settings;
        json listing = json::array();
        for (const auto& [name, content] : files_) {
            std::ofstream f(fs::path(dir_) / name, std::ios::binary);
            f << content;
            if (!f) throw mse::Error(mse::ErrorCode::InvalidArgument, "cannot write " + name);
            std::ostringstream hex;
            hex << std::hex << std::setw(16) << std::setfill('0') << mse::fnv1a64(content);
            listing.push_back({{"file", name}, {"bytes", content.size()}, {"fnv1a64", hex.str()}});
        }
        manifest["files"] = listing;
        std::ofstream m(fs::path(dir_) / "manifest.json", std::ios::binary);
        m << manifest.dump(2) << '\n';
    }

private:
    std::string dir_;
    std::string command_;
    std::map<std::string, std::string> files_;
};

std::vector<mse::ObservedProbs> working_draws(const mse::ObservedTable& table, const BayesOptions& b) {
    const mse::SamplerOptions sampler{b.seed, b.threads};
    if (!b.import_draws.empty()) {
        std::ifstream in(b.import_draws);
        if (!in) throw mse::Error(mse::ErrorCode::ParseError, "cannot open " + b.import_draws);
        const auto format = b.draw_format == "full" ? mse::DrawFormat::FullProbs : mse::DrawFormat::ObservedProbs;
        return mse::import_working_draws(in, format, table.num_lists());
    }
    const std::vector<double> alpha(table.counts().size(), b.dirichlet_alpha);
    return mse::dirichlet_cond_posterior(table, alpha, b.draws, sampler);
}

json bayes_settings(const BayesOptions& b) {
    json s = {{"prior", b.prior}, {"seed", b.seed}, {"threads", b.threads}};
    if (b.import_draws.empty()) {
        s["draws"] = b.draws;
        s["dirichlet_alpha"] = b.dirichlet_alpha;
    } else {
        s["import_draws"] = fs::path(b.import_draws).filename().string();
        s["draw_format"] = b.draw_format;
    }
    return s;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
    DataOptions data;
    OutputOptions output;
    BayesOptions bayes;
    std::string assumption = "nhoi";
    std::string mode = "freq";
    std::vector<double> levels{0.95};
    double add_constant = 0.0;
};

int run_estimate(const EstimateArgs& args) {
    const auto table = load_data(args.data);
    const auto a = mse::parse_assumption(args.assumption, table.list_names());
    RunDirectory run(args.output.out_dir, "estimate");
    json settings = {{"assumption", mse::assumption_to_json(a, table.list_names())},
                     {"mode", args.mode},
                     {"levels", args.levels}};

    if (args.mode == "freq") {
        if (args.add_constant < 0.0) throw mse::Error(mse::ErrorCode::InvalidArgument, "--add-constant must be >= 0");
        settings["add_constant"] = args.add_constant;
        std::vector<mse::PopEstimate> results;
        for (double level : args.levels) {
            if (args.add_constant > 0.0) {
                mse::validate(a, table.num_lists());
                const auto probs = mse::observed_proportions(table, args.add_constant);
                results.push_back(mse::estimate_from_probs(table.total(), probs, a, level));
            } else {
                results.push_back(mse::estimate(table, a, level));
            }
        }
        json doc = json::array();
        std::ostringstream csv;
        csv << "assumption,level,n,n_hat,pi0_hat,ci_lo,ci_hi,ci_conditional_lo,ci_conditional_hi\n";
        csv.precision(17);
        for (const auto& r : results) {
            doc.push_back(mse::to_json(r, table.list_names()));
            csv << '"' << a.describe(table.list_names()) << "\"," << r.level << ',' << r.n_observed << ','
                << r.n_hat << ',' << r.pi0_hat << ',' << r.ci_unconditional.lo << ',' << r.ci_unconditional.hi
                << ',' << r.ci_conditional.lo << ',' << r.ci_conditional.hi << '\n';
        }
        const json result = {{"mode", "freq"}, {"estimates", doc}};
        run.add("result.json", result.dump(2) + "\n");
        run.add("estimate.csv", csv.str());
        if (args.output.format == "json") {
            std::cout << result.dump(2) << '\n';
        } else if (args.output.format == "csv") {
            std::cout << csv.str();
        } else {
            std::cout << "assumption: " << a.describe(table.list_names()) << "\n";
            std::cout << "observed n: " << table.total() << "\n";
            for (const auto& r : results) {
                std::cout << fixed(r.level * 100, 0) << "% " << mse::format_point_interval(r)
                          << "   (N-hat " << fixed(r.n_hat) << ", conditional CI [" << floor_str(r.ci_conditional.lo)
                          << ", " << floor_str(r.ci_conditional.hi) << "])\n";
            }
        }
        run.commit(settings);
        return kExitOk;
    }

    const auto prior = mse::parse_prior(args.bayes.prior);
    const auto draws = working_draws(table, args.bayes);
    const mse::SamplerOptions sampler{args.bayes.seed, args.bayes.threads};
    const auto result = mse::run_bayes(draws, a, prior, table.total(), args.levels, sampler);
    settings["bayes"] = bayes_settings(args.bayes);

    json doc = mse::to_json(result);
    doc["mode"] = "bayes";
    doc["prior"] = mse::prior_to_json(prior);
    doc["assumption"] = mse::assumption_to_json(a, table.list_names());
    run.add("result.json", doc.dump(2) + "\n");
    std::ostringstream posterior;
    mse::write_posterior_csv(posterior, result.posterior);
    run.add("posterior_draws.csv", posterior.str());
    std::ostringstream hist;
    mse::write_histogram_csv(hist, result.posterior);
    run.add("posterior_histogram.csv", hist.str());

    std::ostringstream csv;
    csv << "level,lo,hi,mean,median,acceptance_rate,seed\n";
    csv.precision(17);
    for (const auto& iv : result.summary.intervals) {
        csv << iv.level << ',' << iv.lo << ',' << iv.hi << ',' << result.summary.mean << ','
            << result.summary.median << ',' << result.posterior.acceptance_rate << ',' << args.bayes.seed << '\n';
    }
    run.add("summary.csv", csv.str());

    if (args.output.format == "json") {
        std::cout << doc.dump(2) << '\n';
    } else if (args.output.format == "csv") {
        std::cout << csv.str();
    } else {
        std::cout << "assumption: " << a.describe(table.list_names()) << "\n";
        std::cout << "prior: " << mse::prior_name(prior) << "   seed: " << args.bayes.seed << "\n";
        std::cout << "posterior mean " << fixed(result.summary.mean, 1) << ", median "
                  << fixed(result.summary.median, 1) << "\n";
        for (const auto& iv : result.summary.intervals) {
            std::cout << fixed(iv.level * 100, 0) << "% interval [" << fixed(iv.lo, 1) << ", " << fixed(iv.hi, 1)
                      << "]\n";
        }
        std::cout << "accepted " << result.accepted << " of " << result.proposed << " (rate "
                  << fixed(result.posterior.acceptance_rate, 4) << ")\n";
        if (result.low_acceptance) std::cout << "warning: acceptance rate below 1e-4\n";
    }
    run.commit(settings);
    return kExitOk;
}

// ------------------------------------------------------------- sensitivity

struct SensitivityArgs {
    DataOptions data;
    OutputOptions output;
    BayesOptions bayes;
    std::string assumption = "nhoi";
    std::string mode = "freq";
    std::vector<double> xis;
    double invert_target = 0.0;
    std::vector<double> bracket{0.05, 20.0};
    double level = 0.95;
};

int run_sensitivity(const SensitivityArgs& args) {
    const auto table = load_data(args.data);
    const auto family = mse::parse_assumption(args.assumption, table.list_names());
    RunDirectory run(args.output.out_dir, "sensitivity");
    json settings = {{"family", mse::assumption_to_json(family, table.list_names())},
                     {"mode", args.mode},
                     {"level", args.level}};

    if (args.invert_target > 0.0) {
        if (args.bracket.size() != 2) {
            throw mse::Error(mse::ErrorCode::InvalidArgument, "--bracket takes two values lo,hi");
        }
        const double xi = mse::invert_xi(table, family, args.invert_target, args.bracket[0], args.bracket[1]);
        const auto est = mse::estimate(table, family.with_xi(xi), args.level);
        const json doc = {{"target", args.invert_target},
                          {"xi", xi},
                          {"estimate", mse::to_json(est, table.list_names())}};
        settings["invert"] = args.invert_target;
        settings["bracket"] = args.bracket;
        run.add("inversion.json", doc.dump(2) + "\n");
        if (args.output.format == "json") {
            std::cout << doc.dump(2) << '\n';
        } else if (args.output.format == "csv") {
            std::cout << "target,xi,n_hat\n" << args.invert_target << ',' << fixed(xi, 6) << ',' << est.n_hat << '\n';
        } else {
            std::cout << "xi giving N-hat = " << args.invert_target << ": " << fixed(xi, 4) << "  ("
                      << mse::format_point_interval(est) << ")\n";
        }
        run.commit(settings);
        return kExitOk;
    }

    if (args.xis.empty()) throw mse::Error(mse::ErrorCode::InvalidArgument, "give --xi values or --invert");
    settings["xi"] = args.xis;

    struct Row {
        double xi;
        std::string cell;
        double point = NAN;
        double lo = NAN;
        double hi = NAN;
        std::string note;
    };
    std::vector<Row> rows;
    json entries = json::array();
    if (args.mode == "freq") {
        for (const auto& e : mse::sensitivity_sweep(table, family, args.xis, args.level)) {
            Row r{e.xi, "", NAN, NAN, NAN, e.note};
            if (e.result) {
                r.cell = mse::format_point_interval(*e.result);
                r.point = e.result->n_hat;
                r.lo = e.result->ci_unconditional.lo;
                r.hi = e.result->ci_unconditional.hi;
                entries.push_back({{"xi", e.xi}, {"estimate", mse::to_json(*e.result, table.list_names())}});
            } else {
                r.cell = "n/a";
                entries.push_back({{"xi", e.xi}, {"error", e.note}});
            }
            rows.push_back(r);
        }
    } else {
        settings["bayes"] = bayes_settings(args.bayes);
        const auto prior = mse::parse_prior(args.bayes.prior);
        const auto draws = working_draws(table, args.bayes);
        const mse::SamplerOptions sampler{args.bayes.seed, args.bayes.threads};
        const std::vector<double> levels{args.level};
        for (double xi : args.xis) {
            Row r{xi, "", NAN, NAN, NAN, ""};
            try {
                const auto res = mse::run_bayes(draws, family.with_xi(xi), prior, table.total(), levels, sampler);
                r.point = res.summary.mean;
                r.lo = res.summary.intervals.front().lo;
                r.hi = res.summary.intervals.front().hi;
                r.cell = floor_str(r.point) + " [" + floor_str(r.lo) + ", " + floor_str(r.hi) + "]";
                auto j = mse::to_json(res);
                j["xi"] = xi;
                entries.push_back(j);
            } catch (const mse::Error& e) {
                r.cell = "n/a";
                r.note = e.what();
                entries.push_back({{"xi", xi}, {"error", r.note}});
            }
            rows.push_back(r);
        }
    }

    std::ostringstream series;
    series << "xi,n_hat,ci_lo,ci_hi,note\n";
    series.precision(17);
    for (const auto& r : rows) {
        series << r.xi << ',';
        if (!std::isnan(r.point)) series << r.point << ',' << r.lo << ',' << r.hi;
        else series << ",,";
        std::string note = r.note;
        std::replace(note.begin(), note.end(), ',', ';');
        series << ',' << note << '\n';
    }
    const json doc = {{"family", mse::assumption_to_json(family, table.list_names())},
                      {"mode", args.mode},
                      {"entries", entries}};
    run.add("sweep.json", doc.dump(2) + "\n");
    run.add("sweep_series.csv", series.str());

    if (args.output.format == "json") {
        std::cout << doc.dump(2) << '\n';
    } else if (args.output.format == "csv") {
        std::cout << series.str();
    } else {
        std::cout << "family: " << family.describe(table.list_names()) << "\n";
        std::cout << std::left << std::setw(10) << "xi" << "estimate\n";
        for (const auto& r : rows) {
            std::cout << std::left << std::setw(10) << fixed(r.xi, 4) << r.cell;
            if (!r.note.empty()) std::cout << "   # " << r.note;
            std::cout << '\n';
        }
    }
    run.commit(settings);
    return kExitOk;
}

// ----------------------------------------------------- identifiability lab

int run_check_ident(int j, int k, const OutputOptions& output) {
    const auto v = mse::check_conditional_identifiability(j, k);
    const json doc = {{"J", j}, {"K", k}, {"identifiable", v.identifiable}, {"verdict", v.verdict}, {"note", v.note}};
    if (output.format == "json") {
        std::cout << doc.dump(2) << '\n';
    } else {
        std::cout << "J=" << j << ", K=" << k << ": " << v.verdict << '\n';
        if (!v.note.empty()) std::cout << "note: " << v.note << '\n';
    }
    RunDirectory run(output.out_dir, "check-ident");
    run.add("verdict.json", doc.dump(2) + "\n");
    run.commit({{"J", j}, {"K", k}});
    return kExitOk;
}

int run_counterexample(int j, int k, double alpha, const OutputOptions& output) {
    if (alpha <= 0.0) alpha = mse::default_counterexample_alpha(j);
    const auto pair = mse::counterexample_pair(j, k, alpha);
    const auto report = mse::verify_counterexample(pair);
    json doc = mse::to_json(pair, report);
    doc["J"] = j;
    doc["K"] = k;
    doc["alpha"] = alpha;
    if (output.format == "json") {
        std::cout << doc.dump(2) << '\n';
    } else {
        auto show = [](const char* name, const mse::LatentClassModel& m) {
            std::cout << name << ": nu = (";
            for (std::size_t i = 0; i < m.nu.size(); ++i) std::cout << (i ? ", " : "") << fixed(m.nu[i], 6);
            std::cout << "), q = (";
            for (std::size_t i = 0; i < m.q.size(); ++i) std::cout << (i ? ", " : "") << fixed(m.q[i][0], 6);
            std::cout << ")\n";
        };
        show("Q", pair.q_model);
        show("R", pair.r_model);
        std::cout << "A = " << fixed(pair.scale, 6) << "\n";
        std::cout << "pi0: Q " << fixed(report.pi0_q, 3) << ", R " << fixed(report.pi0_r, 3) << "\n";
        std::cout << "max |m_Q - A m_R| = " << report.moment_gap << "\n";
        std::cout << "max |pi~_Q - pi~_R| = " << report.observed_gap << "\n";
        std::cout << "(1 - pi0_Q)/(1 - pi0_R) = " << fixed(report.scale_from_pi0, 12) << "\n";
    }
    RunDirectory run(output.out_dir, "counterexample");
    run.add("Q.json", mse::lcm_to_json(pair.q_model).dump(2) + "\n");
    run.add("R.json", mse::lcm_to_json(pair.r_model).dump(2) + "\n");
    run.add("report.json", doc.dump(2) + "\n");
    run.commit({{"J", j}, {"K", k}, {"alpha", alpha}});
    return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    OutputOptions output;
    BayesOptions bayes;
    std::string model;
    std::int64_t population = 10000;
    int reps = 200;
    std::string estimator = "freq-nhoi";
    std::string subset = "L1,L2";
    double xi = 1.0;
    std::vector<double> levels{0.95, 0.5};
    std::string target = "population_size";
};

mse::StudyEstimate to_study_estimate(double point, const std::vector<mse::StudyInterval>& intervals) {
    return {point, intervals};
}

mse::StudyEstimator make_estimator(const SimulateArgs& args) {
    const bool want_pi0 = args.target == "unobserved_prob";
    const auto levels = args.levels;
    if (args.estimator == "freq-nhoi" || args.estimator == "freq-marginal") {
        const bool marginal = args.estimator == "freq-marginal";
        const std::string subset = args.subset;
        const double xi = args.xi;
        return [=](const mse::ObservedTable& table, std::uint64_t) {
            const auto a = marginal ? mse::parse_assumption("marginal_nhoi:" + subset + ":" + std::to_string(xi),
                                                            table.list_names())
                                    : mse::IdentifyingAssumption::nhoi(xi);
            std::vector<mse::StudyInterval> intervals;
            double point = 0.0;
            const double n = static_cast<double>(table.total());
            for (double level : levels) {
                const auto est = mse::estimate(table, a, level);
                const auto& ci = est.reported_interval();
                point = want_pi0 ? est.pi0_hat : est.n_hat;
                if (want_pi0) {
                    intervals.push_back({level, 1.0 - n / ci.lo, 1.0 - n / ci.hi});
                } else {
                    intervals.push_back({level, ci.lo, ci.hi});
                }
            }
            return to_study_estimate(point, intervals);
        };
    }
    if (args.estimator == "bayes") {
        const auto prior = mse::parse_prior(args.bayes.prior);
        const std::size_t draws = args.bayes.draws;
        const double alpha = args.bayes.dirichlet_alpha;
        const std::string subset = args.subset;
        const double xi = args.xi;
        const bool use_marginal = args.subset != "none";
        return [=](const mse::ObservedTable& table, std::uint64_t seed) {
            const auto a = use_marginal ? mse::parse_assumption("marginal_nhoi:" + subset + ":" + std::to_string(xi),
                                                                table.list_names())
                                        : mse::IdentifyingAssumption::nhoi(xi);
            const mse::SamplerOptions sampler{seed, 1};
            const auto run = mse::run_bayes_dirichlet(table, a, prior, draws, levels, sampler, alpha);
            std::vector<mse::StudyInterval> intervals;
            if (want_pi0) {
                const auto s = mse::summarize(run.posterior.pi0_draws, levels);
                for (const auto& iv : s.intervals) intervals.push_back({iv.level, iv.lo, iv.hi});
                return to_study_estimate(s.median, intervals);
            }
            for (const auto& iv : run.summary.intervals) intervals.push_back({iv.level, iv.lo, iv.hi});
            return to_study_estimate(run.summary.median, intervals);
        };
    }
    throw mse::Error(mse::ErrorCode::InvalidArgument, "unknown estimator '" + args.estimator + "'");
}

int run_simulate(const SimulateArgs& args) {
    if (args.model.empty()) throw mse::Error(mse::ErrorCode::InvalidArgument, "--model is required");
    std::ifstream in(args.model);
    if (!in) throw mse::Error(mse::ErrorCode::ParseError, "cannot open " + args.model);
    json spec;
    try {
        spec = json::parse(in);
    } catch (const json::exception& e) {
        throw mse::Error(mse::ErrorCode::ParseError, std::string("invalid model JSON: ") + e.what());
    }
    const auto lcm = mse::lcm_from_json(spec);

    mse::StudyOptions opts;
    opts.population = args.population;
    opts.reps = args.reps;
    opts.levels = args.levels;
    opts.seed = args.bayes.seed;
    opts.threads = args.bayes.threads;
    opts.target = args.target == "unobserved_prob" ? mse::StudyTarget::UnobservedProb
                                                   : mse::StudyTarget::PopulationSize;
    const auto result = mse::simulation_study(lcm, make_estimator(args), opts);

    std::ostringstream reps_csv;
    mse::write_study_csv(reps_csv, result, args.levels);
    std::ostringstream summary_csv;
    mse::write_summary_csv(summary_csv, result.summary);
    json summary = mse::to_json(result.summary, opts);
    summary["estimator"] = args.estimator;
    summary["model"] = mse::lcm_to_json(lcm);
    summary["pi0"] = mse::cell_probs(lcm).pi0;

    RunDirectory run(args.output.out_dir, "simulate");
    run.add("reps.csv", reps_csv.str());
    run.add("summary.csv", summary_csv.str());
    run.add("summary.json", summary.dump(2) + "\n");
    json settings = {{"model", mse::lcm_to_json(lcm)},
                     {"N", args.population},
                     {"reps", args.reps},
                     {"estimator", args.estimator},
                     {"xi", args.xi},
                     {"levels", args.levels},
                     {"target", args.target},
                     {"seed", args.bayes.seed},
                     {"threads", args.bayes.threads}};
    if (args.estimator != "freq-nhoi") settings["subset"] = args.subset;
    if (args.estimator == "bayes") settings["bayes"] = bayes_settings(args.bayes);
    run.commit(settings);

    if (args.output.format == "json") {
        std::cout << summary.dump(2) << '\n';
    } else {
        std::cout << summary_csv.str();
        std::cout << "seed " << args.bayes.seed << ", failed reps " << result.summary.failures << "\n";
    }
    return kExitOk;
}

// Appends options from a JSON config file unless given on the command line.
std::vector<std::string> expand_config(std::vector<std::string> argv) {
    auto it = std::find(argv.begin(), argv.end(), "--config");
    if (it == argv.end() || it + 1 == argv.end()) return argv;
    const std::string path = *(it + 1);
    argv.erase(it, it + 2);
    std::ifstream in(path);
    if (!in) throw mse::Error(mse::ErrorCode::ParseError, "cannot open config " + path);
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::exception& e) {
        throw mse::Error(mse::ErrorCode::ParseError, std::string("invalid config JSON: ") + e.what());
    }
    if (!cfg.is_object()) throw mse::Error(mse::ErrorCode::ParseError, "config must be a JSON object");
    auto scalar = [](const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
        if (v.is_number()) {
            std::ostringstream os;
            os.precision(17);
            os << v.get<double>();
            return os.str();
        }
        if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
        throw mse::Error(mse::ErrorCode::ParseError, "unsupported config value " + v.dump());
    };
    for (const auto& [key, value] : cfg.items()) {
        const std::string flag = "--" + key;
        if (std::find(argv.begin(), argv.end(), flag) != argv.end()) continue;
        argv.push_back(flag);
        if (value.is_array()) {
            for (const auto& v : value) argv.push_back(scalar(v));
        } else {
            argv.push_back(scalar(value));
        }
    }
    return argv;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiple-systems (capture-recapture) population size estimation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.add_option("--config", "JSON file of option values (command-line flags take precedence)");

    EstimateArgs est;
    auto* cmd_est = app.add_subcommand("estimate", "Population size under an identifying assumption");
    add_data_options(cmd_est, est.data);
    add_output_options(cmd_est, est.output);
    add_bayes_options(cmd_est, est.bayes);
    cmd_est->add_option("--assumption", est.assumption, "nhoi[:xi] | marginal_nhoi:LIST,LIST[,...][:xi]");
    cmd_est->add_option("--mode", est.mode, "freq or bayes")->check(CLI::IsMember({"freq", "bayes"}));
    cmd_est->add_option("--level", est.levels, "Interval level(s)")->delimiter(',');
    cmd_est->add_option("--add-constant", est.add_constant, "Pseudo-count added to every observed cell (freq)");

    SensitivityArgs sens;
    auto* cmd_sens = app.add_subcommand("sensitivity", "Sweep or invert the assumption parameter xi");
    add_data_options(cmd_sens, sens.data);
    add_output_options(cmd_sens, sens.output);
    add_bayes_options(cmd_sens, sens.bayes);
    cmd_sens->add_option("--assumption", sens.assumption, "Assumption family (its xi is ignored)");
    cmd_sens->add_option("--mode", sens.mode, "freq or bayes")->check(CLI::IsMember({"freq", "bayes"}));
    cmd_sens->add_option("--xi", sens.xis, "Comma-separated xi values")->delimiter(',');
    cmd_sens->add_option("--invert", sens.invert_target, "Find xi whose point estimate hits this target");
    cmd_sens->add_option("--bracket", sens.bracket, "xi search bracket lo,hi")->delimiter(',');
    cmd_sens->add_option("--level", sens.level, "Interval level");

    int ident_j = 0;
    int ident_k = 0;
    OutputOptions ident_out;
    auto* cmd_ident = app.add_subcommand("check-ident", "Conditional identifiability of a J-class model on K lists");
    cmd_ident->add_option("--J", ident_j, "Latent classes")->required();
    cmd_ident->add_option("--K", ident_k, "Lists")->required();
    add_output_options(cmd_ident, ident_out);

    int ce_j = 0;
    int ce_k = 0;
    double ce_alpha = 0.0;
    OutputOptions ce_out;
    auto* cmd_ce = app.add_subcommand("counterexample", "Build two latent class models with equal pi~, different pi0");
    cmd_ce->add_option("--J", ce_j, "Latent classes")->required();
    cmd_ce->add_option("--K", ce_k, "Lists (K < 2J)")->required();
    cmd_ce->add_option("--alpha", ce_alpha, "Scale in (0, 1/(2J)); default 0.99/(2J)");
    add_output_options(cmd_ce, ce_out);

    SimulateArgs sim;
    auto* cmd_sim = app.add_subcommand("simulate", "Repeated-sampling study from a latent class model");
    cmd_sim->add_option("--model", sim.model, "Model JSON {\"nu\": [...], \"q\": [[...], ...]}")->required();
    cmd_sim->add_option("--N", sim.population, "Population size")->check(CLI::PositiveNumber);
    cmd_sim->add_option("--reps", sim.reps, "Replicates")->check(CLI::PositiveNumber);
    cmd_sim->add_option("--estimator", sim.estimator, "freq-nhoi | freq-marginal | bayes")
        ->check(CLI::IsMember({"freq-nhoi", "freq-marginal", "bayes"}));
    cmd_sim->add_option("--subset", sim.subset, "Marginal lists for freq-marginal/bayes (L1,L2,...; 'none' = NHOI)");
    cmd_sim->add_option("--xi", sim.xi, "Assumption parameter");
    cmd_sim->add_option("--level", sim.levels, "Interval levels")->delimiter(',');
    cmd_sim->add_option("--target", sim.target, "population_size or unobserved_prob")
        ->check(CLI::IsMember({"population_size", "unobserved_prob"}));
    add_output_options(cmd_sim, sim.output);
    add_bayes_options(cmd_sim, sim.bayes);

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = expand_config(std::move(args));
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        std::cout << kVersion << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << "ParseError: " << e.what() << '\n';
        return kExitConfig;
    } catch (const mse::Error& e) {
        std::cerr << e.what() << '\n';
        return exit_code_for(e.code());
    }

    try {
        if (*cmd_est) return run_estimate(est);
        if (*cmd_sens) return run_sensitivity(sens);
        if (*cmd_ident) return run_check_ident(ident_j, ident_k, ident_out);
        if (*cmd_ce) return run_counterexample(ce_j, ce_k, ce_alpha, ce_out);
        if (*cmd_sim) return run_simulate(sim);
    } catch (const mse::Error& e) {
        std::cerr << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitEstimation;
    }
    return kExitConfig;
}
