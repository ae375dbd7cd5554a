// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mse/bayes.hpp"
#include "mse/frequentist.hpp"
#include "mse/kosovo.hpp"
#include "mse/lcm.hpp"
#include "properties.hpp"

namespace fs = std::filesystem;
using namespace mse;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

struct Criterion {
    int id;
    std::string title;
    double time_limit_s;  // per criterion; <= 0 means no limit
    std::function<Outcome()> run;
};

bool within_one(double value, std::int64_t expected) { return std::abs(std::floor(value) - static_cast<double>(expected)) <= 1.0; }

std::string fmt(double v) {
    std::ostringstream os;
    os << std::fixed;
    os.precision(v < 10 ? 4 : 0);
    os << v;
    return os.str();
}

void check_estimate(Outcome& out, const std::string& label, const PopEstimate& est, std::int64_t point,
                    std::int64_t lo, std::int64_t hi) {
    const bool ok = within_one(est.n_hat, point) && within_one(est.ci_unconditional.lo, lo) &&
                    within_one(est.ci_unconditional.hi, hi);
    out.require(ok, label + " got " + format_point_interval(est) + ", expected " + std::to_string(point) + " [" +
                        std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

IdentifyingAssumption aba_hrw(double xi = 1.0) {
    const std::vector<std::string> names{"ABA", "HRW"};
    return IdentifyingAssumption::marginal_nhoi(kosovo_table().resolve_lists(names), xi);
}

Outcome kosovo_marginal() {
    Outcome out;
    check_estimate(out, "marginal", estimate(kosovo_table(), aba_hrw()), 9691, 8074, 11308);
    return out;
}

Outcome kosovo_nhoi() {
    Outcome out;
    check_estimate(out, "nhoi", estimate(kosovo_table(), IdentifyingAssumption::nhoi()), 16941, 5304, 28579);
    return out;
}

Outcome sweeps() {
    Outcome out;
    const auto table = kosovo_table();
    struct Row {
        double xi;
        std::int64_t point, lo, hi;
    };
    const std::vector<Row> marginal{{0.9, 10534, 8738, 12330}, {0.8, 11588, 9568, 13607}, {0.7, 12942, 10636, 15249}};
    const std::vector<Row> nhoi{{0.5, 29483, 6210, 52757},
                                {2.0 / 3.0, 23212, 5757, 40668},
                                {1.5, 12761, 5002, 20520},
                                {2.0, 10670, 4851, 16490}};
    auto run = [&](const IdentifyingAssumption& family, const std::vector<Row>& rows, const std::string& name) {
        std::vector<double> xis;
        for (const auto& r : rows) xis.push_back(r.xi);
        const auto sweep = sensitivity_sweep(table, family, xis);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const std::string label = name + " xi=" + fmt(rows[i].xi);
            if (!sweep[i].result) {
                out.require(false, label + ": " + sweep[i].note);
                continue;
            }
            check_estimate(out, label, *sweep[i].result, rows[i].point, rows[i].lo, rows[i].hi);
        }
    };
    run(aba_hrw(), marginal, "marginal");
    run(IdentifyingAssumption::nhoi(), nhoi, "nhoi");
    return out;
}

Outcome inversion() {
    Outcome out;
    const double xi = invert_xi(kosovo_table(), aba_hrw(), 16941.0, 0.05, 20.0);
    out.require(std::abs(xi - 0.51) <= 0.01, "xi = " + std::to_string(xi));
    if (out.pass) out.detail = "xi = " + fmt(xi);
    return out;
}

struct BayesTarget {
    std::string label;
    IdentifyingAssumption assumption;
    NPrior prior;
    double mean, lo, hi;
    double mean_tol, end_tol;
};

Outcome bayes_kosovo(double& slowest) {
    Outcome out;
    const auto table = kosovo_table();
    const std::vector<double> levels{0.95};
    const std::vector<BayesTarget> targets{
        {"marginal+scale", aba_hrw(), FienbergPrior{1}, 9536, 8113, 11252, 0.015, 0.025},
        {"marginal+nb", aba_hrw(), NegBinomialPrior{10000, 1.6}, 9540, 8123, 11247, 0.015, 0.025},
        {"nhoi+scale", IdentifyingAssumption::nhoi(), FienbergPrior{1}, 18500, 9402, 35908, 0.03, 0.05},
        {"nhoi+nb", IdentifyingAssumption::nhoi(), NegBinomialPrior{10000, 1.6}, 16051, 9098, 27679, 0.03, 0.05},
    };
    SamplerOptions opts;
    opts.threads = 0;
    std::string summary;
    for (const auto& t : targets) {
        const auto start = std::chrono::steady_clock::now();
        const auto run = run_bayes_dirichlet(table, t.assumption, t.prior, 200000, levels, opts);
        slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        const auto& ci = run.summary.intervals.front();
        const auto rel = [](double got, double want) { return std::abs(got - want) / want; };
        const bool ok = rel(run.summary.mean, t.mean) <= t.mean_tol && rel(ci.lo, t.lo) <= t.end_tol &&
                        rel(ci.hi, t.hi) <= t.end_tol;
        const std::string got = fmt(run.summary.mean) + " [" + fmt(ci.lo) + ", " + fmt(ci.hi) + "]";
        out.require(ok, t.label + " got " + got);
        summary += (summary.empty() ? "" : ", ") + t.label + " " + got;
    }

    // External-sampler path: exported working draws re-imported give the
    // same posterior as the in-memory draws.
    const auto draws = dirichlet_cond_posterior(table, {}, 20000, opts);
    std::stringstream csv;
    export_working_draws(csv, draws);
    const auto imported = import_working_draws(csv, DrawFormat::ObservedProbs, table.num_lists());
    const auto direct = run_bayes(draws, aba_hrw(), FienbergPrior{1}, table.total(), levels, opts);
    const auto via_csv = run_bayes(imported, aba_hrw(), FienbergPrior{1}, table.total(), levels, opts);
    out.require(std::abs(direct.summary.mean - via_csv.summary.mean) < 1e-6 * direct.summary.mean,
                "imported draws changed the posterior");
    if (out.pass) out.detail = summary;
    return out;
}

Outcome nb_prior_mass() {
    Outcome out;
    const NPrior nb = NegBinomialPrior{10000, 1.6};
    const auto lo = prior_quantile(nb, 0.025);
    const auto hi = prior_quantile(nb, 0.975);
    out.require(std::abs(lo - 818) <= 1 && std::abs(hi - 30371) <= 1,
                "got [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    if (out.pass) out.detail = "[" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
    return out;
}

Outcome counterexample() {
    Outcome out;
    const auto pair = counterexample_pair(2, 2, 0.2475);
    const auto report = verify_counterexample(pair);
    const auto round3 = [](double v) { return std::round(v * 1000.0) / 1000.0; };
    out.require(round3(report.pi0_r) == 0.316 && round3(report.pi0_q) == 0.219,
                "pi0 pair " + std::to_string(report.pi0_r) + "/" + std::to_string(report.pi0_q));
    out.require(std::abs(pair.scale - 8.0 / 7.0) < 1e-15, "A = " + std::to_string(pair.scale));
    out.require(report.moment_gap < 1e-12, "moment gap " + std::to_string(report.moment_gap));
    out.require(report.observed_gap < 1e-12, "observed gap " + std::to_string(report.observed_gap));
    if (out.pass) out.detail = "pi0 " + fmt(report.pi0_r) + "/" + fmt(report.pi0_q);
    return out;
}

Outcome properties() {
    Outcome out;
    for (const auto& r : testing::all_property_suites(kDefaultSeed)) {
        std::ostringstream line;
        line << r.name << " " << r.cases << " cases, worst " << r.worst;
        out.require(r.pass() && r.cases >= 100, line.str() + " " + r.detail);
        out.detail += (out.detail.empty() ? "" : "; ") + line.str();
    }
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Byte comparison of two run directories, file by file.
bool same_directory(const fs::path& a, const fs::path& b, std::string& why) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(a)) files.push_back(e.path().filename());
    std::size_t count_b = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(b)) ++count_b;
    if (files.empty() || files.size() != count_b) {
        why = "file sets differ in " + a.filename().string();
        return false;
    }
    for (const auto& f : files) {
        if (slurp(a / f) != slurp(b / f)) {
            why = f.string() + " differs";
            return false;
        }
    }
    return true;
}

Outcome determinism(const std::string& cli, const fs::path& work) {
    Outcome out;
    const auto table = kosovo_table();
    const std::vector<double> levels{0.95, 0.5};
    for (unsigned threads : {1U, 4U}) {
        SamplerOptions opts;
        opts.seed = 12345;
        opts.threads = threads;
        std::string first;
        for (int attempt = 0; attempt < 2; ++attempt) {
            const auto run = run_bayes_dirichlet(table, aba_hrw(), NegBinomialPrior{10000, 1.6}, 30000, levels, opts);
            std::ostringstream bytes;
            write_posterior_csv(bytes, run.posterior);
            bytes << to_json(run).dump();
            if (attempt == 0) first = bytes.str();
            else out.require(first == bytes.str(), "library Bayes output differs at threads=" + std::to_string(threads));
        }
    }

    if (cli.empty()) {
        out.require(false, "no CLI path given");
        return out;
    }
    fs::remove_all(work);
    fs::create_directories(work);
    const auto model = work / "model.json";
    {
        std::ofstream m(model);
        m << R"({"nu": [0.5, 0.5], "q": [[0.2475, 0.2475, 0.2475], [0.7425, 0.7425, 0.7425]]})";
    }
    const std::vector<std::pair<std::string, std::string>> commands{
        {"estimate", "estimate --fixture kosovo --mode bayes --assumption marginal_nhoi:ABA,HRW --prior nb:10000,1.6 "
                     "--draws 20000 --seed 7 --threads 4"},
        {"sensitivity", "sensitivity --fixture kosovo --mode bayes --assumption nhoi --xi 0.5,1,2 --draws 10000 "
                        "--seed 7 --threads 2"},
        {"simulate", "simulate --model " + model.string() + " --N 2000 --reps 8 --estimator bayes --draws 4000 "
                     "--seed 7 --threads 4"},
        {"simulate-freq", "simulate --model " + model.string() + " --N 2000 --reps 20 --estimator freq-nhoi --seed 7"},
    };
    for (const auto& [name, args] : commands) {
        fs::path dirs[2] = {work / (name + "_a"), work / (name + "_b")};
        bool ran = true;
        for (const auto& d : dirs) {
            const std::string command = "\"" + cli + "\" " + args + " --format json --out \"" + d.string() + "\" > \"" +
                                        (work / (name + ".log")).string() + "\" 2>&1";
            if (std::system(command.c_str()) != 0) {
                out.require(false, name + " exited nonzero");
                ran = false;
                break;
            }
        }
        if (!ran) continue;
        std::string why;
        out.require(same_directory(dirs[0], dirs[1], why), name + ": " + why);
    }
    if (out.pass) out.detail = "library runs and 4 CLI commands byte-identical";
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    std::string cli;
    std::string work = "acceptance_runs";
    app.add_option("--cli", cli, "Path to the mse executable");
    app.add_option("--work-dir", work, "Scratch directory for CLI runs");
    CLI11_PARSE(app, argc, argv);

    double slowest_bayes = 0.0;
    const std::vector<Criterion> criteria{
        {1, "Kosovo frequentist marginal NHOI(ABA,HRW)", 1.0, kosovo_marginal},
        {2, "Kosovo frequentist NHOI", 1.0, kosovo_nhoi},
        {3, "sensitivity sweeps", 1.0, sweeps},
        {4, "xi inversion", 1.0, inversion},
        {5, "Bayesian Kosovo runs", 0.0, [&] { return bayes_kosovo(slowest_bayes); }},
        {6, "negative binomial prior mass", 0.0, nb_prior_mass},
        {7, "counterexample pair", 0.1, counterexample},
        {8, "property suites", 0.0, properties},
        {9, "determinism", 0.0, [&] { return determinism(cli, work); }},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        Outcome outcome;
        const auto start = std::chrono::steady_clock::now();
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.detail = std::string("exception: ") + e.what();
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.time_limit_s > 0.0 && elapsed > c.time_limit_s) {
            outcome.require(false, "took " + std::to_string(elapsed) + " s (limit " + std::to_string(c.time_limit_s) + ")");
        }
        if (c.id == 5 && slowest_bayes > 60.0) {
            outcome.require(false, "slowest run " + std::to_string(slowest_bayes) + " s (limit 60)");
        }
        if (!outcome.pass) ++failures;
        std::ostringstream time;
        time.precision(3);
        time << std::fixed << elapsed;
        std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << " ("
                  << time.str() << " s)" << (outcome.detail.empty() ? "" : " -- " + outcome.detail) << '\n';
    }
    std::cout << (failures == 0 ? "ALL CRITERIA PASSED" : std::to_string(failures) + " CRITERIA FAILED") << '\n';
    return failures == 0 ? 0 : 1;
}
