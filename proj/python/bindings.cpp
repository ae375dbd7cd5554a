#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "mse/bayes.hpp"
#include "mse/errors.hpp"
#include "mse/frequentist.hpp"
#include "mse/kosovo.hpp"
#include "mse/lcm.hpp"
#include "mse/table_io.hpp"

namespace py = pybind11;
using namespace mse;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

IdentifyingAssumption assumption_for(const ObservedTable& table, const std::string& text) {
    auto a = parse_assumption(text, table.list_names());
    validate(a, table.num_lists());
    return a;
}

LatentClassModel make_lcm(std::vector<double> nu, std::vector<std::vector<double>> q) {
    LatentClassModel lcm{std::move(nu), std::move(q)};
    validate(lcm);
    return lcm;
}

ObservedTable table_from_cells(std::vector<std::string> lists, const std::map<std::vector<int>, std::int64_t>& cells) {
    std::vector<std::int64_t> counts(num_observed_cells(static_cast<int>(lists.size())), 0);
    for (const auto& [bits, count] : cells) {
        if (bits.size() != lists.size()) throw Error(ErrorCode::ParseError, "pattern length does not match the lists");
        const auto code = InclusionPattern::from_bits(bits).code();
        if (code == 0) throw Error(ErrorCode::IllegalCell, "the all-zero pattern is unobserved by construction");
        counts[code - 1] = count;
    }
    return ObservedTable(std::move(lists), std::move(counts));
}

py::dict estimate_dict(const ObservedTable& table, const std::string& assumption, double level) {
    return to_python(to_json(estimate(table, assumption_for(table, assumption), level), table.list_names()));
}

py::dict bayes_dict(const ObservedTable& table, const std::string& assumption, const std::string& prior,
                    std::size_t draws, std::uint64_t seed, unsigned threads, const std::vector<double>& levels,
                    double alpha, bool return_draws) {
    const auto a = assumption_for(table, assumption);
    const auto p = parse_prior(prior);
    SamplerOptions opts{seed, threads};
    BayesRun run;
    {
        py::gil_scoped_release release;
        run = run_bayes_dirichlet(table, a, p, draws, levels, opts, alpha);
    }
    py::dict out = to_python(to_json(run));
    if (return_draws) {
        out["n_draws"] = run.posterior.n_draws;
        out["pi0_draws"] = run.posterior.pi0_draws;
    }
    return out;
}

StudyEstimate estimate_from_python(const py::object& result) {
    const auto tup = result.cast<py::tuple>();
    if (tup.size() != 2) throw Error(ErrorCode::InvalidArgument, "estimator must return (point, [(level, lo, hi), ...])");
    StudyEstimate est;
    est.point = tup[0].cast<double>();
    for (const auto& item : tup[1]) {
        const auto iv = item.cast<std::tuple<double, double, double>>();
        est.intervals.push_back({std::get<0>(iv), std::get<1>(iv), std::get<2>(iv)});
    }
    return est;
}

py::dict study_dict(const LatentClassModel& lcm, const py::function& estimator, std::int64_t population, int reps,
                    const std::vector<double>& levels, const std::string& target, std::uint64_t seed,
                    unsigned threads) {
    StudyOptions opts;
    opts.population = population;
    opts.reps = reps;
    opts.levels = levels;
    opts.seed = seed;
    opts.threads = threads;
    if (target == "unobserved_prob") opts.target = StudyTarget::UnobservedProb;
    else if (target != "population_size") throw Error(ErrorCode::InvalidArgument, "unknown target '" + target + "'");

    // Worker threads take the GIL for each call; Python errors become
    // per-replicate failures.
    StudyEstimator callback = [&estimator](const ObservedTable& table, std::uint64_t rep_seed) {
        py::gil_scoped_acquire gil;
        try {
            return estimate_from_python(estimator(table, rep_seed));
        } catch (py::error_already_set& e) {
            throw Error(ErrorCode::InvalidArgument, e.what());
        } catch (const py::cast_error& e) {
            throw Error(ErrorCode::InvalidArgument, e.what());
        }
    };
    StudyResult result;
    {
        py::gil_scoped_release release;
        result = simulation_study(lcm, callback, opts);
    }
    py::dict out;
    out["summary"] = to_python(to_json(result.summary, opts));
    py::list rows;
    for (const auto& r : result.reps) {
        py::dict row;
        row["rep"] = r.rep;
        row["truth"] = r.truth;
        row["observed"] = r.observed;
        if (r.estimate) {
            row["point"] = r.estimate->point;
            py::list intervals;
            for (const auto& iv : r.estimate->intervals) intervals.append(py::make_tuple(iv.level, iv.lo, iv.hi));
            row["intervals"] = intervals;
        } else {
            row["error"] = r.error;
        }
        rows.append(row);
    }
    out["reps"] = rows;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Population size estimation from overlapping lists";

    static PyObject* mse_error = PyErr_NewException("pymse.MseError", PyExc_RuntimeError, nullptr);
    m.attr("MseError") = py::handle(mse_error);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::tuple args = py::make_tuple(std::string(to_string(e.code())), e.what());
            PyErr_SetObject(mse_error, args.ptr());
        }
    });

    py::class_<ObservedTable>(m, "Table")
        .def(py::init<std::vector<std::string>, std::vector<std::int64_t>>(), py::arg("lists"), py::arg("counts"),
             "Counts in cell-code order 1 .. 2^K - 1, list 1 as the lowest bit.")
        .def_static("from_cells", &table_from_cells, py::arg("lists"), py::arg("cells"),
                    "Build from {(h_1, ..., h_K): count}; missing patterns are zero.")
        .def_property_readonly("lists", &ObservedTable::list_names)
        .def_property_readonly("counts", &ObservedTable::counts)
        .def_property_readonly("total", &ObservedTable::total)
        .def_property_readonly("num_lists", &ObservedTable::num_lists)
        .def("count", &ObservedTable::count, py::arg("code"))
        .def("proportions", [](const ObservedTable& t, double c) { return observed_proportions(t, c).values(); },
             py::arg("pseudo_count") = 0.0)
        .def("to_csv",
             [](const ObservedTable& t) {
                 std::ostringstream out;
                 write_table_csv(out, t);
                 return out.str();
             })
        .def(py::self == py::self)
        .def("__repr__", [](const ObservedTable& t) {
            return "Table(lists=" + std::to_string(t.num_lists()) + ", n=" + std::to_string(t.total()) + ")";
        });

    m.def("kosovo", &kosovo_table, "The four-list Kosovo casualty table.");
    m.def("load_table", [](const std::string& path) { return load_table_file(path); }, py::arg("path"));

    m.def("estimate", &estimate_dict, py::arg("table"), py::arg("assumption") = "nhoi", py::arg("level") = 0.95,
          "Frequentist point estimate and intervals; assumption uses the CLI syntax, e.g. 'marginal_nhoi:ABA,HRW:0.8'.");
    m.def(
        "sweep",
        [](const ObservedTable& table, const std::string& assumption, const std::vector<double>& xis, double level) {
            py::list out;
            for (const auto& entry : sensitivity_sweep(table, assumption_for(table, assumption), xis, level)) {
                py::dict row;
                row["xi"] = entry.xi;
                if (entry.result) row["estimate"] = to_python(to_json(*entry.result, table.list_names()));
                else row["note"] = entry.note;
                out.append(row);
            }
            return out;
        },
        py::arg("table"), py::arg("assumption"), py::arg("xis"), py::arg("level") = 0.95);
    m.def(
        "invert_xi",
        [](const ObservedTable& table, const std::string& assumption, double target, double lo, double hi) {
            return invert_xi(table, assumption_for(table, assumption), target, lo, hi);
        },
        py::arg("table"), py::arg("assumption"), py::arg("target"), py::arg("lo") = 0.05, py::arg("hi") = 20.0);
    m.def(
        "unobserved_prob",
        [](const ObservedTable& table, const std::string& assumption) {
            return unobserved_prob(assumption_for(table, assumption), observed_proportions(table));
        },
        py::arg("table"), py::arg("assumption"));

    m.def("bayes", &bayes_dict, py::arg("table"), py::arg("assumption") = "nhoi", py::arg("prior") = "scale",
          py::arg("draws") = 200000, py::arg("seed") = kDefaultSeed, py::arg("threads") = 1,
          py::arg("levels") = std::vector<double>{0.95}, py::arg("alpha") = 1.0, py::arg("return_draws") = false,
          "Dirichlet working draws, rejection under the N prior, and exact N draws.");
    m.def(
        "prior_quantile", [](const std::string& prior, double p) { return prior_quantile(parse_prior(prior), p); },
        py::arg("prior"), py::arg("p"));
    m.def(
        "log_evidence",
        [](const std::string& prior, double pi0, std::int64_t n) { return log_evidence(parse_prior(prior), pi0, n); },
        py::arg("prior"), py::arg("pi0"), py::arg("n"));
    m.def(
        "log_evidence_max",
        [](const std::string& prior, std::int64_t n) { return log_evidence_max(parse_prior(prior), n); },
        py::arg("prior"), py::arg("n"));

    m.def(
        "cell_probs",
        [](std::vector<double> nu, std::vector<std::vector<double>> q) {
            const auto cells = cell_probs(make_lcm(std::move(nu), std::move(q)));
            py::dict out;
            out["pi0"] = cells.pi0;
            out["observed"] = cells.observed.values();
            out["full"] = cells.full;
            return out;
        },
        py::arg("nu"), py::arg("q"));
    m.def(
        "moment_vector",
        [](std::vector<double> nu, std::vector<std::vector<double>> q) {
            return moment_vector(make_lcm(std::move(nu), std::move(q)));
        },
        py::arg("nu"), py::arg("q"));
    m.def(
        "coefficient_matrix",
        [](int k) {
            const auto c = coefficient_matrix(k);
            std::vector<std::vector<int>> rows(c.dim(), std::vector<int>(c.dim()));
            for (std::uint32_t r = 1; r <= c.dim(); ++r) {
                for (std::uint32_t col = 1; col <= c.dim(); ++col) rows[r - 1][col - 1] = c.at(r, col);
            }
            return rows;
        },
        py::arg("num_lists"));
    m.def(
        "check_identifiability",
        [](int j, int k) {
            const auto v = check_conditional_identifiability(j, k);
            py::dict out;
            out["identifiable"] = v.identifiable;
            out["verdict"] = v.verdict;
            out["note"] = v.note;
            return out;
        },
        py::arg("num_classes"), py::arg("num_lists"));
    m.def(
        "counterexample",
        [](int j, int k, std::optional<double> alpha) {
            const auto pair = counterexample_pair(j, k, alpha.value_or(default_counterexample_alpha(j)));
            return to_python(to_json(pair, verify_counterexample(pair)));
        },
        py::arg("num_classes"), py::arg("num_lists"), py::arg("alpha") = py::none());
    m.def(
        "simulate_table",
        [](std::vector<double> nu, std::vector<std::vector<double>> q, std::int64_t population, std::uint64_t seed) {
            auto rng = substream(seed, Stream::Simulation, 0);
            return simulate_table(make_lcm(std::move(nu), std::move(q)), population, rng);
        },
        py::arg("nu"), py::arg("q"), py::arg("population"), py::arg("seed") = kDefaultSeed,
        "Returns (table, true_n0).");
    m.def(
        "simulation_study",
        [](std::vector<double> nu, std::vector<std::vector<double>> q, const py::function& estimator,
           std::int64_t population, int reps, const std::vector<double>& levels, const std::string& target,
           std::uint64_t seed, unsigned threads) {
            return study_dict(make_lcm(std::move(nu), std::move(q)), estimator, population, reps, levels, target, seed,
                              threads);
        },
        py::arg("nu"), py::arg("q"), py::arg("estimator"), py::arg("population") = 10000, py::arg("reps") = 200,
        py::arg("levels") = std::vector<double>{0.95, 0.5}, py::arg("target") = "population_size",
        py::arg("seed") = kDefaultSeed, py::arg("threads") = 1,
        "estimator(table, seed) must return (point, [(level, lo, hi), ...]).");
}
