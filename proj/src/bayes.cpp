#include "mse/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mse/errors.hpp"
#include "mse/table_io.hpp"

namespace mse {

namespace {

constexpr double kPi0Lower = 1e-12;
constexpr double kPi0Upper = 1.0 - 1e-12;
constexpr double kSafety = 1e-9;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double log_choose(double n, double k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double log_sum_exp(std::span<const double> xs) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double x : xs) hi = std::max(hi, x);
    if (!std::isfinite(hi)) return hi;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - hi);
    return hi + std::log(s);
}

void check_pi0(double pi0) {
    if (!(pi0 > 0.0 && pi0 < 1.0)) {
        throw Error(ErrorCode::InvalidPi0, "pi0 must lie in (0, 1), got " + std::to_string(pi0));
    }
}

std::int64_t truncated_max(const TruncatedPrior& p) {
    return static_cast<std::int64_t>(p.weights.size()) - 1;
}

// log of C(N, n) pi0^(N-n) (1-pi0)^n p(N) for N = n..N_max.
std::vector<double> truncated_log_terms(const TruncatedPrior& p, double pi0, std::int64_t n) {
    const double total = std::accumulate(p.weights.begin(), p.weights.end(), 0.0);
    std::vector<double> terms;
    for (std::int64_t big_n = n; big_n <= truncated_max(p); ++big_n) {
        const double w = p.weights[static_cast<std::size_t>(big_n)];
        if (!(w > 0.0)) {
            terms.push_back(-std::numeric_limits<double>::infinity());
            continue;
        }
        terms.push_back(log_choose(static_cast<double>(big_n), static_cast<double>(n)) +
                        static_cast<double>(big_n - n) * std::log(pi0) +
                        static_cast<double>(n) * std::log1p(-pi0) + std::log(w / total));
    }
    return terms;
}

void check_feasible(const NPrior& prior, std::int64_t n) {
    if (n < 0) throw Error(ErrorCode::InvalidArgument, "observed total must be >= 0");
    std::visit(Overloaded{
                   [](const PoissonPrior&) {},
                   [](const NegBinomialPrior&) {},
                   [n](const BinomialPrior& p) {
                       if (n > p.size) {
                           throw Error(ErrorCode::Infeasible, "binomial prior size " +
                                                                  std::to_string(p.size) +
                                                                  " is below n = " + std::to_string(n));
                       }
                   },
                   [n](const FienbergPrior& p) {
                       if (p.ell > n) {
                           throw Error(ErrorCode::Infeasible,
                                       "Fienberg prior with ell = " + std::to_string(p.ell) +
                                           " needs n >= ell");
                       }
                   },
                   [n](const TruncatedPrior& p) {
                       if (n > truncated_max(p)) {
                           throw Error(ErrorCode::Infeasible, "n exceeds the truncation point");
                       }
                   },
               },
               prior);
}

// Golden-section maximization of a (unimodal) function on [lo, hi], seeded
// by a coarse grid so that a boundary maximum is found too.
double golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tol) {
    constexpr int kGrid = 64;
    double best_x = lo;
    double best_f = f(lo);
    for (int i = 1; i <= kGrid; ++i) {
        const double x = lo + (hi - lo) * i / kGrid;
        const double fx = f(x);
        if (fx > best_f) {
            best_f = fx;
            best_x = x;
        }
    }
    const double step = (hi - lo) / kGrid;
    double a = std::max(lo, best_x - step);
    double b = std::min(hi, best_x + step);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return std::max({best_f, fc, fd, f(0.5 * (a + b))});
}

}  // namespace

void validate(const NPrior& prior) {
    std::visit(Overloaded{
                   [](const PoissonPrior& p) {
                       if (!(p.mean > 0.0)) throw Error(ErrorCode::InvalidArgument, "Poisson mean must be > 0");
                   },
                   [](const NegBinomialPrior& p) {
                       if (!(p.mean > 0.0) || !(p.dispersion > 0.0)) {
                           throw Error(ErrorCode::InvalidArgument, "negative binomial needs M > 0 and a > 0");
                       }
                   },
                   [](const BinomialPrior& p) {
                       if (p.size < 0 || !(p.prob > 0.0 && p.prob < 1.0)) {
                           throw Error(ErrorCode::InvalidArgument, "binomial needs M >= 0 and q in (0, 1)");
                       }
                   },
                   [](const FienbergPrior& p) {
                       if (p.ell < 0) throw Error(ErrorCode::InvalidArgument, "Fienberg ell must be >= 0");
                   },
                   [](const TruncatedPrior& p) {
                       if (p.weights.empty()) throw Error(ErrorCode::InvalidArgument, "empty truncated prior");
                       double total = 0.0;
                       for (double w : p.weights) {
                           if (!(w >= 0.0) || !std::isfinite(w)) {
                               throw Error(ErrorCode::InvalidArgument, "truncated prior weights must be >= 0");
                           }
                           total += w;
                       }
                       if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "truncated prior has no mass");
                   },
               },
               prior);
}

TruncatedPrior beta_binomial_prior(std::int64_t n_max, double alpha, double beta) {
    if (n_max < 1 || !(alpha > 0.0) || !(beta > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "beta-binomial needs N_max >= 1, alpha > 0, beta > 0");
    }
    TruncatedPrior prior;
    prior.label = "betabinomial";
    prior.weights.resize(static_cast<std::size_t>(n_max) + 1);
    const double log_beta_ab = std::lgamma(alpha) + std::lgamma(beta) - std::lgamma(alpha + beta);
    for (std::int64_t k = 0; k <= n_max; ++k) {
        const double dk = static_cast<double>(k);
        const double dn = static_cast<double>(n_max);
        const double log_p = log_choose(dn, dk) + std::lgamma(dk + alpha) + std::lgamma(dn - dk + beta) -
                             std::lgamma(dn + alpha + beta) - log_beta_ab;
        prior.weights[static_cast<std::size_t>(k)] = std::exp(log_p);
    }
    return prior;
}

NPrior parse_prior(const std::string& text) {
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    std::vector<double> args;
    if (colon != std::string::npos) {
        std::stringstream ss(text.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t pos = 0;
                args.push_back(std::stod(item, &pos));
                if (pos != item.size()) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw Error(ErrorCode::ParseError, "invalid prior argument '" + item + "'");
            }
        }
    }
    auto need = [&](std::size_t count) {
        if (args.size() != count) {
            throw Error(ErrorCode::ParseError, "prior '" + name + "' takes " + std::to_string(count) +
                                                   " argument(s)");
        }
    };
    auto as_int = [](double v) {
        if (v != std::floor(v)) throw Error(ErrorCode::ParseError, "expected an integer prior argument");
        return static_cast<std::int64_t>(v);
    };
    NPrior prior;
    if (name == "poisson") {
        need(1);
        prior = PoissonPrior{args[0]};
    } else if (name == "nb" || name == "negbin") {
        need(2);
        prior = NegBinomialPrior{args[0], args[1]};
    } else if (name == "binomial") {
        need(2);
        prior = BinomialPrior{as_int(args[0]), args[1]};
    } else if (name == "fienberg") {
        need(1);
        prior = FienbergPrior{static_cast<int>(as_int(args[0]))};
    } else if (name == "scale") {
        need(0);
        prior = FienbergPrior{1};
    } else if (name == "uniform") {
        need(0);
        prior = FienbergPrior{0};
    } else if (name == "betabinomial") {
        need(3);
        prior = beta_binomial_prior(as_int(args[0]), args[1], args[2]);
    } else {
        throw Error(ErrorCode::ParseError, "unknown prior '" + name + "'");
    }
    validate(prior);
    return prior;
}

nlohmann::json prior_to_json(const NPrior& prior) {
    return std::visit(Overloaded{
                          [](const PoissonPrior& p) -> nlohmann::json {
                              return {{"family", "poisson"}, {"mean", p.mean}};
                          },
                          [](const NegBinomialPrior& p) -> nlohmann::json {
                              return {{"family", "negative_binomial"}, {"mean", p.mean}, {"dispersion", p.dispersion}};
                          },
                          [](const BinomialPrior& p) -> nlohmann::json {
                              return {{"family", "binomial"}, {"size", p.size}, {"prob", p.prob}};
                          },
                          [](const FienbergPrior& p) -> nlohmann::json {
                              return {{"family", "fienberg"}, {"ell", p.ell}};
                          },
                          [](const TruncatedPrior& p) -> nlohmann::json {
                              return {{"family", p.label}, {"n_max", truncated_max(p)}};
                          },
                      },
                      prior);
}

std::string prior_name(const NPrior& prior) {
    return prior_to_json(prior).at("family").get<std::string>();
}

double log_evidence(const NPrior& prior, double pi0, std::int64_t n) {
    check_pi0(pi0);
    check_feasible(prior, n);
    const double dn = static_cast<double>(n);
    const double keep = 1.0 - pi0;
    return std::visit(
        Overloaded{
            // Pois((1 - pi0) M)
            [&](const PoissonPrior& p) {
                const double lambda = keep * p.mean;
                return dn * std::log(lambda) - lambda - std::lgamma(dn + 1.0);
            },
            // NB(a, (1 - pi0) M / ((1 - pi0) M + a))
            [&](const NegBinomialPrior& p) {
                const double lambda = keep * p.mean;
                const double a = p.dispersion;
                return std::lgamma(dn + a) - std::lgamma(a) - std::lgamma(dn + 1.0) +
                       dn * std::log(lambda / (lambda + a)) + a * std::log(a / (lambda + a));
            },
            // Bin(M, (1 - pi0) q)
            [&](const BinomialPrior& p) {
                const double theta = keep * p.prob;
                const double m = static_cast<double>(p.size);
                return log_choose(m, dn) + dn * std::log(theta) + (m - dn) * std::log1p(-theta);
            },
            // (n - ell)!/n! (1 - pi0)^(ell - 1)
            [&](const FienbergPrior& p) {
                const double ell = static_cast<double>(p.ell);
                return std::lgamma(dn - ell + 1.0) - std::lgamma(dn + 1.0) + (ell - 1.0) * std::log(keep);
            },
            [&](const TruncatedPrior& p) {
                const auto terms = truncated_log_terms(p, pi0, n);
                return log_sum_exp(terms);
            },
        },
        prior);
}

double evidence(const NPrior& prior, double pi0, std::int64_t n) {
    return std::exp(log_evidence(prior, pi0, n));
}

double log_evidence_max(const NPrior& prior, std::int64_t n) {
    check_feasible(prior, n);
    const double dn = static_cast<double>(n);
    auto numeric = [&] {
        const auto f = [&](double pi0) { return log_evidence(prior, pi0, n); };
        return golden_section_max(f, kPi0Lower, kPi0Upper, 1e-10) + std::log1p(kSafety);
    };
    return std::visit(
        Overloaded{
            [&](const PoissonPrior& p) {
                const double lambda = std::min(dn, p.mean);
                if (!(lambda > 0.0)) return 0.0;  // n = 0: pmf -> 1 as lambda -> 0
                return dn * std::log(lambda) - lambda - std::lgamma(dn + 1.0);
            },
            [&](const NegBinomialPrior&) { return numeric(); },
            [&](const BinomialPrior&) { return numeric(); },
            [&](const FienbergPrior& p) {
                if (p.ell == 0) {
                    throw Error(ErrorCode::UnboundedEvidence,
                                "the improper uniform prior has unbounded evidence as pi0 -> 1; "
                                "rejection sampling is impossible");
                }
                const double ell = static_cast<double>(p.ell);
                return std::lgamma(dn - ell + 1.0) - std::lgamma(dn + 1.0);
            },
            [&](const TruncatedPrior&) { return numeric(); },
        },
        prior);
}

double evidence_max(const NPrior& prior, std::int64_t n) { return std::exp(log_evidence_max(prior, n)); }

std::int64_t draw_population(const NPrior& prior, std::int64_t n, double pi0, Engine& rng) {
    check_pi0(pi0);
    check_feasible(prior, n);
    const double dn = static_cast<double>(n);
    return std::visit(
        Overloaded{
            // n + Pois(pi0 M)
            [&](const PoissonPrior& p) { return n + draw_poisson(rng, pi0 * p.mean); },
            // n + NB(n + a, M pi0 / (M + a))
            [&](const NegBinomialPrior& p) {
                return n + draw_negative_binomial(rng, dn + p.dispersion,
                                                  p.mean * pi0 / (p.mean + p.dispersion));
            },
            // n + Bin(M - n, pi0 q / (pi0 q + 1 - q))
            [&](const BinomialPrior& p) {
                const double q = pi0 * p.prob / (pi0 * p.prob + 1.0 - p.prob);
                return n + draw_binomial(rng, p.size - n, q);
            },
            // n + NB(n - ell + 1, pi0)
            [&](const FienbergPrior& p) {
                return n + draw_negative_binomial(rng, dn - p.ell + 1.0, pi0);
            },
            [&](const TruncatedPrior& p) {
                const auto terms = truncated_log_terms(p, pi0, n);
                const double log_total = log_sum_exp(terms);
                if (!std::isfinite(log_total)) {
                    throw Error(ErrorCode::Infeasible, "truncated prior has no mass at or above n");
                }
                std::uniform_real_distribution<double> unif(0.0, 1.0);
                const double u = unif(rng);
                double cumulative = 0.0;
                for (std::size_t i = 0; i < terms.size(); ++i) {
                    cumulative += std::exp(terms[i] - log_total);
                    if (u <= cumulative) return n + static_cast<std::int64_t>(i);
                }
                return truncated_max(p);
            },
        },
        prior);
}

std::int64_t prior_quantile(const NPrior& prior, double prob) {
    if (!(prob > 0.0 && prob < 1.0)) throw Error(ErrorCode::InvalidArgument, "quantile level must lie in (0, 1)");
    validate(prior);
    auto log_pmf = std::visit(
        Overloaded{
            [](const PoissonPrior& p) -> std::function<double(std::int64_t)> {
                return [p](std::int64_t k) {
                    const double dk = static_cast<double>(k);
                    return dk * std::log(p.mean) - p.mean - std::lgamma(dk + 1.0);
                };
            },
            [](const NegBinomialPrior& p) -> std::function<double(std::int64_t)> {
                return [p](std::int64_t k) {
                    const double dk = static_cast<double>(k);
                    const double a = p.dispersion;
                    return std::lgamma(dk + a) - std::lgamma(a) - std::lgamma(dk + 1.0) +
                           dk * std::log(p.mean / (p.mean + a)) + a * std::log(a / (p.mean + a));
                };
            },
            [](const BinomialPrior& p) -> std::function<double(std::int64_t)> {
                return [p](std::int64_t k) {
                    const double dk = static_cast<double>(k);
                    const double m = static_cast<double>(p.size);
                    if (k > p.size) return -std::numeric_limits<double>::infinity();
                    return log_choose(m, dk) + dk * std::log(p.prob) + (m - dk) * std::log1p(-p.prob);
                };
            },
            [](const FienbergPrior&) -> std::function<double(std::int64_t)> {
                throw Error(ErrorCode::InvalidArgument, "improper priors have no quantiles");
            },
            [](const TruncatedPrior& p) -> std::function<double(std::int64_t)> {
                const double total = std::accumulate(p.weights.begin(), p.weights.end(), 0.0);
                return [p, total](std::int64_t k) {
                    if (k > truncated_max(p)) return -std::numeric_limits<double>::infinity();
                    return std::log(p.weights[static_cast<std::size_t>(k)] / total);
                };
            },
        },
        prior);
    double cumulative = 0.0;
    for (std::int64_t k = 0;; ++k) {
        cumulative += std::exp(log_pmf(k));
        if (cumulative >= prob) return k;
        if (k > 1'000'000'000) throw Error(ErrorCode::InvalidArgument, "quantile search did not terminate");
    }
}

std::vector<ObservedProbs> dirichlet_cond_posterior(const ObservedTable& table,
                                                    std::span<const double> alpha, std::size_t draws,
                                                    const SamplerOptions& options) {
    if (draws < 1) throw Error(ErrorCode::InvalidArgument, "at least one draw is required");
    const std::size_t cells = table.counts().size();
    std::vector<double> shape(cells, 1.0);
    if (!alpha.empty()) {
        if (alpha.size() != cells) {
            throw Error(ErrorCode::InvalidArgument, "alpha must have 2^K - 1 entries");
        }
        std::copy(alpha.begin(), alpha.end(), shape.begin());
    }
    for (std::size_t i = 0; i < cells; ++i) {
        if (!(shape[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "Dirichlet alpha must be > 0");
        shape[i] += static_cast<double>(table.counts()[i]);
    }

    std::vector<std::vector<double>> raw(draws);
    parallel_chunks(draws, kDrawChunkSize, options.threads,
                    [&](std::size_t chunk, std::size_t begin, std::size_t end) {
                        auto rng = substream(options.seed, Stream::Dirichlet, chunk);
                        for (std::size_t t = begin; t < end; ++t) {
                            std::vector<double> x(cells);
                            double sum = 0.0;
                            for (std::size_t i = 0; i < cells; ++i) {
                                x[i] = draw_gamma(rng, shape[i], 1.0);
                                sum += x[i];
                            }
                            for (auto& v : x) v /= sum;
                            raw[t] = std::move(x);
                        }
                    });
    std::vector<ObservedProbs> out;
    out.reserve(draws);
    for (auto& x : raw) out.emplace_back(table.num_lists(), std::move(x));
    return out;
}

std::string cell_column_name(std::uint32_t code, int num_lists) {
    std::string bits(static_cast<std::size_t>(num_lists), '0');
    for (int k = 0; k < num_lists; ++k) {
        if ((code >> k) & 1U) bits[static_cast<std::size_t>(num_lists - 1 - k)] = '1';
    }
    return "p_" + bits;
}

std::vector<ObservedProbs> import_working_draws(std::istream& in, DrawFormat format, int num_lists) {
    if (num_lists < 2 || num_lists > kMaxLists) throw Error(ErrorCode::InvalidArgument, "invalid list count");
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) {
            header = split_csv_line(line);
            break;
        }
    }
    if (header.empty()) throw Error(ErrorCode::ParseError, "empty draw file");

    const std::size_t cells = num_observed_cells(num_lists);
    // column -> code; -1 for ignored columns (e.g. an iteration index)
    std::vector<long> column_code(header.size(), -1);
    std::vector<bool> present(cells + 1, false);
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto& name = header[c];
        if (name.rfind("p_", 0) != 0) continue;
        const auto bits = name.substr(2);
        if (static_cast<int>(bits.size()) != num_lists ||
            bits.find_first_not_of("01") != std::string::npos) {
            throw Error(ErrorCode::ParseError, "column '" + name + "' is not a " +
                                                   std::to_string(num_lists) + "-list cell code");
        }
        const auto code = std::stoul(bits, nullptr, 2);
        if (present[code]) throw Error(ErrorCode::DuplicateCell, "column '" + name + "' repeated");
        present[code] = true;
        column_code[c] = static_cast<long>(code);
    }
    for (std::uint32_t code = 1; code <= cells; ++code) {
        if (!present[code]) {
            throw Error(ErrorCode::ParseError, "missing column " + cell_column_name(code, num_lists));
        }
    }
    const bool full = format == DrawFormat::FullProbs;
    if (full != present[0]) {
        throw Error(ErrorCode::ParseError, full ? "full_probs draws need a " + cell_column_name(0, num_lists) +
                                                      " column"
                                                : "observed_probs draws must not include the zero cell");
    }

    std::vector<ObservedProbs> draws;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw Error(ErrorCode::MalformedDraw, "row " + std::to_string(row) + ": wrong field count");
        }
        std::vector<double> probs(cells, 0.0);
        double zero_cell = 0.0;
        double sum = 0.0;
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (column_code[c] < 0) continue;
            double v = 0.0;
            try {
                std::size_t pos = 0;
                v = std::stod(fields[c], &pos);
                if (pos != fields[c].size()) throw std::invalid_argument(fields[c]);
            } catch (const std::exception&) {
                throw Error(ErrorCode::MalformedDraw, "row " + std::to_string(row) + ": bad value '" +
                                                          fields[c] + "'");
            }
            if (!(v >= 0.0 && v <= 1.0)) {
                throw Error(ErrorCode::MalformedDraw, "row " + std::to_string(row) + ": probability out of [0, 1]");
            }
            sum += v;
            if (column_code[c] == 0) {
                zero_cell = v;
            } else {
                probs[static_cast<std::size_t>(column_code[c]) - 1] = v;
            }
        }
        if (std::abs(sum - 1.0) > 1e-6) {
            throw Error(ErrorCode::MalformedDraw,
                        "row " + std::to_string(row) + ": probabilities sum to " + std::to_string(sum));
        }
        const double observed_mass = sum - zero_cell;
        if (!(observed_mass > 0.0)) {
            throw Error(ErrorCode::MalformedDraw, "row " + std::to_string(row) + ": no observed mass");
        }
        // Full draws are conditioned on being observed; both formats are
        // renormalized exactly so downstream sums hold to rounding.
        for (auto& p : probs) p /= observed_mass;
        draws.emplace_back(num_lists, std::move(probs));
    }
    return draws;
}

void export_working_draws(std::ostream& out, std::span<const ObservedProbs> draws) {
    if (draws.empty()) return;
    const int k = draws.front().num_lists();
    for (std::uint32_t code = 1; code <= draws.front().size(); ++code) {
        out << (code > 1 ? "," : "") << cell_column_name(code, k);
    }
    out << '\n';
    out.precision(17);
    for (const auto& d : draws) {
        for (std::size_t i = 0; i < d.size(); ++i) out << (i ? "," : "") << d.values()[i];
        out << '\n';
    }
}

RejectionResult rejection_filter(std::span<const ObservedProbs> draws, const IdentifyingAssumption& a,
                                 const NPrior& prior, std::int64_t n, const SamplerOptions& options) {
    validate(prior);
    const double log_max = log_evidence_max(prior, n);
    std::vector<char> keep(draws.size(), 0);
    std::vector<char> domain(draws.size(), 0);
    std::vector<double> pi0(draws.size(), 0.0);
    parallel_chunks(draws.size(), kDrawChunkSize, options.threads,
                    [&](std::size_t chunk, std::size_t begin, std::size_t end) {
                        auto rng = substream(options.seed, Stream::Rejection, chunk);
                        std::uniform_real_distribution<double> unif(0.0, 1.0);
                        for (std::size_t t = begin; t < end; ++t) {
                            const double u = unif(rng);
                            if (!in_domain(a, draws[t]).in_domain) continue;
                            domain[t] = 1;
                            const double p0 = unobserved_prob(a, draws[t]);
                            if (!(p0 > 0.0 && p0 < 1.0)) continue;
                            const double ratio =
                                std::clamp(std::exp(log_evidence(prior, p0, n) - log_max), 0.0, 1.0);
                            if (u < ratio) {
                                keep[t] = 1;
                                pi0[t] = p0;
                            }
                        }
                    });
    RejectionResult result;
    result.proposed = draws.size();
    for (std::size_t t = 0; t < draws.size(); ++t) {
        result.in_domain += domain[t] ? 1 : 0;
        if (keep[t]) {
            result.accepted.push_back(draws[t]);
            result.pi0.push_back(pi0[t]);
        }
    }
    result.acceptance_rate =
        draws.empty() ? 0.0 : static_cast<double>(result.accepted.size()) / static_cast<double>(draws.size());
    result.low_acceptance = result.acceptance_rate < 1e-4;
    return result;
}

PosteriorDraws posterior_population(std::span<const ObservedProbs> accepted,
                                    const IdentifyingAssumption& a, const NPrior& prior,
                                    std::int64_t n, const SamplerOptions& options) {
    if (accepted.empty()) throw Error(ErrorCode::NoAcceptedDraws, "no accepted draws of pi~");
    PosteriorDraws out;
    out.seed = options.seed;
    out.n_draws.resize(accepted.size());
    out.pi0_draws.resize(accepted.size());
    parallel_chunks(accepted.size(), kDrawChunkSize, options.threads,
                    [&](std::size_t chunk, std::size_t begin, std::size_t end) {
                        auto rng = substream(options.seed, Stream::PopulationDraw, chunk);
                        for (std::size_t t = begin; t < end; ++t) {
                            const double p0 = unobserved_prob(a, accepted[t]);
                            out.pi0_draws[t] = p0;
                            out.n_draws[t] = draw_population(prior, n, p0, rng);
                        }
                    });
    return out;
}

double interpolated_quantile(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of an empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

PosteriorSummary summarize(std::span<const double> values, std::span<const double> levels) {
    if (values.empty()) throw Error(ErrorCode::InvalidArgument, "cannot summarize zero draws");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    PosteriorSummary s;
    s.draws = sorted.size();
    // Neumaier summation keeps the mean independent of draw order.
    double sum = 0.0;
    double comp = 0.0;
    for (double v : sorted) {
        const double t = sum + v;
        comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    s.mean = (sum + comp) / static_cast<double>(sorted.size());
    s.median = interpolated_quantile(sorted, 0.5);
    for (double level : levels) {
        if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::InvalidArgument, "interval level must lie in (0, 1)");
        const double tail = (1.0 - level) / 2.0;
        s.intervals.push_back(
            {level, interpolated_quantile(sorted, tail), interpolated_quantile(sorted, 1.0 - tail)});
    }
    return s;
}

PosteriorSummary summarize(const PosteriorDraws& draws, std::span<const double> levels) {
    std::vector<double> values(draws.n_draws.begin(), draws.n_draws.end());
    return summarize(values, levels);
}

BayesRun run_bayes(std::span<const ObservedProbs> working_draws, const IdentifyingAssumption& a,
                   const NPrior& prior, std::int64_t n, std::span<const double> levels,
                   const SamplerOptions& options) {
    auto filtered = rejection_filter(working_draws, a, prior, n, options);
    BayesRun run;
    run.proposed = filtered.proposed;
    run.accepted = filtered.accepted.size();
    run.low_acceptance = filtered.low_acceptance;
    run.posterior = posterior_population(filtered.accepted, a, prior, n, options);
    run.posterior.acceptance_rate = filtered.acceptance_rate;
    run.summary = summarize(run.posterior, levels);
    return run;
}

BayesRun run_bayes_dirichlet(const ObservedTable& table, const IdentifyingAssumption& a, const NPrior& prior,
                             std::size_t draws, std::span<const double> levels,
                             const SamplerOptions& options, double alpha) {
    validate(a, table.num_lists());
    const std::vector<double> shape(table.counts().size(), alpha);
    const auto working = dirichlet_cond_posterior(table, shape, draws, options);
    return run_bayes(working, a, prior, table.total(), levels, options);
}

void write_histogram_csv(std::ostream& out, const PosteriorDraws& draws, int bins) {
    if (bins < 1) throw Error(ErrorCode::InvalidArgument, "need at least one histogram bin");
    out << "bin_lo,bin_hi,count\n";
    if (draws.size() == 0) return;
    const auto [lo_it, hi_it] = std::minmax_element(draws.n_draws.begin(), draws.n_draws.end());
    const double lo = static_cast<double>(*lo_it);
    const double width = std::max(1.0, (static_cast<double>(*hi_it) + 1.0 - lo) / bins);
    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    for (auto v : draws.n_draws) {
        auto b = static_cast<std::size_t>((static_cast<double>(v) - lo) / width);
        counts[std::min(b, counts.size() - 1)] += 1;
    }
    out.precision(17);
    for (std::size_t b = 0; b < counts.size(); ++b) {
        out << lo + width * static_cast<double>(b) << ',' << lo + width * static_cast<double>(b + 1) << ','
            << counts[b] << '\n';
    }
}

void write_posterior_csv(std::ostream& out, const PosteriorDraws& draws) {
    out << "t,N,pi0\n";
    out.precision(17);
    for (std::size_t t = 0; t < draws.size(); ++t) {
        out << t + 1 << ',' << draws.n_draws[t] << ',' << draws.pi0_draws[t] << '\n';
    }
}

nlohmann::json to_json(const BayesRun& run) {
    nlohmann::json intervals = nlohmann::json::array();
    for (const auto& iv : run.summary.intervals) {
        intervals.push_back({{"level", iv.level}, {"lo", iv.lo}, {"hi", iv.hi}});
    }
    nlohmann::json out = {
        {"mean", run.summary.mean},
        {"median", run.summary.median},
        {"intervals", intervals},
        {"acceptance_rate", run.posterior.acceptance_rate},
        {"proposed", run.proposed},
        {"accepted", run.accepted},
        {"seed", run.posterior.seed},
    };
    if (run.low_acceptance) out["warning"] = "acceptance rate below 1e-4";
    return out;
}

}  // namespace mse
