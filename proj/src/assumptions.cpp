#include "mse/assumptions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mse/errors.hpp"

namespace mse {

IdentifyingAssumption IdentifyingAssumption::nhoi(double xi) {
    IdentifyingAssumption a;
    a.kind = AssumptionKind::Nhoi;
    a.xi = xi;
    return a;
}

IdentifyingAssumption IdentifyingAssumption::marginal_nhoi(std::vector<int> subset, double xi) {
    IdentifyingAssumption a;
    a.kind = AssumptionKind::MarginalNhoi;
    std::sort(subset.begin(), subset.end());
    a.subset = std::move(subset);
    a.xi = xi;
    return a;
}

IdentifyingAssumption IdentifyingAssumption::with_xi(double new_xi) const {
    auto copy = *this;
    copy.xi = new_xi;
    return copy;
}

double IdentifyingAssumption::lambda(int num_lists) const {
    const double sign = (num_lists % 2 == 1) ? 1.0 : -1.0;  // (-1)^(K+1)
    return sign * std::log(xi);
}

std::string IdentifyingAssumption::describe(const std::vector<std::string>& list_names) const {
    std::ostringstream os;
    if (kind == AssumptionKind::Nhoi) {
        os << "NHOI";
    } else {
        os << "marginal NHOI(";
        for (std::size_t i = 0; i < subset.size(); ++i) {
            if (i) os << ',';
            os << (subset[i] < static_cast<int>(list_names.size()) ? list_names[subset[i]]
                                                                  : std::to_string(subset[i]));
        }
        os << ')';
    }
    os << " xi=" << xi;
    return os.str();
}

void validate(const IdentifyingAssumption& a, int num_lists) {
    if (!(a.xi > 0.0) || !std::isfinite(a.xi)) {
        throw Error(ErrorCode::InvalidArgument, "xi must be a finite positive number");
    }
    if (a.kind == AssumptionKind::Nhoi) {
        if (!a.subset.empty()) throw Error(ErrorCode::InvalidArgument, "NHOI takes no subset");
    } else {
        validate_subset(a.subset, num_lists);
    }
}

namespace {

// log(Pi_odd,+ / Pi_even,+) over the marginal table, and pi~_{0+}.
struct MarginalRatio {
    double log_ratio;
    double zero_margin;
};

MarginalRatio marginal_ratio(const IdentifyingAssumption& a, const ObservedProbs& probs) {
    const auto marginal = marginal_probs(probs, a.subset);
    const auto products = odd_even_products(marginal.probs);
    return {products.log_ratio(), marginal.zero_margin};
}

}  // namespace

DomainReport in_domain(const IdentifyingAssumption& a, const ObservedProbs& probs) {
    validate(a, probs.num_lists());
    if (a.kind == AssumptionKind::Nhoi) {
        odd_even_products(probs.values());  // zero-cell policing only
        return {};
    }
    const auto m = marginal_ratio(a, probs);
    if (!(m.zero_margin > 0.0)) {
        // No mass outside the subset lists: the ratio is unbounded.
        return {true, std::numeric_limits<double>::infinity()};
    }
    const double margin = std::exp(m.log_ratio - std::log(m.zero_margin)) - a.xi;
    return {margin > 0.0, margin};
}

double unobserved_odds(const IdentifyingAssumption& a, const ObservedProbs& probs) {
    validate(a, probs.num_lists());
    if (a.kind == AssumptionKind::Nhoi) {
        return std::exp(odd_even_products(probs.values()).log_ratio() - std::log(a.xi));
    }
    const auto m = marginal_ratio(a, probs);
    const double margin = std::exp(m.log_ratio) - a.xi * m.zero_margin;
    if (!(margin > 0.0)) {
        throw OutsideDomainError(
            m.zero_margin > 0.0 ? margin / m.zero_margin : margin,
            "observed probabilities lie outside the domain of " + a.describe({}) +
                " (marginal ratio does not exceed xi)");
    }
    return margin / a.xi;
}

double unobserved_prob(const IdentifyingAssumption& a, const ObservedProbs& probs) {
    const double g = unobserved_odds(a, probs);
    return g / (1.0 + g);
}

double implied_xi(const ObservedProbs& probs, double pi0, const IdentifyingAssumption& family) {
    if (!(pi0 > 0.0 && pi0 < 1.0)) throw Error(ErrorCode::InvalidPi0, "pi0 must lie in (0, 1)");
    const double scale = 1.0 - pi0;
    if (family.kind == AssumptionKind::Nhoi) {
        // Full table over all 2^K cells, the zero cell (even) included.
        auto products = odd_even_products(probs.values());
        const double half = std::ldexp(1.0, probs.num_lists() - 1);  // cells per parity class
        const double log_odd = products.log_odd + (half)*std::log(scale);
        const double log_even = products.log_even + (half - 1.0) * std::log(scale) + std::log(pi0);
        return std::exp(log_odd - log_even);
    }
    validate_subset(family.subset, probs.num_lists());
    const auto marginal = marginal_probs(probs, family.subset);
    std::vector<double> full(marginal.probs.size());
    for (std::size_t i = 0; i < full.size(); ++i) full[i] = marginal.probs[i] * scale;
    const auto products = odd_even_products(full);
    const double zero_cell = pi0 + scale * marginal.zero_margin;
    return std::exp(products.log_odd - products.log_even - std::log(zero_cell));
}

IdentifyingAssumption assumption_from_json(const nlohmann::json& doc,
                                           const std::vector<std::string>& list_names) {
    try {
        const auto kind = doc.at("kind").get<std::string>();
        const double xi = doc.value("xi", 1.0);
        if (kind == "nhoi") return IdentifyingAssumption::nhoi(xi);
        if (kind == "marginal_nhoi") {
            std::vector<int> idx;
            for (const auto& item : doc.at("subset")) {
                if (item.is_number_integer()) {
                    idx.push_back(item.get<int>());
                } else {
                    const auto name = item.get<std::string>();
                    auto it = std::find(list_names.begin(), list_names.end(), name);
                    if (it == list_names.end()) {
                        throw Error(ErrorCode::InvalidSubset, "unknown list '" + name + "'");
                    }
                    idx.push_back(static_cast<int>(it - list_names.begin()));
                }
            }
            auto a = IdentifyingAssumption::marginal_nhoi(std::move(idx), xi);
            validate(a, static_cast<int>(list_names.size()));
            return a;
        }
        throw Error(ErrorCode::ParseError, "unknown assumption kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("malformed assumption: ") + e.what());
    }
}

nlohmann::json assumption_to_json(const IdentifyingAssumption& a,
                                  const std::vector<std::string>& list_names) {
    if (a.kind == AssumptionKind::Nhoi) return {{"kind", "nhoi"}, {"xi", a.xi}};
    std::vector<std::string> names;
    for (int s : a.subset) names.push_back(list_names.at(s));
    return {{"kind", "marginal_nhoi"}, {"subset", names}, {"xi", a.xi}};
}

IdentifyingAssumption parse_assumption(const std::string& text,
                                       const std::vector<std::string>& list_names) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    if (parts.empty()) throw Error(ErrorCode::ParseError, "empty assumption");

    auto parse_xi = [](const std::string& s) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw Error(ErrorCode::ParseError, "invalid xi '" + s + "'");
        }
    };

    if (parts[0] == "nhoi") {
        if (parts.size() > 2) throw Error(ErrorCode::ParseError, "nhoi takes at most one argument");
        return IdentifyingAssumption::nhoi(parts.size() == 2 ? parse_xi(parts[1]) : 1.0);
    }
    if (parts[0] == "marginal_nhoi" || parts[0] == "marginal") {
        if (parts.size() < 2 || parts.size() > 3) {
            throw Error(ErrorCode::ParseError, "expected marginal_nhoi:LIST,LIST[:xi]");
        }
        nlohmann::json doc = {{"kind", "marginal_nhoi"}, {"subset", nlohmann::json::array()}};
        std::stringstream names(parts[1]);
        std::string name;
        while (std::getline(names, name, ',')) doc["subset"].push_back(name);
        if (parts.size() == 3) doc["xi"] = parse_xi(parts[2]);
        return assumption_from_json(doc, list_names);
    }
    throw Error(ErrorCode::ParseError, "unknown assumption '" + parts[0] + "'");
}

}  // namespace mse
