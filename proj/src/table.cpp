#include "mse/table.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mse/errors.hpp"

namespace mse {

namespace {

void check_num_lists(int num_lists) {
    if (num_lists < 2 || num_lists > kMaxLists) {
        throw Error(ErrorCode::InvalidArgument,
                    "number of lists must be in [2, " + std::to_string(kMaxLists) + "], got " +
                        std::to_string(num_lists));
    }
}

}  // namespace

InclusionPattern::InclusionPattern(std::uint32_t code, int num_lists)
    : code_(code), num_lists_(num_lists) {
    if (num_lists < 1 || num_lists > kMaxLists) {
        throw Error(ErrorCode::InvalidArgument, "pattern length out of range");
    }
    if (code >= (std::uint32_t{1} << num_lists)) {
        throw Error(ErrorCode::InvalidArgument, "pattern code exceeds 2^K - 1");
    }
}

InclusionPattern InclusionPattern::from_bits(std::span<const int> bits) {
    std::uint32_t code = 0;
    for (std::size_t k = 0; k < bits.size(); ++k) {
        if (bits[k] != 0 && bits[k] != 1) {
            throw Error(ErrorCode::ParseError, "inclusion flag must be 0 or 1");
        }
        code |= static_cast<std::uint32_t>(bits[k]) << k;
    }
    return InclusionPattern(code, static_cast<int>(bits.size()));
}

int InclusionPattern::popcount() const noexcept { return __builtin_popcount(code_); }

std::vector<int> InclusionPattern::bits() const {
    std::vector<int> out(num_lists_);
    for (int k = 0; k < num_lists_; ++k) out[k] = included(k) ? 1 : 0;
    return out;
}

InclusionPattern InclusionPattern::restrict_to(std::span<const int> subset) const {
    std::uint32_t g = 0;
    for (std::size_t i = 0; i < subset.size(); ++i) {
        if (included(subset[i])) g |= std::uint32_t{1} << i;
    }
    return InclusionPattern(g, static_cast<int>(subset.size()));
}

ObservedTable::ObservedTable(std::vector<std::string> list_names, std::vector<std::int64_t> counts)
    : list_names_(std::move(list_names)), counts_(std::move(counts)) {
    check_num_lists(num_lists());
    if (counts_.size() != num_observed_cells(num_lists())) {
        throw Error(ErrorCode::InvalidArgument,
                    "expected " + std::to_string(num_observed_cells(num_lists())) + " cells, got " +
                        std::to_string(counts_.size()));
    }
    for (std::size_t i = 0; i < list_names_.size(); ++i) {
        for (std::size_t j = i + 1; j < list_names_.size(); ++j) {
            if (list_names_[i] == list_names_[j]) {
                throw Error(ErrorCode::InvalidArgument, "duplicate list name '" + list_names_[i] + "'");
            }
        }
    }
    for (auto c : counts_) {
        if (c < 0) throw Error(ErrorCode::InvalidArgument, "negative cell count");
        total_ += c;
    }
    if (total_ < 1) throw Error(ErrorCode::InvalidArgument, "table has no observed individuals");
}

std::int64_t ObservedTable::count(std::uint32_t code) const {
    if (code == 0) throw Error(ErrorCode::IllegalCell, "the all-zero cell is unobserved");
    return counts_.at(code - 1);
}

std::vector<int> ObservedTable::resolve_lists(std::span<const std::string> names) const {
    std::vector<int> idx;
    idx.reserve(names.size());
    for (const auto& name : names) {
        auto it = std::find(list_names_.begin(), list_names_.end(), name);
        if (it == list_names_.end()) {
            throw Error(ErrorCode::InvalidSubset, "unknown list '" + name + "'");
        }
        idx.push_back(static_cast<int>(it - list_names_.begin()));
    }
    std::sort(idx.begin(), idx.end());
    return idx;
}

ObservedProbs::ObservedProbs(int num_lists, std::vector<double> probs)
    : num_lists_(num_lists), probs_(std::move(probs)) {
    check_num_lists(num_lists);
    if (probs_.size() != num_observed_cells(num_lists)) {
        throw Error(ErrorCode::InvalidArgument, "probability vector has the wrong length");
    }
    double sum = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw Error(ErrorCode::InvalidArgument, "observed probabilities must be finite and >= 0");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvalidArgument,
                    "observed probabilities sum to " + std::to_string(sum) + ", not 1");
    }
}

ObservedTable MarginalView::as_table(const std::vector<std::string>& all_names) const {
    std::vector<std::string> names;
    names.reserve(subset.size());
    for (int s : subset) names.push_back(all_names.at(s));
    return ObservedTable(std::move(names), counts);
}

ObservedProbs observed_proportions(const ObservedTable& table) {
    const double n = static_cast<double>(table.total());
    std::vector<double> probs(table.counts().size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        probs[i] = static_cast<double>(table.counts()[i]) / n;
    }
    return ObservedProbs(table.num_lists(), std::move(probs));
}

ObservedProbs observed_proportions(const ObservedTable& table, double pseudo_count) {
    if (!(pseudo_count >= 0.0)) throw Error(ErrorCode::InvalidArgument, "pseudo-count must be >= 0");
    const double denom =
        static_cast<double>(table.total()) + pseudo_count * static_cast<double>(table.counts().size());
    std::vector<double> probs(table.counts().size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        probs[i] = (static_cast<double>(table.counts()[i]) + pseudo_count) / denom;
    }
    return ObservedProbs(table.num_lists(), std::move(probs));
}

std::vector<int> validate_subset(std::span<const int> subset, int num_lists) {
    std::vector<int> sorted(subset.begin(), subset.end());
    std::sort(sorted.begin(), sorted.end());
    const int size = static_cast<int>(sorted.size());
    if (size <= 1 || size >= num_lists) {
        throw Error(ErrorCode::InvalidSubset, "subset size must satisfy 1 < K' < K (K' = " +
                                                  std::to_string(size) +
                                                  ", K = " + std::to_string(num_lists) + ")");
    }
    for (int i = 0; i < size; ++i) {
        if (sorted[i] < 0 || sorted[i] >= num_lists) {
            throw Error(ErrorCode::InvalidSubset, "list index out of range");
        }
        if (i > 0 && sorted[i] == sorted[i - 1]) {
            throw Error(ErrorCode::InvalidSubset, "duplicate list index in subset");
        }
    }
    return sorted;
}

MarginalView marginalize(const ObservedTable& table, std::span<const int> subset) {
    MarginalView view;
    view.subset = validate_subset(subset, table.num_lists());
    view.counts.assign(num_observed_cells(static_cast<int>(view.subset.size())), 0);
    for (std::uint32_t code = 1; code <= table.counts().size(); ++code) {
        const auto g = InclusionPattern(code, table.num_lists()).restrict_to(view.subset).code();
        const auto c = table.counts()[code - 1];
        if (g == 0) {
            view.zero_margin_count += c;
        } else {
            view.counts[g - 1] += c;
            view.n_dagger += c;
        }
    }
    return view;
}

MarginalProbs marginal_probs(const ObservedProbs& probs, std::span<const int> subset) {
    const auto sorted = validate_subset(subset, probs.num_lists());
    MarginalProbs out;
    out.probs.assign(num_observed_cells(static_cast<int>(sorted.size())), 0.0);
    for (std::uint32_t code = 1; code <= probs.size(); ++code) {
        const auto g = InclusionPattern(code, probs.num_lists()).restrict_to(sorted).code();
        if (g == 0) {
            out.zero_margin += probs.values()[code - 1];
        } else {
            out.probs[g - 1] += probs.values()[code - 1];
        }
    }
    return out;
}

double OddEvenProducts::odd() const { return std::exp(log_odd); }
double OddEvenProducts::even() const { return std::exp(log_even); }
double OddEvenProducts::ratio() const { return std::exp(log_odd - log_even); }

OddEvenProducts odd_even_products(std::span<const double> probs) {
    OddEvenProducts out;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        if (!(p > 0.0)) {
            throw Error(ErrorCode::DegenerateCell,
                        "cell with code " + std::to_string(i + 1) + " has probability " +
                            std::to_string(p) + "; products require strictly positive cells");
        }
        if (odd_parity(static_cast<std::uint32_t>(i + 1))) {
            out.log_odd += std::log(p);
        } else {
            out.log_even += std::log(p);
        }
    }
    return out;
}

}  // namespace mse
