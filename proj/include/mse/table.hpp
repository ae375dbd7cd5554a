#pragma once
// Incomplete 2^K contingency tables for multiple-systems estimation.
//
// Cells are indexed by the integer code of their inclusion pattern,
// code = sum_k h_k * 2^(k-1), so list 1 is the least significant bit. The
// all-zero cell (code 0) is never observed; dense storage for observed
// quantities therefore uses slot (code - 1).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mse {

inline constexpr int kMaxLists = 20;

class InclusionPattern {
public:
    InclusionPattern(std::uint32_t code, int num_lists);

    static InclusionPattern from_bits(std::span<const int> bits);

    std::uint32_t code() const noexcept { return code_; }
    int num_lists() const noexcept { return num_lists_; }
    bool included(int list) const noexcept { return (code_ >> list) & 1U; }
    int popcount() const noexcept;
    bool odd() const noexcept { return popcount() % 2 == 1; }
    bool is_unobserved() const noexcept { return code_ == 0; }
    std::vector<int> bits() const;

    // Pattern of the listed lists only, in subset order (subset[0] becomes bit 0).
    InclusionPattern restrict_to(std::span<const int> subset) const;

    friend bool operator==(const InclusionPattern&, const InclusionPattern&) = default;

private:
    std::uint32_t code_;
    int num_lists_;
};

// Parity of a cell code; 0 counts as even.
inline bool odd_parity(std::uint32_t code) noexcept { return __builtin_popcount(code) % 2 == 1; }

inline std::size_t num_observed_cells(int num_lists) noexcept {
    return (std::size_t{1} << num_lists) - 1;
}

class ObservedTable {
public:
    // counts[code - 1] holds n_h for every nonzero pattern.
    ObservedTable(std::vector<std::string> list_names, std::vector<std::int64_t> counts);

    int num_lists() const noexcept { return static_cast<int>(list_names_.size()); }
    const std::vector<std::string>& list_names() const noexcept { return list_names_; }
    const std::vector<std::int64_t>& counts() const noexcept { return counts_; }
    std::int64_t count(std::uint32_t code) const;
    std::int64_t total() const noexcept { return total_; }

    // Resolves list names to sorted, distinct indices.
    std::vector<int> resolve_lists(std::span<const std::string> names) const;

    friend bool operator==(const ObservedTable&, const ObservedTable&) = default;

private:
    std::vector<std::string> list_names_;
    std::vector<std::int64_t> counts_;
    std::int64_t total_ = 0;
};

// Cell probabilities conditional on being observed, over nonzero patterns.
class ObservedProbs {
public:
    ObservedProbs(int num_lists, std::vector<double> probs);

    int num_lists() const noexcept { return num_lists_; }
    const std::vector<double>& values() const noexcept { return probs_; }
    double at(std::uint32_t code) const { return probs_.at(code - 1); }
    std::size_t size() const noexcept { return probs_.size(); }

private:
    int num_lists_;
    std::vector<double> probs_;
};

struct MarginalView {
    std::vector<int> subset;
    std::vector<std::int64_t> counts;  // n-dagger over nonzero marginal codes, slot g - 1
    std::int64_t n_dagger = 0;
    std::int64_t zero_margin_count = 0;

    // The restricted table over the subset lists alone.
    ObservedTable as_table(const std::vector<std::string>& all_names) const;
};

// Marginal cell probabilities pi~_{g+} over nonzero g, plus pi~_{0+}.
struct MarginalProbs {
    std::vector<double> probs;
    double zero_margin = 0.0;
};

ObservedProbs observed_proportions(const ObservedTable& table);

// Proportions after adding pseudo_count to every observed cell.
ObservedProbs observed_proportions(const ObservedTable& table, double pseudo_count);

std::vector<int> validate_subset(std::span<const int> subset, int num_lists);

MarginalView marginalize(const ObservedTable& table, std::span<const int> subset);

MarginalProbs marginal_probs(const ObservedProbs& probs, std::span<const int> subset);

struct OddEvenProducts {
    double log_odd = 0.0;
    double log_even = 0.0;

    double odd() const;
    double even() const;
    double ratio() const;      // odd / even
    double log_ratio() const noexcept { return log_odd - log_even; }
};

// probs[code - 1] over nonzero patterns. Throws DegenerateCell for entries <= 0.
OddEvenProducts odd_even_products(std::span<const double> probs);

}  // namespace mse
