#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "condbias/errors.hpp"

namespace condbias {

/// Probability that a random positive outscores a random negative; ties count 1/2.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Coefficient of determination 1 - SS_res / SS_tot.
double r2(std::span<const double> predictions, std::span<const double> targets);

struct PairedScores {
    std::vector<double> a;
    std::vector<double> b;
};

enum class Alternative { two_sided, greater };

enum class TestMethod { exact, normal_approximation };

std::string to_string(TestMethod method);

struct TestResult {
    double statistic = 0.0;  ///< W+, the rank sum of positive differences
    double p_value = 1.0;
    std::size_t n_effective = 0;
    TestMethod method = TestMethod::exact;
};

/// Largest number of non-zero differences handled by exact enumeration.
inline constexpr std::size_t kExactWilcoxonLimit = 25;

inline constexpr double kSignificanceLevel = 0.05;

/**
 * Wilcoxon signed-rank test on a - b.
 *
 * Zero differences are dropped and tied magnitudes get mid-ranks. Up to
 * kExactWilcoxonLimit non-zero differences the null distribution of W+ is
 * enumerated exactly over all sign assignments of the realised ranks;
 * beyond that a normal approximation with tie-corrected variance and a 0.5
 * continuity correction is used. `greater` tests whether a tends to exceed b.
 * With no non-zero differences the result is p = 1.
 */
TestResult wilcoxon(const PairedScores& paired, Alternative alternative);

struct FoldPlan {
    std::size_t k = 5;
    std::size_t repeats = 1;
    std::uint64_t seed = 0;
    bool stratified = true;

    /// Permutation seed of one repeat.
    std::uint64_t repeat_seed(std::size_t repeat) const;
};

/// fold id (0..k-1) of every record, one vector per repeat.
using FoldAssignment = std::vector<std::vector<std::size_t>>;

/**
 * Repeated k-fold partition. Each repeat shuffles the records with its own
 * seed and deals them to folds round-robin, so fold sizes differ by at most
 * one. When stratifying, records are grouped by label first, which keeps each
 * class within one record of its proportional share per fold; a repeat in
 * which some class has fewer than k members falls back to plain folds.
 */
FoldAssignment make_folds(std::size_t n, std::optional<std::span<const std::size_t>> labels, const FoldPlan& plan);

/// Indices with fold == test_fold (test) and the rest (train), in index order.
void split_fold(std::span<const std::size_t> assignment, std::size_t test_fold, std::vector<std::size_t>& train,
                std::vector<std::size_t>& test);

}  // namespace condbias
