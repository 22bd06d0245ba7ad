#include "condbias/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "condbias/rng.hpp"

namespace condbias {

namespace {

// Mid-ranks (1-based) of the values, ties averaged.
std::vector<double> mid_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
        // Positions i..j-1 hold ranks i+1..j; their mean is (i + 1 + j) / 2.
        const double rank = static_cast<double>(i + 1 + j) / 2.0;
        for (std::size_t m = i; m < j; ++m) ranks[order[m]] = rank;
        i = j;
    }
    return ranks;
}

double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw UsageError("roc_auc: scores and labels differ in length");
    double positives = 0.0;
    double negatives = 0.0;
    for (int l : labels) {
        if (l == 1) {
            positives += 1.0;
        } else if (l == 0) {
            negatives += 1.0;
        } else {
            throw UsageError("roc_auc: labels must be 0 or 1");
        }
    }
    if (positives == 0.0 || negatives == 0.0) throw UsageError("roc_auc: both classes must be present");

    // Mann-Whitney form. Rank sums are half-integers, so the numerator is
    // exact and equals (#wins + #ties / 2).
    const auto ranks = mid_ranks(scores);
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 1) rank_sum += ranks[i];
    }
    const double wins = rank_sum - positives * (positives + 1.0) / 2.0;
    return wins / (positives * negatives);
}

double r2(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size()) throw UsageError("r2: length mismatch");
    if (targets.size() < 2) throw UsageError("r2: at least two targets required");
    const double mean = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(targets.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        ss_res += (targets[i] - predictions[i]) * (targets[i] - predictions[i]);
        ss_tot += (targets[i] - mean) * (targets[i] - mean);
    }
    if (ss_tot == 0.0) throw UsageError("r2: zero target variance");
    return 1.0 - ss_res / ss_tot;
}

std::string to_string(TestMethod method) {
    return method == TestMethod::exact ? "exact" : "normal-approximation";
}

TestResult wilcoxon(const PairedScores& paired, Alternative alternative) {
    if (paired.a.size() != paired.b.size()) throw UsageError("wilcoxon: paired samples differ in length");
    if (paired.a.empty()) throw UsageError("wilcoxon: empty sample");

    std::vector<double> magnitudes;
    std::vector<bool> positive;
    for (std::size_t i = 0; i < paired.a.size(); ++i) {
        const double d = paired.a[i] - paired.b[i];
        if (d == 0.0) continue;
        magnitudes.push_back(std::abs(d));
        positive.push_back(d > 0.0);
    }

    TestResult result;
    result.n_effective = magnitudes.size();
    if (magnitudes.empty()) return result;

    const auto ranks = mid_ranks(magnitudes);
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        if (positive[i]) result.statistic += ranks[i];
    }

    const std::size_t n = ranks.size();
    double p_greater = 0.0;
    double p_less = 0.0;
    if (n <= kExactWilcoxonLimit) {
        result.method = TestMethod::exact;
        // Doubled mid-ranks are integers; count sign assignments per W+ value.
        std::vector<std::size_t> doubled(n);
        std::size_t total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            doubled[i] = static_cast<std::size_t>(std::lround(2.0 * ranks[i]));
            total += doubled[i];
        }
        std::vector<double> ways(total + 1, 0.0);
        ways[0] = 1.0;
        std::size_t reach = 0;
        for (std::size_t r : doubled) {
            for (std::size_t s = reach + 1; s-- > 0;) {
                if (ways[s] != 0.0) ways[s + r] += ways[s];
            }
            reach += r;
        }
        const auto observed = static_cast<std::size_t>(std::lround(2.0 * result.statistic));
        const double all = std::ldexp(1.0, static_cast<int>(n));
        double upper = 0.0;
        double lower = 0.0;
        for (std::size_t s = 0; s <= total; ++s) {
            if (s >= observed) upper += ways[s];
            if (s <= observed) lower += ways[s];
        }
        p_greater = upper / all;
        p_less = lower / all;
    } else {
        result.method = TestMethod::normal_approximation;
        const double nn = static_cast<double>(n);
        const double mean = nn * (nn + 1.0) / 4.0;
        double tie_term = 0.0;
        std::map<double, std::size_t> groups;
        for (double m : magnitudes) ++groups[m];
        for (const auto& [value, t] : groups) {
            const double tt = static_cast<double>(t);
            tie_term += tt * tt * tt - tt;
        }
        const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
        const double sd = std::sqrt(var);
        p_greater = normal_upper_tail((result.statistic - mean - 0.5) / sd);
        p_less = normal_upper_tail((mean - result.statistic - 0.5) / sd);
    }

    if (alternative == Alternative::greater) {
        result.p_value = p_greater;
    } else {
        result.p_value = std::min(1.0, 2.0 * std::min(p_greater, p_less));
    }
    return result;
}

std::uint64_t FoldPlan::repeat_seed(std::size_t repeat) const { return derive_seed(seed, repeat); }

FoldAssignment make_folds(std::size_t n, std::optional<std::span<const std::size_t>> labels, const FoldPlan& plan) {
    if (plan.k < 2) throw UsageError("make_folds: k must be at least 2");
    if (plan.repeats < 1) throw UsageError("make_folds: at least one repeat required");
    if (n < plan.k) throw UsageError("make_folds: fewer records than folds");
    if (labels && labels->size() != n) throw UsageError("make_folds: label count mismatch");

    std::vector<std::vector<std::size_t>> by_class;
    bool stratify = plan.stratified && labels.has_value();
    if (stratify) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = (*labels)[i];
            if (c >= by_class.size()) by_class.resize(c + 1);
            by_class[c].push_back(i);
        }
        for (const auto& members : by_class) {
            if (!members.empty() && members.size() < plan.k) stratify = false;
        }
    }

    FoldAssignment out(plan.repeats, std::vector<std::size_t>(n));
    for (std::size_t r = 0; r < plan.repeats; ++r) {
        Rng rng(plan.repeat_seed(r));
        std::vector<std::size_t> sequence;
        sequence.reserve(n);
        if (stratify) {
            for (auto members : by_class) {
                rng.shuffle(std::span<std::size_t>(members));
                sequence.insert(sequence.end(), members.begin(), members.end());
            }
        } else {
            sequence.resize(n);
            std::iota(sequence.begin(), sequence.end(), 0);
            rng.shuffle(std::span<std::size_t>(sequence));
        }
        for (std::size_t pos = 0; pos < n; ++pos) out[r][sequence[pos]] = pos % plan.k;
    }
    return out;
}

void split_fold(std::span<const std::size_t> assignment, std::size_t test_fold, std::vector<std::size_t>& train,
                std::vector<std::size_t>& test) {
    train.clear();
    test.clear();
    for (std::size_t i = 0; i < assignment.size(); ++i) (assignment[i] == test_fold ? test : train).push_back(i);
}

}  // namespace condbias
