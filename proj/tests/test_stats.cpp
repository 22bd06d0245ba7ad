#include <gtest/gtest.h>

#include "condbias/stats.hpp"
#include "oracles.hpp"

using namespace condbias;

namespace {

TestResult test_diffs(const std::vector<double>& d, Alternative alt) {
    PairedScores p;
    p.a = d;
    p.b.assign(d.size(), 0.0);
    return wilcoxon(p, alt);
}

}  // namespace

TEST(Auc, Examples) {
    const std::vector<double> s{0.35, 0.8, 0.1, 0.4};
    const std::vector<int> y{1, 1, 0, 0};
    EXPECT_DOUBLE_EQ(roc_auc(s, y), 0.75);
    const std::vector<double> separated{0.9, 0.8, 0.1};
    EXPECT_EQ(roc_auc(separated, std::vector<int>{1, 1, 0}), 1.0);
    const std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
    EXPECT_EQ(roc_auc(flat, std::vector<int>{1, 0, 1, 0}), 0.5);
    EXPECT_THROW(roc_auc(flat, std::vector<int>{1, 1, 1, 1}), UsageError);
}

TEST(Auc, MatchesPairCountingAndComplements) {
    Rng rng(1);
    for (int i = 0; i < 300; ++i) {
        const std::size_t n = 2 + rng.uniform_index(60);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t j = 0; j < n; ++j) {
            s[j] = static_cast<double>(rng.uniform_index(10)) / 10.0;
            y[j] = static_cast<int>(rng.uniform_index(2));
        }
        y[0] = 0;
        y[1] = 1;
        EXPECT_EQ(roc_auc(s, y), oracle::auc_pairs(s, y));
        std::vector<int> flipped(n);
        for (std::size_t j = 0; j < n; ++j) flipped[j] = 1 - y[j];
        EXPECT_NEAR(roc_auc(s, y) + roc_auc(s, flipped), 1.0, 1e-15);

        std::vector<double> cubed(n);
        for (std::size_t j = 0; j < n; ++j) cubed[j] = s[j] * s[j] * s[j] + 7.0;
        EXPECT_EQ(roc_auc(cubed, y), roc_auc(s, y));
    }
}

TEST(R2, Examples) {
    const std::vector<double> y{1, 2, 3};
    EXPECT_EQ(r2(y, y), 1.0);
    EXPECT_EQ(r2(std::vector<double>{2, 2, 2}, y), 0.0);
    EXPECT_DOUBLE_EQ(r2(std::vector<double>{0, 2}, std::vector<double>{1, 2}), -1.0);
    EXPECT_THROW(r2(y, std::vector<double>{5, 5, 5}), UsageError);
    EXPECT_THROW(r2(std::vector<double>{1}, std::vector<double>{1}), UsageError);
}

TEST(Wilcoxon, ThreePositiveDifferences) {
    const auto two = test_diffs({1, 2, 3}, Alternative::two_sided);
    EXPECT_EQ(two.statistic, 6.0);
    EXPECT_DOUBLE_EQ(two.p_value, 0.25);
    EXPECT_EQ(two.method, TestMethod::exact);
    EXPECT_DOUBLE_EQ(test_diffs({1, 2, 3}, Alternative::greater).p_value, 0.125);
    EXPECT_DOUBLE_EQ(test_diffs({-1, -2, -3}, Alternative::greater).p_value, 1.0);
}

TEST(Wilcoxon, NoEvidence) {
    PairedScores p{{0.5, 0.7}, {0.5, 0.7}};
    const auto r = wilcoxon(p, Alternative::two_sided);
    EXPECT_EQ(r.p_value, 1.0);
    EXPECT_EQ(r.n_effective, 0u);
    EXPECT_EQ(r.method, TestMethod::exact);
}

TEST(Wilcoxon, MatchesEnumerationWithTiesAndZeros) {
    Rng rng(2);
    for (int i = 0; i < 400; ++i) {
        const std::size_t n = 1 + rng.uniform_index(12);
        std::vector<double> d(n);
        for (double& v : d) v = static_cast<double>(static_cast<int>(rng.uniform_index(9)) - 4);
        const auto expected = oracle::wilcoxon_enumerate(d);
        const auto two = test_diffs(d, Alternative::two_sided);
        const auto greater = test_diffs(d, Alternative::greater);
        EXPECT_EQ(two.statistic, expected.w_plus);
        EXPECT_NEAR(two.p_value, expected.p_two_sided, 1e-12);
        EXPECT_NEAR(greater.p_value, expected.p_greater, 1e-12);
    }
}

TEST(Wilcoxon, OneSidedTailsOverlapAtObserved) {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> d(1 + rng.uniform_index(10));
        for (std::size_t j = 0; j < d.size(); ++j) {
            d[j] = (static_cast<double>(j) + 1.0) * (rng.uniform_index(2) ? 1.0 : -1.0);
        }
        std::vector<double> neg(d);
        for (double& v : neg) v = -v;
        const double pab = test_diffs(d, Alternative::greater).p_value;
        const double pba = test_diffs(neg, Alternative::greater).p_value;
        EXPECT_GT(pab + pba, 1.0);
        EXPECT_LE(pab + pba, 2.0);
    }
}

TEST(Wilcoxon, NormalApproximationAboveLimit) {
    std::vector<double> d(30);
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = static_cast<double>(j + 1) * (j % 3 == 0 ? -1.0 : 1.0);
    const auto r = test_diffs(d, Alternative::two_sided);
    EXPECT_EQ(r.method, TestMethod::normal_approximation);
    EXPECT_EQ(r.n_effective, 30u);
    EXPECT_GT(r.p_value, 0.0);
    EXPECT_LT(r.p_value, 1.0);
}

TEST(Wilcoxon, LengthMismatch) {
    PairedScores p{{1, 2}, {1}};
    EXPECT_THROW(wilcoxon(p, Alternative::two_sided), UsageError);
}

TEST(Folds, Partition) {
    FoldPlan plan;
    plan.k = 5;
    const auto folds = make_folds(10, std::nullopt, plan);
    ASSERT_EQ(folds.size(), 1u);
    std::vector<std::size_t> sizes(5, 0);
    for (std::size_t f : folds[0]) ++sizes[f];
    EXPECT_EQ(sizes, (std::vector<std::size_t>(5, 2)));

    std::vector<std::size_t> train, test;
    split_fold(folds[0], 3, train, test);
    EXPECT_EQ(test.size(), 2u);
    EXPECT_EQ(train.size(), 8u);
}

TEST(Folds, StratifiedCounts) {
    const std::vector<std::size_t> labels{0, 0, 0, 0, 0, 0, 1, 1, 1, 1};
    FoldPlan plan;
    plan.k = 2;
    plan.repeats = 5;
    plan.seed = 3;
    const auto folds = make_folds(10, std::span<const std::size_t>(labels), plan);
    for (const auto& repeat : folds) {
        for (std::size_t f = 0; f < 2; ++f) {
            std::size_t zeros = 0, ones = 0;
            for (std::size_t i = 0; i < 10; ++i) {
                if (repeat[i] == f) (labels[i] == 0 ? zeros : ones)++;
            }
            EXPECT_EQ(zeros, 3u);
            EXPECT_EQ(ones, 2u);
        }
    }
}

TEST(Folds, DeterministicAndRepeatsDiffer) {
    FoldPlan plan;
    plan.repeats = 3;
    plan.seed = 11;
    const auto a = make_folds(50, std::nullopt, plan);
    EXPECT_EQ(a, make_folds(50, std::nullopt, plan));
    EXPECT_NE(a[0], a[1]);
}

TEST(Folds, RareClassFallsBackToPlainFolds) {
    std::vector<std::size_t> labels(20, 0);
    labels[3] = 1;
    labels[9] = 1;
    FoldPlan plan;
    plan.k = 5;
    const auto folds = make_folds(20, std::span<const std::size_t>(labels), plan);
    std::vector<std::size_t> sizes(5, 0);
    for (std::size_t f : folds[0]) ++sizes[f];
    EXPECT_EQ(sizes, (std::vector<std::size_t>(5, 4)));
}

TEST(Folds, TooFewRecords) {
    FoldPlan plan;
    plan.k = 5;
    EXPECT_THROW(make_folds(4, std::nullopt, plan), UsageError);
}
