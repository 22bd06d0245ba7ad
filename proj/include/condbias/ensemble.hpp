#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "condbias/tree.hpp"

namespace condbias {

enum class Strategy { DefaultLE, NonDefaultLT, DualAverage, HalfHalf, NegatedHalf };

std::string to_string(Strategy strategy);
Strategy parse_strategy(const std::string& text);

/// HalfHalf and NegatedHalf split the forest in two equal halves.
bool requires_even_forest(Strategy strategy);

struct ForestParams {
    std::size_t n_estimators = 100;
    /// Training layout. Only NegatedHalf changes how trees are trained.
    Strategy strategy = Strategy::DefaultLE;
    /// Per-node features; nullopt picks ceil(sqrt(d)) for classification, d for regression.
    std::optional<std::size_t> max_features;
    /// Negated trees draw their own bootstrap instead of sharing the slot's.
    bool independent_negated_bootstrap = false;
    std::size_t threads = 1;
};

/**
 * Random forest of bootstrapped trees.
 *
 * Tree i is grown from the stream derive_seed(seed, i): a bootstrap of N
 * draws with replacement, then per-node feature sampling from the same
 * stream. Under NegatedHalf the second half is fitted on negated features
 * and flagged in `negated`.
 */
struct Forest {
    std::vector<Tree> trees;
    std::vector<bool> negated;
    Strategy trained_for = Strategy::DefaultLE;
    Task task = Task::classification;
    std::size_t n_features = 0;
    std::size_t n_classes = 0;
    Hyperparams hyperparams;
    std::uint64_t seed = 0;

    std::size_t size() const { return trees.size(); }
    bool has_negated_trees() const;

    friend bool operator==(const Forest&, const Forest&) = default;
};

Forest fit_forest(const Dataset& data, const Hyperparams& hp, const ForestParams& params);

/// Same, restricted to the given rows (bootstraps are drawn from them).
Forest fit_forest(const Dataset& data, std::span<const std::size_t> rows, const Hyperparams& hp,
                  const ForestParams& params);

/// Bootstrap row indices tree `index` receives.
std::vector<std::size_t> bootstrap_rows(std::span<const std::size_t> rows, Rng& rng);

/**
 * Mean of per-tree predictions under a strategy.
 *
 * Trees fitted on negated features are evaluated on -x. For them the roles of
 * the operators flip: LE on -x realises LT on x and vice versa, so every
 * strategy is well defined on a NegatedHalf forest. NegatedHalf itself is
 * rejected on forests without negated trees.
 */
std::vector<double> predict_forest(const Forest& forest, std::span<const double> x, Strategy strategy);

/// Average of the LE and LT predictions of a single tree.
std::vector<double> predict_integrated(const Tree& tree, std::span<const double> x);

/// Exact number of nodes visited (leaves included) by predict_forest.
std::size_t traversal_cost(const Forest& forest, std::span<const double> x, Strategy strategy);

}  // namespace condbias
