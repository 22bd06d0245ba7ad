#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "condbias/core.hpp"
#include "condbias/rng.hpp"

namespace condbias {

/// Comparison used at internal nodes: LE routes left iff x_f <= t, LT iff x_f < t.
enum class Operator { LE, LT };

std::string to_string(Operator op);
Operator parse_operator(const std::string& text);

enum class Impurity { gini, entropy, variance };

std::string to_string(Impurity impurity);
Impurity parse_impurity(const std::string& text);

struct Hyperparams {
    std::size_t min_samples_leaf = 1;
    std::optional<std::size_t> max_depth;          ///< nullopt: unbounded
    Impurity impurity = Impurity::gini;
    std::optional<std::size_t> n_random_features;  ///< nullopt: all features
    std::uint64_t seed = 0;
    /// Score splits by I(L) + I(R) instead of the size-weighted sum.
    bool unweighted_impurity = false;

    void validate(Task task) const;
    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Hyperparameters with the default impurity for the task.
Hyperparams default_hyperparams(Task task);

double gini(std::span<const std::size_t> labels);
double entropy(std::span<const std::size_t> labels);
double variance(std::span<const double> targets);

struct SplitResult {
    std::size_t feature = 0;
    std::size_t k_star = 0;  ///< rows in the left partition
    double threshold = 0.0;
    double score = 0.0;

    friend bool operator==(const SplitResult&, const SplitResult&) = default;
};

/// Relative tolerance under which two split scores count as tied.
inline constexpr double kSplitTieTolerance = 1e-12;

/**
 * Exhaustive mid-point split search over the candidate features.
 *
 * Every boundary between consecutive distinct sorted values whose children
 * both hold at least `min_samples_leaf` rows is scored. The global minimum
 * wins; scores within kSplitTieTolerance of it are ties, resolved towards
 * the lowest feature index, then the lowest k. Boundaries whose mid-point
 * rounds onto one of its neighbours are skipped. Returns nullopt when no
 * admissible boundary exists.
 */
std::optional<SplitResult> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                      std::span<const std::size_t> candidate_features, const Hyperparams& hp);

struct Node {
    static constexpr std::int32_t kLeaf = -1;

    std::int32_t feature = kLeaf;
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::vector<double> value;  ///< leaves only: class probabilities or {mean}
    std::size_t n_samples = 0;

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const Node&, const Node&) = default;
};

/**
 * Immutable binary decision tree.
 *
 * Nodes are stored in preorder: the root is node 0 and an internal node's
 * left child immediately follows it. Two trees with the same shape, splits
 * and leaves therefore have identical node arrays, so operator== is a
 * structural comparison.
 */
class Tree {
public:
    Tree() = default;
    Tree(Task task, std::size_t n_features, std::size_t n_classes, std::vector<Node> nodes);

    Task task() const { return task_; }
    std::size_t n_features() const { return n_features_; }
    std::size_t n_classes() const { return n_classes_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& root() const { return nodes_.front(); }

    std::size_t n_internal() const;
    std::size_t depth() const;

    /// Leaf statistics for x under the given operator.
    std::span<const double> predict(std::span<const double> x, Operator op) const {
        return nodes_[leaf_index(x, op)].value;
    }

    /// Index of the leaf x is routed to. If `visits` is given, the number of
    /// nodes touched (leaf included) is added to it.
    std::size_t leaf_index(std::span<const double> x, Operator op, std::size_t* visits = nullptr) const;

    /// Node indices visited from the root to the leaf.
    std::vector<std::size_t> path(std::span<const double> x, Operator op) const;

    friend bool operator==(const Tree&, const Tree&) = default;

private:
    Task task_ = Task::classification;
    std::size_t n_features_ = 0;
    std::size_t n_classes_ = 0;
    std::vector<Node> nodes_;
};

/// Routing test shared by every inference path.
inline bool goes_left(double value, double threshold, Operator op) {
    return op == Operator::LE ? value <= threshold : value < threshold;
}

/**
 * Grows a tree on the given rows (duplicates allowed, e.g. a bootstrap).
 *
 * A node becomes a leaf when its targets are pure, when it has fewer than
 * 2 * min_samples_leaf rows, when it sits at max_depth, or when no admissible
 * split exists. Feature subsampling per node draws from `rng`; with
 * n_random_features unset, no random numbers are consumed. The conditioning
 * operator plays no part here.
 */
Tree fit_tree(const Dataset& data, const Hyperparams& hp, std::span<const std::size_t> rows, Rng& rng);

/// Fits on every row with a stream seeded from hp.seed.
Tree fit_tree(const Dataset& data, const Hyperparams& hp);

/// Leaf-prediction as an owning vector.
std::vector<double> predict(const Tree& tree, std::span<const double> x, Operator op);

/// (feature, threshold) of every internal node, preorder.
std::vector<std::pair<std::size_t, double>> collect_thresholds(const Tree& tree);

}  // namespace condbias
