#include "condbias/ensemble.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace condbias {

std::string to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::DefaultLE: return "default_le";
        case Strategy::NonDefaultLT: return "nondefault_lt";
        case Strategy::DualAverage: return "dual_average";
        case Strategy::HalfHalf: return "half_half";
        case Strategy::NegatedHalf: return "negated_half";
    }
    return "?";
}

Strategy parse_strategy(const std::string& text) {
    if (text == "default_le" || text == "le") return Strategy::DefaultLE;
    if (text == "nondefault_lt" || text == "lt") return Strategy::NonDefaultLT;
    if (text == "dual_average" || text == "avg") return Strategy::DualAverage;
    if (text == "half_half") return Strategy::HalfHalf;
    if (text == "negated_half") return Strategy::NegatedHalf;
    throw UsageError("unknown strategy '" + text + "'");
}

bool requires_even_forest(Strategy strategy) {
    return strategy == Strategy::HalfHalf || strategy == Strategy::NegatedHalf;
}

bool Forest::has_negated_trees() const {
    return std::find(negated.begin(), negated.end(), true) != negated.end();
}

std::vector<std::size_t> bootstrap_rows(std::span<const std::size_t> rows, Rng& rng) {
    std::vector<std::size_t> out(rows.size());
    for (auto& r : out) r = rows[rng.uniform_index(rows.size())];
    return out;
}

Forest fit_forest(const Dataset& data, std::span<const std::size_t> rows, const Hyperparams& hp,
                  const ForestParams& params) {
    const std::size_t n_trees = params.n_estimators;
    if (n_trees < 1) throw UsageError("a forest needs at least one tree");
    if (requires_even_forest(params.strategy) && n_trees % 2 != 0) {
        throw UsageError("strategy " + to_string(params.strategy) + " needs an even number of trees");
    }
    if (rows.empty()) throw UsageError("fit_forest on an empty row subset");

    Hyperparams tree_hp = hp;
    const std::size_t d = data.n_features();
    if (params.max_features) {
        tree_hp.n_random_features = std::min(*params.max_features, d);
    } else if (data.task() == Task::classification) {
        tree_hp.n_random_features = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
    } else {
        tree_hp.n_random_features = d;
    }
    tree_hp.validate(data.task());

    Forest forest;
    forest.trained_for = params.strategy;
    forest.task = data.task();
    forest.n_features = d;
    forest.n_classes = data.n_classes();
    forest.hyperparams = tree_hp;
    forest.seed = hp.seed;
    forest.negated.assign(n_trees, false);
    if (params.strategy == Strategy::NegatedHalf) {
        for (std::size_t i = n_trees / 2; i < n_trees; ++i) forest.negated[i] = true;
    }

    std::optional<Dataset> negated_data;
    if (forest.has_negated_trees()) negated_data = data.negated();

    std::vector<std::optional<Tree>> slots(n_trees);
    detail::parallel_for(n_trees, params.threads, [&](std::size_t i) {
        const bool negated = forest.negated[i];
        const std::uint64_t stream = negated && params.independent_negated_bootstrap
                                         ? derive_seed(hp.seed, i, n_trees)
                                         : derive_seed(hp.seed, i);
        Rng rng(stream);
        const auto boot = bootstrap_rows(rows, rng);
        slots[i] = fit_tree(negated ? *negated_data : data, tree_hp, boot, rng);
    });

    forest.trees.reserve(n_trees);
    for (auto& slot : slots) forest.trees.push_back(std::move(*slot));
    return forest;
}

Forest fit_forest(const Dataset& data, const Hyperparams& hp, const ForestParams& params) {
    std::vector<std::size_t> rows(data.n_rows());
    std::iota(rows.begin(), rows.end(), 0);
    return fit_forest(data, rows, hp, params);
}

namespace {

enum class Evaluation { le, lt, both };

Evaluation evaluation_for(const Forest& forest, std::size_t index, Strategy strategy) {
    switch (strategy) {
        case Strategy::DefaultLE: return Evaluation::le;
        case Strategy::NonDefaultLT: return Evaluation::lt;
        case Strategy::DualAverage: return Evaluation::both;
        case Strategy::HalfHalf: return index < forest.size() / 2 ? Evaluation::le : Evaluation::lt;
        case Strategy::NegatedHalf: return forest.negated[index] ? Evaluation::lt : Evaluation::le;
    }
    return Evaluation::le;
}

void check_strategy(const Forest& forest, Strategy strategy, std::size_t x_size) {
    if (forest.trees.empty()) throw UsageError("empty forest");
    if (x_size != forest.n_features) throw UsageError("input dimension mismatch");
    if (requires_even_forest(strategy) && forest.size() % 2 != 0) {
        throw UsageError("strategy " + to_string(strategy) + " needs an even number of trees");
    }
    if (strategy == Strategy::NegatedHalf && !forest.has_negated_trees()) {
        throw UsageError("negated_half prediction on a forest without negated trees");
    }
}

// Effective operator `op` on x for a tree trained on negated features is the
// flipped operator on -x.
Operator physical_operator(bool negated, Operator op) {
    if (!negated) return op;
    return op == Operator::LE ? Operator::LT : Operator::LE;
}

}  // namespace

std::vector<double> predict_forest(const Forest& forest, std::span<const double> x, Strategy strategy) {
    check_strategy(forest, strategy, x.size());
    std::vector<double> minus_x(x.begin(), x.end());
    for (double& v : minus_x) v = -v;

    std::vector<double> sum;
    auto accumulate = [&](std::span<const double> leaf) {
        if (sum.empty()) sum.assign(leaf.size(), 0.0);
        for (std::size_t c = 0; c < leaf.size(); ++c) sum[c] += leaf[c];
    };

    for (std::size_t i = 0; i < forest.size(); ++i) {
        const Tree& tree = forest.trees[i];
        const bool negated = forest.negated[i];
        std::span<const double> input = negated ? std::span<const double>(minus_x) : x;
        switch (evaluation_for(forest, i, strategy)) {
            case Evaluation::le: accumulate(tree.predict(input, physical_operator(negated, Operator::LE))); break;
            case Evaluation::lt: accumulate(tree.predict(input, physical_operator(negated, Operator::LT))); break;
            case Evaluation::both: {
                const auto le = tree.predict(input, physical_operator(negated, Operator::LE));
                const auto lt = tree.predict(input, physical_operator(negated, Operator::LT));
                std::vector<double> avg(le.size());
                for (std::size_t c = 0; c < le.size(); ++c) avg[c] = (le[c] + lt[c]) / 2.0;
                accumulate(avg);
                break;
            }
        }
    }
    const double n = static_cast<double>(forest.size());
    for (double& v : sum) v /= n;
    return sum;
}

std::vector<double> predict_integrated(const Tree& tree, std::span<const double> x) {
    const auto le = tree.predict(x, Operator::LE);
    const auto lt = tree.predict(x, Operator::LT);
    std::vector<double> out(le.size());
    for (std::size_t c = 0; c < le.size(); ++c) out[c] = (le[c] + lt[c]) / 2.0;
    return out;
}

std::size_t traversal_cost(const Forest& forest, std::span<const double> x, Strategy strategy) {
    check_strategy(forest, strategy, x.size());
    std::vector<double> minus_x(x.begin(), x.end());
    for (double& v : minus_x) v = -v;

    std::size_t visits = 0;
    for (std::size_t i = 0; i < forest.size(); ++i) {
        const Tree& tree = forest.trees[i];
        const bool negated = forest.negated[i];
        std::span<const double> input = negated ? std::span<const double>(minus_x) : x;
        switch (evaluation_for(forest, i, strategy)) {
            case Evaluation::le: tree.leaf_index(input, physical_operator(negated, Operator::LE), &visits); break;
            case Evaluation::lt: tree.leaf_index(input, physical_operator(negated, Operator::LT), &visits); break;
            case Evaluation::both:
                tree.leaf_index(input, physical_operator(negated, Operator::LE), &visits);
                tree.leaf_index(input, physical_operator(negated, Operator::LT), &visits);
                break;
        }
    }
    return visits;
}

}  // namespace condbias
