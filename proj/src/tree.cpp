#include "condbias/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace condbias {

std::string to_string(Operator op) { return op == Operator::LE ? "le" : "lt"; }

Operator parse_operator(const std::string& text) {
    if (text == "le" || text == "LE" || text == "<=") return Operator::LE;
    if (text == "lt" || text == "LT" || text == "<") return Operator::LT;
    throw UsageError("unknown operator '" + text + "' (expected le or lt)");
}

std::string to_string(Impurity impurity) {
    switch (impurity) {
        case Impurity::gini: return "gini";
        case Impurity::entropy: return "entropy";
        case Impurity::variance: return "variance";
    }
    return "?";
}

Impurity parse_impurity(const std::string& text) {
    if (text == "gini") return Impurity::gini;
    if (text == "entropy") return Impurity::entropy;
    if (text == "variance") return Impurity::variance;
    throw UsageError("unknown impurity '" + text + "'");
}

void Hyperparams::validate(Task task) const {
    if (min_samples_leaf < 1) throw UsageError("min_samples_leaf must be at least 1");
    if (max_depth && *max_depth < 1) throw UsageError("max_depth must be at least 1");
    if (n_random_features && *n_random_features < 1) throw UsageError("n_random_features must be at least 1");
    const bool regression_impurity = impurity == Impurity::variance;
    if (regression_impurity != (task == Task::regression)) {
        throw UsageError("impurity '" + to_string(impurity) + "' does not fit a " + to_string(task) + " task");
    }
}

Hyperparams default_hyperparams(Task task) {
    Hyperparams hp;
    hp.impurity = task == Task::classification ? Impurity::gini : Impurity::variance;
    return hp;
}

namespace {

double gini_from_counts(std::span<const double> counts, double n) {
    // Counts are integers, so the sum of squares is exact.
    double sum_sq = 0.0;
    for (double c : counts) sum_sq += c * c;
    return 1.0 - sum_sq / (n * n);
}

double entropy_from_counts(std::span<const double> counts, double n) {
    double h = 0.0;
    for (double c : counts) {
        if (c > 0.0) {
            const double p = c / n;
            h -= p * std::log2(p);
        }
    }
    return h;
}

std::vector<double> label_counts(std::span<const std::size_t> labels) {
    std::vector<double> counts;
    for (std::size_t l : labels) {
        if (l >= counts.size()) counts.resize(l + 1, 0.0);
        counts[l] += 1.0;
    }
    return counts;
}

}  // namespace

double gini(std::span<const std::size_t> labels) {
    if (labels.empty()) throw UsageError("gini of an empty label set");
    const auto counts = label_counts(labels);
    return gini_from_counts(counts, static_cast<double>(labels.size()));
}

double entropy(std::span<const std::size_t> labels) {
    if (labels.empty()) throw UsageError("entropy of an empty label set");
    const auto counts = label_counts(labels);
    return entropy_from_counts(counts, static_cast<double>(labels.size()));
}

double variance(std::span<const double> targets) {
    if (targets.empty()) throw UsageError("variance of an empty target set");
    const double n = static_cast<double>(targets.size());
    const double mean = std::accumulate(targets.begin(), targets.end(), 0.0) / n;
    double ss = 0.0;
    for (double y : targets) ss += (y - mean) * (y - mean);
    return ss / n;
}

// ---------------------------------------------------------------------------
// Split search

namespace {

struct SplitCandidate {
    std::size_t feature;
    std::size_t k;
    double threshold;
    double score;
};

// Incremental sufficient statistics of one side of a boundary.
class SideStats {
public:
    SideStats(Task task, std::size_t n_classes) : task_(task), counts_(n_classes, 0.0) {}

    void add(double target, double centered) {
        n_ += 1.0;
        if (task_ == Task::classification) {
            counts_[static_cast<std::size_t>(target)] += 1.0;
        } else {
            sum_ += centered;
            sum_sq_ += centered * centered;
        }
    }

    SideStats minus(const SideStats& other) const {
        SideStats out = *this;
        out.n_ -= other.n_;
        for (std::size_t c = 0; c < counts_.size(); ++c) out.counts_[c] -= other.counts_[c];
        out.sum_ -= other.sum_;
        out.sum_sq_ -= other.sum_sq_;
        return out;
    }

    double n() const { return n_; }

    double impurity(Impurity kind) const {
        switch (kind) {
            case Impurity::gini: return gini_from_counts(counts_, n_);
            case Impurity::entropy: return entropy_from_counts(counts_, n_);
            case Impurity::variance: {
                const double mean = sum_ / n_;
                return std::max(0.0, sum_sq_ / n_ - mean * mean);
            }
        }
        return 0.0;
    }

private:
    Task task_;
    double n_ = 0.0;
    std::vector<double> counts_;
    double sum_ = 0.0;
    double sum_sq_ = 0.0;
};

// Regression targets are centered on the node mean so that the running
// sums of squares do not cancel catastrophically.
double node_mean(const Dataset& data, std::span<const std::size_t> rows) {
    double sum = 0.0;
    for (std::size_t r : rows) sum += data.target(r);
    return sum / static_cast<double>(rows.size());
}

}  // namespace

std::optional<SplitResult> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                      std::span<const std::size_t> candidate_features, const Hyperparams& hp) {
    if (rows.size() < 2) return std::nullopt;

    std::vector<std::size_t> features(candidate_features.begin(), candidate_features.end());
    std::sort(features.begin(), features.end());
    features.erase(std::unique(features.begin(), features.end()), features.end());

    const Task task = data.task();
    const std::size_t n = rows.size();
    const double n_total = static_cast<double>(n);
    const double center = task == Task::regression ? node_mean(data, rows) : 0.0;

    SideStats total(task, data.n_classes());
    for (std::size_t r : rows) total.add(data.target(r), data.target(r) - center);

    std::vector<SplitCandidate> candidates;
    std::vector<std::size_t> order;
    for (std::size_t f : features) {
        if (f >= data.n_features()) throw UsageError("candidate feature index out of range");
        order.assign(rows.begin(), rows.end());
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return data.at(a, f) < data.at(b, f); });
        SideStats left(task, data.n_classes());
        for (std::size_t k = 1; k < n; ++k) {
            const std::size_t prev = order[k - 1];
            left.add(data.target(prev), data.target(prev) - center);
            const double lo = data.at(prev, f);
            const double hi = data.at(order[k], f);
            if (lo == hi) continue;
            if (k < hp.min_samples_leaf || n - k < hp.min_samples_leaf) continue;
            const double threshold = (lo + hi) / 2.0;
            if (!std::isfinite(threshold) || threshold == lo || threshold == hi) continue;

            const SideStats right = total.minus(left);
            const double il = left.impurity(hp.impurity);
            const double ir = right.impurity(hp.impurity);
            const double score = hp.unweighted_impurity ? il + ir : (left.n() * il + right.n() * ir) / n_total;
            candidates.push_back({f, k, threshold, score});
        }
    }
    if (candidates.empty()) return std::nullopt;

    double min_score = candidates.front().score;
    for (const auto& c : candidates) min_score = std::min(min_score, c.score);
    const double tolerance = kSplitTieTolerance * std::max(1.0, std::abs(min_score));
    // Candidates were generated in (feature, k) order, so the first one inside
    // the tie band is the tie-break winner.
    for (const auto& c : candidates) {
        if (c.score <= min_score + tolerance) return SplitResult{c.feature, c.k, c.threshold, c.score};
    }
    throw InvariantError("best_split: no candidate within the tie band");
}

// ---------------------------------------------------------------------------
// Tree

Tree::Tree(Task task, std::size_t n_features, std::size_t n_classes, std::vector<Node> nodes)
    : task_(task), n_features_(n_features), n_classes_(task == Task::classification ? n_classes : 0),
      nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw UsageError("tree without nodes");
    for (const auto& node : nodes_) {
        if (node.is_leaf()) continue;
        if (static_cast<std::size_t>(node.feature) >= n_features_) throw UsageError("node feature index out of range");
        if (node.left >= nodes_.size() || node.right >= nodes_.size()) throw UsageError("node child index out of range");
        if (!std::isfinite(node.threshold)) throw UsageError("non-finite node threshold");
    }
}

std::size_t Tree::n_internal() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return !n.is_leaf(); }));
}

std::size_t Tree::depth() const {
    std::size_t deepest = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [index, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        const Node& node = nodes_[index];
        if (!node.is_leaf()) {
            stack.push_back({node.left, d + 1});
            stack.push_back({node.right, d + 1});
        }
    }
    return deepest;
}

std::size_t Tree::leaf_index(std::span<const double> x, Operator op, std::size_t* visits) const {
    if (x.size() != n_features_) {
        throw UsageError("input has " + std::to_string(x.size()) + " features, tree expects " +
                         std::to_string(n_features_));
    }
    std::size_t index = 0;
    std::size_t count = 1;
    while (!nodes_[index].is_leaf()) {
        const Node& node = nodes_[index];
        index = goes_left(x[static_cast<std::size_t>(node.feature)], node.threshold, op) ? node.left : node.right;
        ++count;
    }
    if (visits) *visits += count;
    return index;
}

std::vector<std::size_t> Tree::path(std::span<const double> x, Operator op) const {
    if (x.size() != n_features_) throw UsageError("input dimension mismatch");
    std::vector<std::size_t> out{0};
    std::size_t index = 0;
    while (!nodes_[index].is_leaf()) {
        const Node& node = nodes_[index];
        index = goes_left(x[static_cast<std::size_t>(node.feature)], node.threshold, op) ? node.left : node.right;
        out.push_back(index);
    }
    return out;
}

std::vector<double> predict(const Tree& tree, std::span<const double> x, Operator op) {
    auto leaf = tree.predict(x, op);
    return {leaf.begin(), leaf.end()};
}

std::vector<std::pair<std::size_t, double>> collect_thresholds(const Tree& tree) {
    std::vector<std::pair<std::size_t, double>> out;
    for (const auto& node : tree.nodes()) {
        if (!node.is_leaf()) out.emplace_back(static_cast<std::size_t>(node.feature), node.threshold);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Induction

namespace {

class TreeBuilder {
public:
    TreeBuilder(const Dataset& data, const Hyperparams& hp, Rng& rng) : data_(data), hp_(hp), rng_(rng) {}

    std::vector<Node> build(std::vector<std::size_t> rows) {
        grow(std::move(rows), 0);
        return std::move(nodes_);
    }

private:
    bool is_pure(const std::vector<std::size_t>& rows) const {
        const double first = data_.target(rows.front());
        return std::all_of(rows.begin(), rows.end(), [&](std::size_t r) { return data_.target(r) == first; });
    }

    std::vector<double> leaf_value(const std::vector<std::size_t>& rows) const {
        const double n = static_cast<double>(rows.size());
        if (data_.task() == Task::classification) {
            std::vector<double> counts(data_.n_classes(), 0.0);
            for (std::size_t r : rows) counts[data_.label(r)] += 1.0;
            for (double& c : counts) c /= n;
            return counts;
        }
        double sum = 0.0;
        for (std::size_t r : rows) sum += data_.target(r);
        return {sum / n};
    }

    std::vector<std::size_t> candidate_features() {
        const std::size_t d = data_.n_features();
        if (!hp_.n_random_features || *hp_.n_random_features >= d) {
            std::vector<std::size_t> all(d);
            std::iota(all.begin(), all.end(), 0);
            return all;
        }
        return rng_.sample_without_replacement(d, *hp_.n_random_features);
    }

    std::uint32_t make_leaf(const std::vector<std::size_t>& rows) {
        Node leaf;
        leaf.value = leaf_value(rows);
        leaf.n_samples = rows.size();
        nodes_.push_back(std::move(leaf));
        return static_cast<std::uint32_t>(nodes_.size() - 1);
    }

    std::uint32_t grow(std::vector<std::size_t> rows, std::size_t depth) {
        const bool depth_reached = hp_.max_depth && depth >= *hp_.max_depth;
        if (is_pure(rows) || rows.size() < 2 * hp_.min_samples_leaf || depth_reached) return make_leaf(rows);

        const auto features = candidate_features();
        const auto split = best_split(data_, rows, features, hp_);
        if (!split) return make_leaf(rows);

        std::vector<std::size_t> left_rows;
        std::vector<std::size_t> right_rows;
        for (std::size_t r : rows) {
            (data_.at(r, split->feature) <= split->threshold ? left_rows : right_rows).push_back(r);
        }
        if (left_rows.size() != split->k_star) throw InvariantError("split partition size disagrees with k*");

        const auto index = static_cast<std::uint32_t>(nodes_.size());
        Node internal;
        internal.feature = static_cast<std::int32_t>(split->feature);
        internal.threshold = split->threshold;
        internal.n_samples = rows.size();
        nodes_.push_back(internal);
        rows.clear();
        rows.shrink_to_fit();

        const auto left = grow(std::move(left_rows), depth + 1);
        const auto right = grow(std::move(right_rows), depth + 1);
        nodes_[index].left = left;
        nodes_[index].right = right;
        return index;
    }

    const Dataset& data_;
    const Hyperparams& hp_;
    Rng& rng_;
    std::vector<Node> nodes_;
};

}  // namespace

Tree fit_tree(const Dataset& data, const Hyperparams& hp, std::span<const std::size_t> rows, Rng& rng) {
    hp.validate(data.task());
    if (rows.empty()) throw UsageError("fit on an empty row subset");
    for (std::size_t r : rows) {
        if (r >= data.n_rows()) throw UsageError("row index out of range");
    }
    TreeBuilder builder(data, hp, rng);
    auto nodes = builder.build({rows.begin(), rows.end()});
    return Tree(data.task(), data.n_features(), data.n_classes(), std::move(nodes));
}

Tree fit_tree(const Dataset& data, const Hyperparams& hp) {
    std::vector<std::size_t> rows(data.n_rows());
    std::iota(rows.begin(), rows.end(), 0);
    Rng rng(hp.seed);
    return fit_tree(data, hp, rows, rng);
}

}  // namespace condbias
