#include "condbias/lattice.hpp"

#include <algorithm>
#include <unordered_set>

namespace condbias {

namespace {

// -0.0 and 0.0 compare equal but hash differently.
double canonical(double v) { return v == 0.0 ? 0.0 : v; }

std::vector<std::unordered_set<double>> observed_values(const Dataset& data) {
    std::vector<std::unordered_set<double>> out(data.n_features());
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        for (std::size_t f = 0; f < data.n_features(); ++f) out[f].insert(canonical(data.at(i, f)));
    }
    return out;
}

void count_tree(const Tree& tree, const std::vector<std::unordered_set<double>>& observed, bool negated,
                CollisionReport& report) {
    for (const auto& [feature, threshold] : collect_thresholds(tree)) {
        ++report.n_internal_nodes;
        const double t = canonical(negated ? -threshold : threshold);
        if (observed[feature].count(t) != 0) ++report.n_colliding;
    }
}

void finish(CollisionReport& report) {
    report.rho = report.n_internal_nodes == 0
                     ? 0.0
                     : static_cast<double>(report.n_colliding) / static_cast<double>(report.n_internal_nodes);
}

}  // namespace

bool is_lattice_feature(std::span<const double> values) {
    std::vector<double> unique;
    unique.reserve(values.size());
    for (double v : values) unique.push_back(canonical(v));
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    if (unique.size() < 3) return false;

    const std::unordered_set<double> members(unique.begin(), unique.end());
    for (std::size_t i = 0; i < unique.size(); ++i) {
        for (std::size_t j = i + 2; j < unique.size(); ++j) {
            const double mid = canonical((unique[i] + unique[j]) / 2.0);
            if (members.count(mid) != 0 && mid != unique[i] && mid != unique[j]) return true;
        }
    }
    return false;
}

LatticeReport lattice_report(const Dataset& data) {
    LatticeReport report;
    for (std::size_t f = 0; f < data.n_features(); ++f) {
        const bool lattice = is_lattice_feature(data.column(f));
        report.is_lattice.push_back(lattice);
        if (lattice) ++report.n_lattice;
    }
    report.proportion = static_cast<double>(report.n_lattice) / static_cast<double>(data.n_features());
    return report;
}

CollisionReport threshold_collision_ratio(const Tree& tree, const Dataset& data, bool negated) {
    if (tree.nodes().empty()) throw UsageError("collision audit of an unfitted tree");
    if (tree.n_features() != data.n_features()) throw UsageError("tree and data disagree on feature count");
    CollisionReport report;
    count_tree(tree, observed_values(data), negated, report);
    finish(report);
    return report;
}

CollisionReport threshold_collision_ratio(const Forest& forest, const Dataset& data) {
    if (forest.trees.empty()) throw UsageError("collision audit of an unfitted forest");
    if (forest.n_features != data.n_features()) throw UsageError("forest and data disagree on feature count");
    const auto observed = observed_values(data);
    CollisionReport report;
    for (std::size_t i = 0; i < forest.size(); ++i) count_tree(forest.trees[i], observed, forest.negated[i], report);
    finish(report);
    return report;
}

}  // namespace condbias
