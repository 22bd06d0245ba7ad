#pragma once

#include <span>
#include <vector>

#include "condbias/ensemble.hpp"

namespace condbias {

/// True iff some observed value is the exact mid-point of two distinct
/// observed values, i.e. x - r and x + r are observed for some r > 0.
bool is_lattice_feature(std::span<const double> values);

struct LatticeReport {
    std::vector<bool> is_lattice;
    std::size_t n_lattice = 0;
    double proportion = 0.0;
};

LatticeReport lattice_report(const Dataset& data);

struct CollisionReport {
    std::size_t n_internal_nodes = 0;
    std::size_t n_colliding = 0;
    double rho = 0.0;  ///< 0 when there are no internal nodes
};

/**
 * Counts internal nodes whose threshold equals, exactly, an observed value of
 * the node's feature in `data`. For a tree trained on negated features pass
 * negated = true; its thresholds are compared after negation.
 */
CollisionReport threshold_collision_ratio(const Tree& tree, const Dataset& data, bool negated = false);

/// Pooled over all trees of the forest.
CollisionReport threshold_collision_ratio(const Forest& forest, const Dataset& data);

}  // namespace condbias
