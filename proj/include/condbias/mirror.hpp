#pragma once

#include <span>
#include <vector>

#include "condbias/tree.hpp"

namespace condbias {

/// Swaps the children of every internal node and negates its threshold.
/// Leaves are untouched; mirror(mirror(t)) == t.
Tree mirror(const Tree& tree);

/// Prediction with the non-default operator, evaluated directly (LT routing).
std::vector<double> predict_nondefault(const Tree& tree, std::span<const double> x);

/// Predicts -x with the default operator. Applied to mirror(t), or to a tree
/// fitted on negated features, this reproduces predict_nondefault(t, x).
std::vector<double> predict_negated(const Tree& tree, std::span<const double> x);

/// fit_tree on a copy of the data with every feature value negated.
Tree fit_on_negated(const Dataset& data, const Hyperparams& hp, std::span<const std::size_t> rows, Rng& rng);
Tree fit_on_negated(const Dataset& data, const Hyperparams& hp);

}  // namespace condbias
