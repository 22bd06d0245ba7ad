#pragma once

#include <string>
#include <variant>

#include "condbias/ensemble.hpp"

namespace condbias {

inline constexpr int kModelFormatVersion = 1;

using Model = std::variant<Tree, Forest>;

/**
 * Versioned JSON model document.
 *
 *   tree:   {"version", "kind": "tree", "task", "n_classes", "n_features", "root": node}
 *   forest: {"version", "kind": "forest", "task", "n_classes", "n_features", "seed",
 *            "strategy", "hyperparams", "trees": [node, ...]}
 *   node:   {"f": int, "t": number, "l": node, "r": node}
 *         | {"leaf": [probabilities] | number, "n": int}
 *
 * A forest tree fitted on negated features carries "negated": true on its
 * root object. Thresholds are written in shortest round-trip form, so
 * serialize(deserialize(s)) == s.
 */
std::string serialize_model(const Tree& tree);
std::string serialize_model(const Forest& forest);
std::string serialize_model(const Model& model);

/// Throws DataError on version mismatch, malformed nodes or bad indices.
Model deserialize_model(const std::string& text);

}  // namespace condbias
