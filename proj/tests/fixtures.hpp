#pragma once

#include <vector>

#include "condbias/core.hpp"
#include "condbias/rng.hpp"
#include "condbias/tree.hpp"

namespace fixtures {

using condbias::Dataset;
using condbias::Rng;
using condbias::Task;

/// The six loan records of the worked example: self-employed, income (k), dependents.
inline Dataset loan_records() {
    return Dataset(6, 3, {0, 80, 1, 0, 60, 3, 0, 80, 1, 1, 50, 2, 1, 50, 4, 1, 70, 4}, {1, 1, 0, 0, 1, 0},
                   Task::classification, {"self_employed", "income", "dependents"}, 2);
}

/**
 * Planted lattice. Feature 0 is a group flag, feature 1 takes values {0, 1, 2}
 * and feature 2 is continuous noise. Group 0 holds levels 0 and 2 (label =
 * level == 2) plus a single level-1 record labelled like level 2. Group 1 has
 * the opposite pattern, so the tree splits on the group first. Whenever the
 * lone record sits in a test fold, group 0's training rows split level at
 * exactly 1, a value observed elsewhere, and LE sends the record with level 0.
 */
inline Dataset planted_lattice(std::uint64_t seed, std::size_t n = 200, double noise = 0.0) {
    Rng rng(seed);
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < n; ++i) {
        const double group = static_cast<double>(i % 2);
        double level;
        double label;
        if (group == 0.0) {
            level = i == 0 ? 1.0 : 2.0 * static_cast<double>(rng.uniform_index(2));
            label = level >= 1.0 ? 1.0 : 0.0;
        } else {
            const double u = rng.uniform01();
            level = u < 0.6 ? 0.0 : (u < 0.7 ? 2.0 : 1.0);
            label = level == 2.0 ? 0.0 : 1.0;
        }
        if (i > 0 && rng.uniform01() < noise) label = 1.0 - label;
        x.push_back(group);
        x.push_back(level);
        x.push_back(rng.uniform01());
        y.push_back(label);
    }
    return Dataset(n, 3, std::move(x), std::move(y), Task::classification, {"group", "level", "noise"}, 2);
}

/// Tree settings under which the planted collision shows up.
inline condbias::Hyperparams planted_hyperparams() {
    condbias::Hyperparams hp = condbias::default_hyperparams(Task::classification);
    hp.min_samples_leaf = 5;
    return hp;
}

/// Continuous features only: thresholds essentially never meet observed values.
inline Dataset continuous(std::uint64_t seed, std::size_t n = 120) {
    Rng rng(seed);
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = rng.uniform01();
        const double b = rng.uniform01();
        x.push_back(a);
        x.push_back(b);
        y.push_back(a + 0.3 * rng.uniform01() > 0.6 ? 1.0 : 0.0);
    }
    return Dataset(n, 2, std::move(x), std::move(y), Task::classification, {}, 2);
}

}  // namespace fixtures
