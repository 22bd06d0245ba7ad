#include "condbias/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "parallel.hpp"

namespace condbias {

std::string to_string(ModelKind kind) { return kind == ModelKind::tree ? "tree" : "forest"; }

ModelKind parse_model_kind(const std::string& text) {
    if (text == "tree") return ModelKind::tree;
    if (text == "forest") return ModelKind::forest;
    throw UsageError("unknown model '" + text + "' (expected tree or forest)");
}

std::string to_string(Dominance dominance) {
    switch (dominance) {
        case Dominance::dominates: return "dominates";
        case Dominance::minorized: return "minorized";
        case Dominance::indistinguishable: return "indistinguishable";
    }
    return "?";
}

Model fit_model(const Dataset& data, std::span<const std::size_t> rows, const ModelSpec& spec, std::uint64_t seed,
                Strategy strategy) {
    Hyperparams hp = spec.hp;
    hp.seed = seed;
    if (spec.kind == ModelKind::tree) {
        Rng rng(seed);
        return fit_tree(data, hp, rows, rng);
    }
    ForestParams params;
    params.n_estimators = spec.n_estimators;
    params.strategy = strategy == Strategy::NegatedHalf ? Strategy::NegatedHalf : Strategy::DefaultLE;
    params.max_features = spec.max_features;
    params.independent_negated_bootstrap = spec.independent_negated_bootstrap;
    params.threads = 1;
    return fit_forest(data, rows, hp, params);
}

std::vector<double> predict_model(const Model& model, std::span<const double> x, Strategy strategy) {
    if (const Tree* tree = std::get_if<Tree>(&model)) {
        switch (strategy) {
            case Strategy::DefaultLE: return predict(*tree, x, Operator::LE);
            case Strategy::NonDefaultLT: return predict(*tree, x, Operator::LT);
            case Strategy::DualAverage: return predict_integrated(*tree, x);
            default: throw UsageError("strategy " + to_string(strategy) + " needs a forest");
        }
    }
    return predict_forest(std::get<Forest>(model), x, strategy);
}

CollisionReport threshold_collision_ratio(const Model& model, const Dataset& data) {
    return std::visit([&](const auto& m) { return threshold_collision_ratio(m, data); }, model);
}

std::optional<double> score_fold(const Dataset& data, std::span<const std::size_t> test_rows,
                                 const std::vector<std::vector<double>>& predictions) {
    if (predictions.size() != test_rows.size()) throw UsageError("score_fold: prediction count mismatch");
    if (data.task() == Task::regression) {
        std::vector<double> y;
        std::vector<double> yhat;
        for (std::size_t i = 0; i < test_rows.size(); ++i) {
            y.push_back(data.target(test_rows[i]));
            yhat.push_back(predictions[i].at(0));
        }
        if (y.size() < 2 || std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); })) {
            return std::nullopt;
        }
        return r2(yhat, y);
    }

    const std::size_t n_classes = data.n_classes();
    const std::size_t first_class = n_classes == 2 ? 1 : 0;
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t c = first_class; c < n_classes; ++c) {
        std::vector<double> scores;
        std::vector<int> labels;
        for (std::size_t i = 0; i < test_rows.size(); ++i) {
            scores.push_back(predictions[i].at(c));
            labels.push_back(data.label(test_rows[i]) == c ? 1 : 0);
        }
        const auto positives = std::count(labels.begin(), labels.end(), 1);
        if (positives == 0 || positives == static_cast<long>(labels.size())) continue;
        total += roc_auc(scores, labels);
        ++used;
    }
    if (used == 0) return std::nullopt;
    return total / static_cast<double>(used);
}

namespace {

std::vector<std::size_t> stratification_labels(const Dataset& data) {
    std::vector<std::size_t> labels(data.n_rows());
    for (std::size_t i = 0; i < data.n_rows(); ++i) labels[i] = data.label(i);
    return labels;
}

FoldAssignment plan_folds(const Dataset& data, const CvSettings& cv) {
    FoldPlan plan{cv.k, cv.repeats, cv.seed, cv.stratified};
    if (data.task() == Task::classification) {
        const auto labels = stratification_labels(data);
        return make_folds(data.n_rows(), std::span<const std::size_t>(labels), plan);
    }
    return make_folds(data.n_rows(), std::nullopt, plan);
}

// Train/test rows of one (repeat, fold) unit, audited for leakage.
struct FoldRows {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

FoldRows fold_rows(const FoldAssignment& folds, std::size_t repeat, std::size_t fold) {
    FoldRows rows;
    split_fold(folds[repeat], fold, rows.train, rows.test);
    std::vector<bool> in_test(folds[repeat].size(), false);
    for (std::size_t r : rows.test) in_test[r] = true;
    for (std::size_t r : rows.train) {
        if (in_test[r]) throw InvariantError("row " + std::to_string(r) + " is in both train and test fold");
    }
    return rows;
}

std::uint64_t fold_seed(const CvSettings& cv, std::size_t repeat, std::size_t fold) {
    return derive_seed(cv.seed, repeat, fold);
}

std::vector<std::vector<double>> predict_rows(const Model& model, const Dataset& data,
                                              std::span<const std::size_t> rows, Strategy strategy) {
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(predict_model(model, data.row(r), strategy));
    return out;
}

double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Orders grid points by regularization strength: larger leaves, then shallower trees.
bool more_regularized(const Hyperparams& a, const Hyperparams& b) {
    if (a.min_samples_leaf != b.min_samples_leaf) return a.min_samples_leaf > b.min_samples_leaf;
    const std::size_t da = a.max_depth.value_or(std::numeric_limits<std::size_t>::max());
    const std::size_t db = b.max_depth.value_or(std::numeric_limits<std::size_t>::max());
    return da < db;
}

Dominance classify(double p_strategy_greater, double p_operator_greater) {
    if (p_strategy_greater < kSignificanceLevel) return Dominance::dominates;
    if (p_operator_greater < kSignificanceLevel) return Dominance::minorized;
    return Dominance::indistinguishable;
}

}  // namespace

std::vector<Hyperparams> default_grid(std::size_t n_rows, const Hyperparams& base) {
    std::vector<Hyperparams> grid;
    std::vector<std::size_t> seen;
    for (double fraction : kLeafFractions) {
        const auto leaf = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n_rows) - 1e-9)));
        if (std::find(seen.begin(), seen.end(), leaf) != seen.end()) continue;
        seen.push_back(leaf);
        Hyperparams hp = base;
        hp.min_samples_leaf = leaf;
        hp.max_depth.reset();
        grid.push_back(hp);
    }
    for (std::size_t depth = kMinGridDepth; depth <= kMaxGridDepth; ++depth) {
        Hyperparams hp = base;
        hp.min_samples_leaf = 1;
        hp.max_depth = depth;
        grid.push_back(hp);
    }
    return grid;
}

SelectionResult model_select(const Dataset& data, const ModelSpec& spec, const std::vector<Hyperparams>& grid,
                             const CvSettings& cv) {
    if (grid.empty()) throw UsageError("model_select: empty grid");
    const auto folds = plan_folds(data, cv);
    const std::size_t units_per_point = cv.repeats * cv.k;

    std::vector<std::optional<double>> scores(grid.size() * units_per_point);
    detail::parallel_for(scores.size(), cv.threads, [&](std::size_t u) {
        const std::size_t point = u / units_per_point;
        const std::size_t repeat = (u % units_per_point) / cv.k;
        const std::size_t fold = u % cv.k;
        const auto rows = fold_rows(folds, repeat, fold);
        ModelSpec local = spec;
        local.hp = grid[point];
        const Model model = fit_model(data, rows.train, local, fold_seed(cv, repeat, fold));
        scores[u] = score_fold(data, rows.test, predict_rows(model, data, rows.test, Strategy::DefaultLE));
    });

    SelectionResult result;
    bool have_best = false;
    for (std::size_t p = 0; p < grid.size(); ++p) {
        std::vector<double> valid;
        for (std::size_t u = 0; u < units_per_point; ++u) {
            if (const auto& s = scores[p * units_per_point + u]) valid.push_back(*s);
        }
        if (valid.empty()) continue;
        const double m = mean(valid);
        result.evaluated.push_back({grid[p], m, valid.size()});
        const bool better = !have_best || m > result.best_score ||
                            (m == result.best_score && more_regularized(grid[p], result.best));
        if (better) {
            result.best = grid[p];
            result.best_score = m;
            have_best = true;
        }
    }
    if (!have_best) throw DataError("model_select: every grid point failed (all folds degenerate)");
    return result;
}

BiasReport run_bias_experiment(const Dataset& data, const ModelSpec& spec, const CvSettings& cv) {
    BiasReport report;
    {
        std::vector<std::size_t> all(data.n_rows());
        std::iota(all.begin(), all.end(), 0);
        report.rho = threshold_collision_ratio(fit_model(data, all, spec, cv.seed), data).rho;
    }

    struct Unit {
        double rho = 0.0;
        std::optional<double> le;
        std::optional<double> lt;
    };
    const auto folds = plan_folds(data, cv);
    std::vector<Unit> units(cv.repeats * cv.k);
    detail::parallel_for(units.size(), cv.threads, [&](std::size_t u) {
        const std::size_t repeat = u / cv.k;
        const std::size_t fold = u % cv.k;
        const auto rows = fold_rows(folds, repeat, fold);
        const Model model = fit_model(data, rows.train, spec, fold_seed(cv, repeat, fold));
        units[u].rho = threshold_collision_ratio(model, data.subset(rows.train)).rho;
        units[u].le = score_fold(data, rows.test, predict_rows(model, data, rows.test, Strategy::DefaultLE));
        units[u].lt = score_fold(data, rows.test, predict_rows(model, data, rows.test, Strategy::NonDefaultLT));
    });

    for (const auto& unit : units) {
        report.fold_rho.push_back(unit.rho);
        if (!unit.le || !unit.lt) {
            ++report.n_skipped;
            continue;
        }
        report.scores.a.push_back(*unit.le);
        report.scores.b.push_back(*unit.lt);
    }
    report.n_folds = report.scores.a.size();
    if (report.n_folds == 0) throw DataError("bias experiment: every fold was degenerate");

    report.rho_k = mean(report.fold_rho);
    report.mean_le = mean(report.scores.a);
    report.mean_lt = mean(report.scores.b);
    report.score_diff = report.mean_le - report.mean_lt;
    report.p_neq = wilcoxon(report.scores, Alternative::two_sided).p_value;
    report.p_neq_significant = report.p_neq < kSignificanceLevel;
    return report;
}

MitigationReport run_mitigation_experiment(const Dataset& data, const ModelSpec& spec, const CvSettings& cv,
                                           Strategy strategy) {
    if (spec.kind == ModelKind::tree && strategy != Strategy::DualAverage) {
        throw UsageError("decision trees support only the dual_average mitigation strategy");
    }
    if (strategy != Strategy::DualAverage && strategy != Strategy::HalfHalf && strategy != Strategy::NegatedHalf) {
        throw UsageError("mitigation strategy must be dual_average, half_half or negated_half");
    }

    struct Unit {
        std::optional<double> le;
        std::optional<double> lt;
        std::optional<double> mitigated;
    };
    const auto folds = plan_folds(data, cv);
    std::vector<Unit> units(cv.repeats * cv.k);
    detail::parallel_for(units.size(), cv.threads, [&](std::size_t u) {
        const std::size_t repeat = u / cv.k;
        const std::size_t fold = u % cv.k;
        const auto rows = fold_rows(folds, repeat, fold);
        const Model model = fit_model(data, rows.train, spec, fold_seed(cv, repeat, fold), strategy);
        units[u].le = score_fold(data, rows.test, predict_rows(model, data, rows.test, Strategy::DefaultLE));
        units[u].lt = score_fold(data, rows.test, predict_rows(model, data, rows.test, Strategy::NonDefaultLT));
        units[u].mitigated = score_fold(data, rows.test, predict_rows(model, data, rows.test, strategy));
    });

    MitigationReport report;
    report.strategy = strategy;
    for (const auto& unit : units) {
        if (!unit.le || !unit.lt || !unit.mitigated) {
            ++report.n_skipped;
            continue;
        }
        report.scores_le.push_back(*unit.le);
        report.scores_lt.push_back(*unit.lt);
        report.scores_strategy.push_back(*unit.mitigated);
    }
    report.n_folds = report.scores_le.size();
    if (report.n_folds == 0) throw DataError("mitigation experiment: every fold was degenerate");

    const PairedScores le_lt{report.scores_le, report.scores_lt};
    report.p_neq = wilcoxon(le_lt, Alternative::two_sided).p_value;
    report.p_neq_significant = report.p_neq < kSignificanceLevel;
    report.p_strategy_gt_le = wilcoxon({report.scores_strategy, report.scores_le}, Alternative::greater).p_value;
    report.p_le_gt_strategy = wilcoxon({report.scores_le, report.scores_strategy}, Alternative::greater).p_value;
    report.p_strategy_gt_lt = wilcoxon({report.scores_strategy, report.scores_lt}, Alternative::greater).p_value;
    report.p_lt_gt_strategy = wilcoxon({report.scores_lt, report.scores_strategy}, Alternative::greater).p_value;
    report.vs_le = classify(report.p_strategy_gt_le, report.p_le_gt_strategy);
    report.vs_lt = classify(report.p_strategy_gt_lt, report.p_lt_gt_strategy);
    report.mean_le = mean(report.scores_le);
    report.mean_lt = mean(report.scores_lt);
    report.mean_strategy = mean(report.scores_strategy);
    report.improvement_over_worst = report.mean_strategy - std::min(report.mean_le, report.mean_lt);
    return report;
}

}  // namespace condbias
