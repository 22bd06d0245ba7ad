#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "condbias/ensemble.hpp"
#include "condbias/lattice.hpp"
#include "condbias/serialize.hpp"
#include "condbias/stats.hpp"

namespace condbias {

enum class ModelKind { tree, forest };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

struct ModelSpec {
    ModelKind kind = ModelKind::tree;
    Hyperparams hp;
    std::size_t n_estimators = 100;
    std::optional<std::size_t> max_features;
    bool independent_negated_bootstrap = false;
};

struct CvSettings {
    std::size_t k = 5;
    std::size_t repeats = 20;
    std::uint64_t seed = 0;
    bool stratified = true;
    std::size_t threads = 1;
};

/// Fits the model on `rows`. Forests are trained for `strategy` (only
/// NegatedHalf changes training) with seed `seed`.
Model fit_model(const Dataset& data, std::span<const std::size_t> rows, const ModelSpec& spec, std::uint64_t seed,
                Strategy strategy = Strategy::DefaultLE);

/// Prediction under a strategy. Trees support DefaultLE, NonDefaultLT and DualAverage.
std::vector<double> predict_model(const Model& model, std::span<const double> x, Strategy strategy);

CollisionReport threshold_collision_ratio(const Model& model, const Dataset& data);

/**
 * Score of predictions on a test fold: ROC AUC of the positive-class
 * probability for binary classification (macro one-vs-rest above two
 * classes), r^2 for regression. nullopt when the fold is degenerate: a
 * single class present, or constant targets.
 */
std::optional<double> score_fold(const Dataset& data, std::span<const std::size_t> test_rows,
                                 const std::vector<std::vector<double>>& predictions);

// ---------------------------------------------------------------------------
// Model selection

/// Minimum-leaf-size fractions of N explored by the default grid.
inline constexpr double kLeafFractions[] = {0.005, 0.01, 0.02, 0.05, 0.10, 0.15, 0.20};
inline constexpr std::size_t kMinGridDepth = 2;
inline constexpr std::size_t kMaxGridDepth = 15;

/// min_samples_leaf = ceil(p * N) for each fraction (deduplicated, depth
/// unbounded), followed by max_depth = 2..15 (min_samples_leaf = 1).
std::vector<Hyperparams> default_grid(std::size_t n_rows, const Hyperparams& base);

struct GridScore {
    Hyperparams hp;
    double mean_score = 0.0;
    std::size_t n_folds = 0;
};

struct SelectionResult {
    Hyperparams best;
    double best_score = 0.0;
    std::vector<GridScore> evaluated;
};

/// Picks the grid point with the highest mean CV score under the default
/// operator. Exact ties go to the larger min_samples_leaf, then the smaller
/// max_depth, then the earlier point.
SelectionResult model_select(const Dataset& data, const ModelSpec& spec, const std::vector<Hyperparams>& grid,
                             const CvSettings& cv);

// ---------------------------------------------------------------------------
// Experiments

struct BiasReport {
    double rho = 0.0;
    double rho_k = 0.0;
    double mean_le = 0.0;
    double mean_lt = 0.0;
    double score_diff = 0.0;  ///< mean_le - mean_lt
    double p_neq = 1.0;
    bool p_neq_significant = false;
    std::size_t n_folds = 0;
    std::size_t n_skipped = 0;
    std::vector<double> fold_rho;
    PairedScores scores;  ///< a: LE, b: LT
};

BiasReport run_bias_experiment(const Dataset& data, const ModelSpec& spec, const CvSettings& cv);

enum class Dominance { dominates, minorized, indistinguishable };

std::string to_string(Dominance dominance);

struct MitigationReport {
    Strategy strategy = Strategy::DualAverage;
    double p_neq = 1.0;
    bool p_neq_significant = false;
    Dominance vs_le = Dominance::indistinguishable;
    Dominance vs_lt = Dominance::indistinguishable;
    double p_strategy_gt_le = 1.0;
    double p_le_gt_strategy = 1.0;
    double p_strategy_gt_lt = 1.0;
    double p_lt_gt_strategy = 1.0;
    double mean_le = 0.0;
    double mean_lt = 0.0;
    double mean_strategy = 0.0;
    double improvement_over_worst = 0.0;
    std::size_t n_folds = 0;
    std::size_t n_skipped = 0;
    std::vector<double> scores_le;
    std::vector<double> scores_lt;
    std::vector<double> scores_strategy;
};

/// Evaluates LE, LT and `strategy` on the same folds and models.
MitigationReport run_mitigation_experiment(const Dataset& data, const ModelSpec& spec, const CvSettings& cv,
                                           Strategy strategy);

// ---------------------------------------------------------------------------
// Configuration and reports

struct ExperimentConfig {
    std::string name;
    std::filesystem::path data;
    std::filesystem::path schema;
    std::optional<Task> task;  ///< overrides the schema's task
    ModelSpec model;
    CvSettings cv;
    bool select = false;  ///< run model_select over the default grid first
    std::vector<Strategy> strategies;
    std::filesystem::path out;  ///< report path prefix
};

/// Reads a JSON config; relative paths resolve against the config's directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config(const std::string& json_text, const std::filesystem::path& base_dir);

std::string bias_csv(const std::string& dataset, const ModelSpec& spec, Task task, const BiasReport& report);
std::string bias_json(const std::string& dataset, const ModelSpec& spec, Task task, const BiasReport& report);
std::string mitigation_csv(const std::string& dataset, const ModelSpec& spec, Task task,
                           const std::vector<MitigationReport>& reports);
std::string mitigation_json(const std::string& dataset, const ModelSpec& spec, Task task,
                            const std::vector<MitigationReport>& reports);
std::string lattice_json(const Dataset& data, const LatticeReport& report);

/// Shortest decimal that reads back as the same double.
std::string format_real(double value);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace condbias
