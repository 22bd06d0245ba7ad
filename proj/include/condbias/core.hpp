#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "condbias/errors.hpp"

namespace condbias {

enum class Task { classification, regression };

std::string to_string(Task task);
Task parse_task(const std::string& text);

/**
 * Rectangular numeric data set after preprocessing.
 *
 * Features are stored row-major. Classification targets are class indices
 * 0..n_classes-1 stored as doubles; regression targets are arbitrary reals.
 */
class Dataset {
public:
    Dataset() = default;
    Dataset(std::size_t n_rows, std::size_t n_features, std::vector<double> features,
            std::vector<double> targets, Task task, std::vector<std::string> feature_names,
            std::size_t n_classes);

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_features() const { return n_features_; }
    Task task() const { return task_; }
    std::size_t n_classes() const { return n_classes_; }

    double at(std::size_t row, std::size_t feature) const {
        return features_[row * n_features_ + feature];
    }
    std::span<const double> row(std::size_t row) const {
        return {features_.data() + row * n_features_, n_features_};
    }
    double target(std::size_t row) const { return targets_[row]; }
    std::size_t label(std::size_t row) const { return static_cast<std::size_t>(targets_[row]); }

    const std::vector<double>& features() const { return features_; }
    const std::vector<double>& targets() const { return targets_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }

    /// Values of one feature column in row order.
    std::vector<double> column(std::size_t feature) const;

    /// Same targets, every feature value multiplied by -1.
    Dataset negated() const;

    /// Rows selected by index (duplicates allowed), preserving n_classes.
    Dataset subset(std::span<const std::size_t> rows) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::size_t n_rows_ = 0;
    std::size_t n_features_ = 0;
    std::vector<double> features_;
    std::vector<double> targets_;
    Task task_ = Task::classification;
    std::vector<std::string> feature_names_;
    std::size_t n_classes_ = 0;
};

// ---------------------------------------------------------------------------
// Raw columns and preprocessing

enum class ColumnKind { numeric, categorical };

struct Missing {
    friend bool operator==(Missing, Missing) = default;
};

using RawValue = std::variant<Missing, double, std::string>;

struct RawColumn {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    std::vector<RawValue> values;

    std::size_t size() const { return values.size(); }
    bool has_missing() const;

    friend bool operator==(const RawColumn&, const RawColumn&) = default;
};

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
};

/// Sidecar schema: declared column kinds, target column name and task.
/// Columns present in the file but not declared are treated as numeric.
struct Schema {
    std::vector<ColumnSpec> columns;
    std::string target;
    Task task = Task::classification;

    ColumnKind kind_of(const std::string& name) const;
};

Schema load_schema(const std::filesystem::path& path);
Schema parse_schema(const std::string& json_text);

struct RawTable {
    std::vector<RawColumn> columns;      ///< file order, target removed
    std::vector<std::string> target;     ///< raw target cells
};

/// Parses an RFC-4180 CSV file. Empty cells and "?" are MISSING.
RawTable load_csv(const std::filesystem::path& path, const Schema& schema);
RawTable parse_csv(const std::string& text, const Schema& schema, const std::string& source = "<memory>");

/// Replaces MISSING by the modal value. Ties go to the smallest value
/// (numeric) or the lexicographically smallest string (categorical).
RawColumn impute_most_frequent(const RawColumn& column);

/// One-hot encoding for at most 5 categories, integer codes otherwise.
/// Categories are ordered by first occurrence. Numeric columns pass through.
std::vector<RawColumn> encode_categories(const RawColumn& column);

inline constexpr std::size_t kMaxOneHotCategories = 5;

/// Builds a Dataset from imputed, numeric columns. Classification targets are
/// re-coded to 0..C-1 by sorted original label value.
Dataset assemble(const std::vector<RawColumn>& columns, const std::vector<std::string>& targets, Task task);

/// Full pipeline: impute, encode, assemble.
Dataset preprocess(const RawTable& table, Task task);

/// Convenience: schema sidecar + CSV -> Dataset.
Dataset load_dataset(const std::filesystem::path& csv, const std::filesystem::path& schema);

/// Default sidecar path for a data file: "name.csv" -> "name.schema.json".
std::filesystem::path default_schema_path(const std::filesystem::path& csv);

}  // namespace condbias
