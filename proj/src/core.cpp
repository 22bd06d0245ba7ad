#include "condbias/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

namespace condbias {

std::string to_string(Task task) {
    return task == Task::classification ? "classification" : "regression";
}

Task parse_task(const std::string& text) {
    if (text == "classification") return Task::classification;
    if (text == "regression") return Task::regression;
    throw UsageError("unknown task '" + text + "' (expected classification or regression)");
}

Dataset::Dataset(std::size_t n_rows, std::size_t n_features, std::vector<double> features,
                 std::vector<double> targets, Task task, std::vector<std::string> feature_names,
                 std::size_t n_classes)
    : n_rows_(n_rows),
      n_features_(n_features),
      features_(std::move(features)),
      targets_(std::move(targets)),
      task_(task),
      feature_names_(std::move(feature_names)),
      n_classes_(task == Task::classification ? n_classes : 0) {
    if (n_rows_ == 0 || n_features_ == 0) throw DataError("dataset must have at least one row and one feature");
    if (features_.size() != n_rows_ * n_features_) throw DataError("feature matrix size mismatch");
    if (targets_.size() != n_rows_) throw DataError("target length mismatch");
    if (feature_names_.empty()) {
        for (std::size_t f = 0; f < n_features_; ++f) feature_names_.push_back("x" + std::to_string(f));
    }
    if (feature_names_.size() != n_features_) throw DataError("feature name count mismatch");
    for (double v : features_) {
        if (!std::isfinite(v)) throw DataError("non-finite feature value");
    }
    for (double y : targets_) {
        if (!std::isfinite(y)) throw DataError("non-finite target value");
        if (task_ == Task::classification &&
            (y != std::floor(y) || y < 0 || y >= static_cast<double>(n_classes_))) {
            throw DataError("classification target outside [0, n_classes)");
        }
    }
    if (task_ == Task::classification && n_classes_ < 2) {
        throw DataError("classification requires at least two classes");
    }
}

std::vector<double> Dataset::column(std::size_t feature) const {
    std::vector<double> out(n_rows_);
    for (std::size_t i = 0; i < n_rows_; ++i) out[i] = at(i, feature);
    return out;
}

Dataset Dataset::negated() const {
    Dataset out = *this;
    for (double& v : out.features_) v = -v;
    return out;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.n_rows_ = rows.size();
    out.n_features_ = n_features_;
    out.task_ = task_;
    out.n_classes_ = n_classes_;
    out.feature_names_ = feature_names_;
    out.features_.reserve(rows.size() * n_features_);
    out.targets_.reserve(rows.size());
    for (std::size_t r : rows) {
        auto x = row(r);
        out.features_.insert(out.features_.end(), x.begin(), x.end());
        out.targets_.push_back(targets_[r]);
    }
    return out;
}

bool RawColumn::has_missing() const {
    return std::any_of(values.begin(), values.end(),
                       [](const RawValue& v) { return std::holds_alternative<Missing>(v); });
}

RawColumn impute_most_frequent(const RawColumn& column) {
    // std::map orders keys, so the first key with the maximal count is the
    // smallest one: that is the tie rule.
    RawValue mode = Missing{};
    if (column.kind == ColumnKind::numeric) {
        std::map<double, std::size_t> counts;
        for (const auto& v : column.values) {
            if (const double* d = std::get_if<double>(&v)) ++counts[*d];
        }
        std::size_t best = 0;
        for (const auto& [value, count] : counts) {
            if (count > best) {
                best = count;
                mode = value;
            }
        }
    } else {
        std::map<std::string, std::size_t> counts;
        for (const auto& v : column.values) {
            if (const auto* s = std::get_if<std::string>(&v)) ++counts[*s];
        }
        std::size_t best = 0;
        for (const auto& [value, count] : counts) {
            if (count > best) {
                best = count;
                mode = value;
            }
        }
    }
    if (std::holds_alternative<Missing>(mode)) {
        throw DataError("column '" + column.name + "': cannot impute an all-missing column");
    }
    RawColumn out = column;
    for (auto& v : out.values) {
        if (std::holds_alternative<Missing>(v)) v = mode;
    }
    return out;
}

std::vector<RawColumn> encode_categories(const RawColumn& column) {
    if (column.kind == ColumnKind::numeric) return {column};
    if (column.has_missing()) throw DataError("column '" + column.name + "': encode before imputation");

    std::vector<std::string> categories;
    std::map<std::string, std::size_t> code;
    for (const auto& v : column.values) {
        const auto& s = std::get<std::string>(v);
        if (code.emplace(s, categories.size()).second) categories.push_back(s);
    }

    std::vector<RawColumn> out;
    if (categories.size() <= kMaxOneHotCategories) {
        for (const auto& category : categories) {
            RawColumn indicator{column.name + "=" + category, ColumnKind::numeric, {}};
            indicator.values.reserve(column.size());
            for (const auto& v : column.values) {
                indicator.values.emplace_back(std::get<std::string>(v) == category ? 1.0 : 0.0);
            }
            out.push_back(std::move(indicator));
        }
    } else {
        RawColumn codes{column.name, ColumnKind::numeric, {}};
        codes.values.reserve(column.size());
        for (const auto& v : column.values) {
            codes.values.emplace_back(static_cast<double>(code.at(std::get<std::string>(v))));
        }
        out.push_back(std::move(codes));
    }
    return out;
}

namespace {

std::optional<double> as_number(const std::string& s) {
    double value = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) return std::nullopt;
    return value;
}

// Maps labels to 0..C-1 by sorted label value: numerically when every label is
// a number, lexicographically otherwise.
std::pair<std::vector<double>, std::size_t> recode_labels(const std::vector<std::string>& labels) {
    std::vector<double> numeric;
    numeric.reserve(labels.size());
    bool all_numeric = true;
    for (const auto& l : labels) {
        auto v = as_number(l);
        if (!v) {
            all_numeric = false;
            break;
        }
        numeric.push_back(*v);
    }
    std::vector<double> codes(labels.size());
    std::size_t n_classes = 0;
    if (all_numeric) {
        std::map<double, std::size_t> rank;
        for (double v : numeric) rank.emplace(v, 0);
        for (auto& [v, r] : rank) r = n_classes++;
        for (std::size_t i = 0; i < labels.size(); ++i) codes[i] = static_cast<double>(rank.at(numeric[i]));
    } else {
        std::map<std::string, std::size_t> rank;
        for (const auto& l : labels) rank.emplace(l, 0);
        for (auto& [l, r] : rank) r = n_classes++;
        for (std::size_t i = 0; i < labels.size(); ++i) codes[i] = static_cast<double>(rank.at(labels[i]));
    }
    return {codes, n_classes};
}

}  // namespace

Dataset assemble(const std::vector<RawColumn>& columns, const std::vector<std::string>& targets, Task task) {
    const std::size_t n = targets.size();
    if (columns.empty()) throw DataError("no feature columns");
    for (const auto& c : columns) {
        if (c.size() != n) {
            throw DataError("column '" + c.name + "' has " + std::to_string(c.size()) + " values, expected " +
                            std::to_string(n));
        }
        if (c.kind != ColumnKind::numeric) throw DataError("column '" + c.name + "' is not numeric");
    }

    std::vector<double> y;
    std::size_t n_classes = 0;
    if (task == Task::classification) {
        std::tie(y, n_classes) = recode_labels(targets);
        if (n_classes < 2) throw DataError("classification target has a single class");
    } else {
        y.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto v = as_number(targets[i]);
            if (!v) throw DataError("row " + std::to_string(i + 1) + ": regression target '" + targets[i] + "' is not a finite number");
            y.push_back(*v);
        }
    }

    const std::size_t d = columns.size();
    std::vector<double> x(n * d);
    std::vector<std::string> names;
    for (std::size_t f = 0; f < d; ++f) {
        names.push_back(columns[f].name);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& v = columns[f].values[i];
            const double* value = std::get_if<double>(&v);
            if (!value) throw DataError("column '" + columns[f].name + "' row " + std::to_string(i + 1) + ": missing value");
            if (!std::isfinite(*value)) throw DataError("column '" + columns[f].name + "': non-finite value");
            x[i * d + f] = *value;
        }
    }
    return Dataset(n, d, std::move(x), std::move(y), task, std::move(names), n_classes);
}

Dataset preprocess(const RawTable& table, Task task) {
    std::vector<RawColumn> encoded;
    for (const auto& column : table.columns) {
        const RawColumn imputed = column.has_missing() ? impute_most_frequent(column) : column;
        for (auto& c : encode_categories(imputed)) encoded.push_back(std::move(c));
    }
    return assemble(encoded, table.target, task);
}

Dataset load_dataset(const std::filesystem::path& csv, const std::filesystem::path& schema_path) {
    const Schema schema = load_schema(schema_path);
    return preprocess(load_csv(csv, schema), schema.task);
}

std::filesystem::path default_schema_path(const std::filesystem::path& csv) {
    auto p = csv;
    p.replace_extension(".schema.json");
    return p;
}

}  // namespace condbias
