#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "condbias/harness.hpp"

namespace condbias {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::size_t positive_size(const json& j, const char* key, std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) {
        throw UsageError(std::string("config: '") + key + "' must be a positive integer");
    }
    return v.get<std::size_t>();
}

std::optional<std::size_t> optional_size(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return positive_size(j, key, 1);
}

ModelSpec parse_model(const json& j, Task task) {
    ModelSpec spec;
    spec.hp = default_hyperparams(task);
    if (j.is_string()) {
        spec.kind = parse_model_kind(j.get<std::string>());
        return spec;
    }
    spec.kind = parse_model_kind(j.value("kind", std::string("tree")));
    spec.hp.min_samples_leaf = positive_size(j, "min_samples_leaf", 1);
    spec.hp.max_depth = optional_size(j, "max_depth");
    if (j.contains("impurity")) spec.hp.impurity = parse_impurity(j.at("impurity").get<std::string>());
    spec.hp.unweighted_impurity = j.value("unweighted_impurity", false);
    spec.n_estimators = positive_size(j, "n_estimators", spec.n_estimators);
    spec.max_features = optional_size(j, "max_features");
    spec.independent_negated_bootstrap = j.value("independent_negated_bootstrap", false);
    spec.hp.validate(task);
    return spec;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

ordered_json hyperparams_json(const ModelSpec& spec) {
    ordered_json out;
    out["model"] = to_string(spec.kind);
    out["min_samples_leaf"] = spec.hp.min_samples_leaf;
    out["max_depth"] = spec.hp.max_depth ? ordered_json(*spec.hp.max_depth) : ordered_json(nullptr);
    out["impurity"] = to_string(spec.hp.impurity);
    if (spec.kind == ModelKind::forest) {
        out["n_estimators"] = spec.n_estimators;
        out["max_features"] = spec.max_features ? ordered_json(*spec.max_features) : ordered_json(nullptr);
    }
    return out;
}

std::string depth_text(const ModelSpec& spec) {
    return spec.hp.max_depth ? std::to_string(*spec.hp.max_depth) : "";
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw UsageError(std::string("config: invalid JSON: ") + e.what());
    }
    try {
        if (!j.is_object()) throw UsageError("config: document is not an object");
        ExperimentConfig config;
        config.data = resolve(base_dir, j.at("data").get<std::string>());
        config.schema = j.contains("schema") ? resolve(base_dir, j.at("schema").get<std::string>())
                                             : default_schema_path(config.data);
        config.name = j.value("name", config.data.stem().string());
        if (j.contains("task")) config.task = parse_task(j.at("task").get<std::string>());

        // The model's default impurity depends on the task; peek at the schema when it is not given.
        Task task = config.task ? *config.task : load_schema(config.schema).task;
        config.model = parse_model(j.value("model", json("tree")), task);

        const json cv = j.value("cv", json::object());
        config.cv.k = positive_size(cv, "k", config.cv.k);
        config.cv.repeats = positive_size(cv, "repeats", config.cv.repeats);
        config.cv.seed = cv.value("seed", std::uint64_t{0});
        config.cv.stratified = cv.value("stratified", true);
        if (config.cv.k < 2) throw UsageError("config: cv.k must be at least 2");

        config.select = j.value("select", false);
        for (const auto& s : j.value("strategies", json::array())) {
            config.strategies.push_back(parse_strategy(s.get<std::string>()));
        }
        config.out = j.contains("out") ? resolve(base_dir, j.at("out").get<std::string>())
                                       : std::filesystem::path(config.name);
        return config;
    } catch (const json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_experiment_config(buffer.str(), path.parent_path());
}

std::string format_real(double value) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc()) throw InvariantError("format_real failed");
    return std::string(buf.data(), end);
}

std::string bias_csv(const std::string& dataset, const ModelSpec& spec, Task task, const BiasReport& report) {
    std::ostringstream out;
    out << "dataset,model,task,min_samples_leaf,max_depth,rho,rho_k,score_diff,p_neq,significant,mean_le,mean_lt,"
           "n_folds,n_skipped\n";
    out << csv_field(dataset) << ',' << to_string(spec.kind) << ',' << to_string(task) << ','
        << spec.hp.min_samples_leaf << ',' << depth_text(spec) << ',' << format_real(report.rho) << ','
        << format_real(report.rho_k) << ',' << format_real(report.score_diff) << ',' << format_real(report.p_neq)
        << ',' << (report.p_neq_significant ? "*" : "") << ',' << format_real(report.mean_le) << ','
        << format_real(report.mean_lt) << ',' << report.n_folds << ',' << report.n_skipped << '\n';
    return out.str();
}

std::string bias_json(const std::string& dataset, const ModelSpec& spec, Task task, const BiasReport& report) {
    ordered_json out;
    out["dataset"] = dataset;
    out["task"] = to_string(task);
    out["hyperparams"] = hyperparams_json(spec);
    out["rho"] = report.rho;
    out["rho_k"] = report.rho_k;
    out["score_diff"] = report.score_diff;
    out["mean_le"] = report.mean_le;
    out["mean_lt"] = report.mean_lt;
    out["p_neq"] = report.p_neq;
    out["p_neq_significant"] = report.p_neq_significant;
    out["n_folds"] = report.n_folds;
    out["n_skipped"] = report.n_skipped;
    out["fold_rho"] = report.fold_rho;
    out["scores_le"] = report.scores.a;
    out["scores_lt"] = report.scores.b;
    return out.dump(2) + "\n";
}

std::string mitigation_csv(const std::string& dataset, const ModelSpec& spec, Task task,
                           const std::vector<MitigationReport>& reports) {
    std::ostringstream out;
    out << "dataset,model,task,strategy,significant_neq,vs_le,vs_lt,improvement_over_worst,mean_le,mean_lt,"
           "mean_strategy,p_neq,n_folds,n_skipped\n";
    for (const auto& r : reports) {
        out << csv_field(dataset) << ',' << to_string(spec.kind) << ',' << to_string(task) << ','
            << to_string(r.strategy) << ',' << (r.p_neq_significant ? "*" : "") << ',' << to_string(r.vs_le) << ','
            << to_string(r.vs_lt) << ',' << format_real(r.improvement_over_worst) << ',' << format_real(r.mean_le)
            << ',' << format_real(r.mean_lt) << ',' << format_real(r.mean_strategy) << ','
            << format_real(r.p_neq) << ',' << r.n_folds << ',' << r.n_skipped << '\n';
    }
    return out.str();
}

std::string mitigation_json(const std::string& dataset, const ModelSpec& spec, Task task,
                            const std::vector<MitigationReport>& reports) {
    ordered_json out;
    out["dataset"] = dataset;
    out["task"] = to_string(task);
    out["hyperparams"] = hyperparams_json(spec);
    ordered_json rows = ordered_json::array();
    for (const auto& r : reports) {
        ordered_json row;
        row["strategy"] = to_string(r.strategy);
        row["p_neq"] = r.p_neq;
        row["p_neq_significant"] = r.p_neq_significant;
        row["vs_le"] = to_string(r.vs_le);
        row["vs_lt"] = to_string(r.vs_lt);
        row["p_strategy_gt_le"] = r.p_strategy_gt_le;
        row["p_le_gt_strategy"] = r.p_le_gt_strategy;
        row["p_strategy_gt_lt"] = r.p_strategy_gt_lt;
        row["p_lt_gt_strategy"] = r.p_lt_gt_strategy;
        row["mean_le"] = r.mean_le;
        row["mean_lt"] = r.mean_lt;
        row["mean_strategy"] = r.mean_strategy;
        row["improvement_over_worst"] = r.improvement_over_worst;
        row["n_folds"] = r.n_folds;
        row["n_skipped"] = r.n_skipped;
        row["scores_le"] = r.scores_le;
        row["scores_lt"] = r.scores_lt;
        row["scores_strategy"] = r.scores_strategy;
        rows.push_back(std::move(row));
    }
    out["strategies"] = std::move(rows);
    return out.dump(2) + "\n";
}

std::string lattice_json(const Dataset& data, const LatticeReport& report) {
    ordered_json out;
    ordered_json features = ordered_json::array();
    for (std::size_t f = 0; f < data.n_features(); ++f) {
        ordered_json entry;
        entry["name"] = data.feature_names()[f];
        entry["lattice"] = static_cast<bool>(report.is_lattice[f]);
        features.push_back(std::move(entry));
    }
    out["n_features"] = data.n_features();
    out["n_lattice"] = report.n_lattice;
    out["proportion"] = report.proportion;
    out["features"] = std::move(features);
    return out.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace condbias
