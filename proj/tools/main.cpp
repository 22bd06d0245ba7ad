#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "condbias/harness.hpp"

using namespace condbias;

namespace {

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> task;
    std::optional<std::size_t> folds;
    std::optional<std::size_t> repeats;
    std::size_t threads = 1;
    std::optional<std::string> out;
    std::optional<std::string> schema;
};

struct ModelOptions {
    std::string kind = "tree";
    std::optional<std::size_t> min_samples_leaf;
    std::optional<std::size_t> max_depth;
    std::optional<std::string> impurity;
    std::size_t n_estimators = 100;
    std::optional<std::size_t> max_features;
    std::string strategy = "default_le";
};

void add_model_options(CLI::App* cmd, ModelOptions& m) {
    cmd->add_option("--model", m.kind, "tree or forest")->check(CLI::IsMember({"tree", "forest"}));
    cmd->add_option("--min-samples-leaf", m.min_samples_leaf)->check(CLI::PositiveNumber);
    cmd->add_option("--max-depth", m.max_depth)->check(CLI::PositiveNumber);
    cmd->add_option("--impurity", m.impurity)->check(CLI::IsMember({"gini", "entropy", "variance"}));
    cmd->add_option("--n-estimators", m.n_estimators)->check(CLI::PositiveNumber);
    cmd->add_option("--max-features", m.max_features)->check(CLI::PositiveNumber);
}

Dataset load(const std::string& csv, const GlobalOptions& g) {
    const std::filesystem::path schema_path = g.schema ? std::filesystem::path(*g.schema) : default_schema_path(csv);
    Schema schema = load_schema(schema_path);
    if (g.task) schema.task = parse_task(*g.task);
    return preprocess(load_csv(csv, schema), schema.task);
}

ModelSpec model_spec(const ModelOptions& m, Task task) {
    ModelSpec spec;
    spec.kind = parse_model_kind(m.kind);
    spec.hp = default_hyperparams(task);
    if (m.min_samples_leaf) spec.hp.min_samples_leaf = *m.min_samples_leaf;
    spec.hp.max_depth = m.max_depth;
    if (m.impurity) spec.hp.impurity = parse_impurity(*m.impurity);
    spec.hp.validate(task);
    spec.n_estimators = m.n_estimators;
    spec.max_features = m.max_features;
    return spec;
}

CvSettings cv_settings(const GlobalOptions& g, CvSettings cv) {
    if (g.seed) cv.seed = *g.seed;
    if (g.folds) cv.k = *g.folds;
    if (g.repeats) cv.repeats = *g.repeats;
    cv.threads = g.threads;
    if (cv.k < 2) throw UsageError("--folds must be at least 2");
    return cv;
}

void emit(const GlobalOptions& g, const std::string& text) {
    if (g.out) {
        write_text_file(*g.out, text);
    } else {
        std::cout << text;
    }
}

int run_audit(const GlobalOptions& g, const std::string& data_path) {
    const Dataset data = load(data_path, g);
    emit(g, lattice_json(data, lattice_report(data)));
    return 0;
}

int run_select(const GlobalOptions& g, const std::string& data_path, const ModelOptions& m) {
    const Dataset data = load(data_path, g);
    const ModelSpec spec = model_spec(m, data.task());
    const auto result = model_select(data, spec, default_grid(data.n_rows(), spec.hp), cv_settings(g, {}));

    nlohmann::ordered_json out;
    out["best"]["min_samples_leaf"] = result.best.min_samples_leaf;
    out["best"]["max_depth"] =
        result.best.max_depth ? nlohmann::ordered_json(*result.best.max_depth) : nlohmann::ordered_json(nullptr);
    out["best_score"] = result.best_score;
    auto& grid = out["grid"] = nlohmann::ordered_json::array();
    for (const auto& point : result.evaluated) {
        nlohmann::ordered_json row;
        row["min_samples_leaf"] = point.hp.min_samples_leaf;
        row["max_depth"] =
            point.hp.max_depth ? nlohmann::ordered_json(*point.hp.max_depth) : nlohmann::ordered_json(nullptr);
        row["mean_score"] = point.mean_score;
        row["n_folds"] = point.n_folds;
        grid.push_back(std::move(row));
    }
    emit(g, out.dump(2) + "\n");
    return 0;
}

int run_fit(const GlobalOptions& g, const std::string& data_path, const ModelOptions& m) {
    const Dataset data = load(data_path, g);
    const ModelSpec spec = model_spec(m, data.task());
    const Strategy strategy = parse_strategy(m.strategy);
    std::vector<std::size_t> rows(data.n_rows());
    std::iota(rows.begin(), rows.end(), 0);
    if (spec.kind == ModelKind::forest && requires_even_forest(strategy) && spec.n_estimators % 2 != 0) {
        throw UsageError("strategy " + to_string(strategy) + " needs an even --n-estimators");
    }
    const Model model = fit_model(data, rows, spec, g.seed.value_or(0), strategy);
    emit(g, serialize_model(model) + "\n");
    return 0;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

int run_predict(const GlobalOptions& g, const std::string& model_path, const std::string& data_path,
                const std::optional<std::string>& op, const std::optional<std::string>& strategy_text) {
    if (op && strategy_text) throw UsageError("give either --operator or --strategy");
    const Model model = deserialize_model(read_file(model_path));
    const Dataset data = load(data_path, g);
    const Strategy strategy = parse_strategy(strategy_text.value_or(op.value_or("le")));

    std::ostringstream out;
    const bool classification = data.task() == Task::classification;
    out << "row";
    if (classification) {
        for (std::size_t c = 0; c < data.n_classes(); ++c) out << ",p" << c;
    } else {
        out << ",prediction";
    }
    out << '\n';
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        const auto p = predict_model(model, data.row(r), strategy);
        out << r;
        for (double v : p) out << ',' << format_real(v);
        out << '\n';
    }
    emit(g, out.str());
    return 0;
}

struct LoadedExperiment {
    ExperimentConfig config;
    Dataset data;
    std::filesystem::path out;
};

LoadedExperiment load_experiment(const GlobalOptions& g, const std::string& config_path) {
    LoadedExperiment e;
    e.config = load_experiment_config(config_path);
    if (g.task) e.config.task = parse_task(*g.task);
    if (g.schema) e.config.schema = *g.schema;
    e.config.cv = cv_settings(g, e.config.cv);
    Schema schema = load_schema(e.config.schema);
    if (e.config.task) schema.task = *e.config.task;
    e.data = preprocess(load_csv(e.config.data, schema), schema.task);
    e.out = g.out ? std::filesystem::path(*g.out) : e.config.out;

    if (e.config.select) {
        const auto result =
            model_select(e.data, e.config.model, default_grid(e.data.n_rows(), e.config.model.hp), e.config.cv);
        e.config.model.hp = result.best;
    }
    return e;
}

std::filesystem::path with_suffix(const std::filesystem::path& prefix, const std::string& suffix) {
    return prefix.string() + suffix;
}

int run_bias(const GlobalOptions& g, const std::string& config_path) {
    const auto e = load_experiment(g, config_path);
    const auto report = run_bias_experiment(e.data, e.config.model, e.config.cv);
    write_text_file(with_suffix(e.out, ".bias.csv"), bias_csv(e.config.name, e.config.model, e.data.task(), report));
    write_text_file(with_suffix(e.out, ".bias.json"), bias_json(e.config.name, e.config.model, e.data.task(), report));
    std::cout << bias_csv(e.config.name, e.config.model, e.data.task(), report);
    return 0;
}

int run_mitigate(const GlobalOptions& g, const std::string& config_path, const std::vector<std::string>& names) {
    const auto e = load_experiment(g, config_path);
    std::vector<Strategy> strategies;
    for (const auto& name : names) strategies.push_back(parse_strategy(name));
    if (strategies.empty()) strategies = e.config.strategies;
    if (strategies.empty()) strategies.push_back(Strategy::DualAverage);

    std::vector<MitigationReport> reports;
    for (Strategy s : strategies) reports.push_back(run_mitigation_experiment(e.data, e.config.model, e.config.cv, s));
    const auto csv = mitigation_csv(e.config.name, e.config.model, e.data.task(), reports);
    write_text_file(with_suffix(e.out, ".mitigation.csv"), csv);
    write_text_file(with_suffix(e.out, ".mitigation.json"),
                    mitigation_json(e.config.name, e.config.model, e.data.task(), reports));
    std::cout << csv;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conditioning-bias toolkit for decision trees and random forests"};
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--seed", g.seed, "master seed");
    app.add_option("--task", g.task, "override the schema task")->check(CLI::IsMember({"classification", "regression"}));
    app.add_option("--folds", g.folds, "folds per repeat");
    app.add_option("--repeats", g.repeats, "cross-validation repeats")->check(CLI::PositiveNumber);
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "output file (experiments: report path prefix)");
    app.add_option("--schema", g.schema, "schema sidecar (default: <data>.schema.json)");

    std::string data_path;
    std::string model_path;
    std::string config_path;
    ModelOptions model;
    std::optional<std::string> op;
    std::optional<std::string> predict_strategy;
    std::vector<std::string> strategies;

    auto* audit = app.add_subcommand("audit", "report lattice features as JSON");
    audit->add_option("data", data_path)->required();

    auto* select = app.add_subcommand("select", "grid-search min_samples_leaf and max_depth");
    select->add_option("data", data_path)->required();
    add_model_options(select, model);

    auto* fit = app.add_subcommand("fit", "fit a model and write it as JSON");
    fit->add_option("data", data_path)->required();
    add_model_options(fit, model);
    fit->add_option("--strategy", model.strategy, "forest training strategy (negated_half trains mirrored trees)");

    auto* pred = app.add_subcommand("predict", "predict every row of a data set");
    pred->add_option("model", model_path)->required();
    pred->add_option("data", data_path)->required();
    pred->add_option("--operator", op)->check(CLI::IsMember({"le", "lt", "avg"}));
    pred->add_option("--strategy", predict_strategy);

    auto* experiment = app.add_subcommand("experiment", "run a configured experiment");
    experiment->require_subcommand(1);
    auto* bias = experiment->add_subcommand("bias", "LE versus LT bias experiment");
    bias->add_option("config", config_path)->required();
    auto* mitigate = experiment->add_subcommand("mitigate", "mitigation strategy experiment");
    mitigate->add_option("config", config_path)->required();
    mitigate->add_option("--strategy", strategies, "dual_average, half_half or negated_half (repeatable)");

    for (auto* sub : {audit, select, fit, pred, experiment, bias, mitigate}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*audit) return run_audit(g, data_path);
        if (*select) return run_select(g, data_path, model);
        if (*fit) return run_fit(g, data_path, model);
        if (*pred) return run_predict(g, model_path, data_path, op, predict_strategy);
        if (*bias) return run_bias(g, config_path);
        if (*mitigate) return run_mitigate(g, config_path, strategies);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
    return 1;
}
