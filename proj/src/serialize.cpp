#include "condbias/serialize.hpp"

#include <cmath>

#include <json.hpp>

namespace condbias {

using nlohmann::json;

namespace {

json node_to_json(const Tree& tree, std::uint32_t index) {
    const Node& node = tree.nodes()[index];
    json out = json::object();
    if (node.is_leaf()) {
        if (tree.task() == Task::classification) {
            out["leaf"] = node.value;
        } else {
            out["leaf"] = node.value.at(0);
        }
        out["n"] = node.n_samples;
        return out;
    }
    out["f"] = node.feature;
    out["t"] = node.threshold;
    out["l"] = node_to_json(tree, node.left);
    out["r"] = node_to_json(tree, node.right);
    return out;
}

json hyperparams_to_json(const Hyperparams& hp) {
    json out = json::object();
    out["min_samples_leaf"] = hp.min_samples_leaf;
    out["max_depth"] = hp.max_depth ? json(*hp.max_depth) : json(nullptr);
    out["impurity"] = to_string(hp.impurity);
    out["n_random_features"] = hp.n_random_features ? json(*hp.n_random_features) : json(nullptr);
    out["unweighted_impurity"] = hp.unweighted_impurity;
    return out;
}

Hyperparams hyperparams_from_json(const json& j) {
    Hyperparams hp;
    hp.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
    if (!j.at("max_depth").is_null()) hp.max_depth = j.at("max_depth").get<std::size_t>();
    hp.impurity = parse_impurity(j.at("impurity").get<std::string>());
    if (!j.at("n_random_features").is_null()) hp.n_random_features = j.at("n_random_features").get<std::size_t>();
    hp.unweighted_impurity = j.value("unweighted_impurity", false);
    return hp;
}

class NodeReader {
public:
    NodeReader(Task task, std::size_t n_features, std::size_t n_classes)
        : task_(task), n_features_(n_features), n_classes_(n_classes) {}

    Tree read(const json& root) {
        nodes_.clear();
        read_node(root, 0);
        return Tree(task_, n_features_, n_classes_, std::move(nodes_));
    }

private:
    std::uint32_t read_node(const json& j, std::size_t depth) {
        if (!j.is_object()) throw DataError("model: node is not an object");
        if (depth > 100000) throw DataError("model: tree too deep");
        const auto index = static_cast<std::uint32_t>(nodes_.size());
        nodes_.emplace_back();
        if (j.contains("leaf")) {
            Node leaf;
            const json& value = j.at("leaf");
            if (task_ == Task::classification) {
                if (!value.is_array() || value.size() != n_classes_) {
                    throw DataError("model: classification leaf must hold " + std::to_string(n_classes_) + " probabilities");
                }
                leaf.value = value.get<std::vector<double>>();
            } else {
                if (!value.is_number()) throw DataError("model: regression leaf must be a number");
                leaf.value = {value.get<double>()};
            }
            const json& n = j.at("n");
            if (!n.is_number_unsigned()) throw DataError("model: leaf sample count must be a non-negative integer");
            leaf.n_samples = n.get<std::size_t>();
            nodes_[index] = std::move(leaf);
            return index;
        }
        const json& f = j.at("f");
        if (!f.is_number_integer()) throw DataError("model: feature index must be an integer");
        const auto feature = f.get<std::int64_t>();
        if (feature < 0 || static_cast<std::size_t>(feature) >= n_features_) {
            throw DataError("model: feature index " + std::to_string(feature) + " out of range [0, " +
                            std::to_string(n_features_) + ")");
        }
        const json& t = j.at("t");
        if (!t.is_number() || !std::isfinite(t.get<double>())) throw DataError("model: threshold must be a finite number");

        const auto left = read_node(j.at("l"), depth + 1);
        const auto right = read_node(j.at("r"), depth + 1);
        Node& node = nodes_[index];
        node.feature = static_cast<std::int32_t>(feature);
        node.threshold = t.get<double>();
        node.left = left;
        node.right = right;
        node.n_samples = nodes_[left].n_samples + nodes_[right].n_samples;
        return index;
    }

    Task task_;
    std::size_t n_features_;
    std::size_t n_classes_;
    std::vector<Node> nodes_;
};

json header(const char* kind, Task task, std::size_t n_classes, std::size_t n_features) {
    json out = json::object();
    out["version"] = kModelFormatVersion;
    out["kind"] = kind;
    out["task"] = to_string(task);
    out["n_classes"] = n_classes;
    out["n_features"] = n_features;
    return out;
}

}  // namespace

std::string serialize_model(const Tree& tree) {
    json doc = header("tree", tree.task(), tree.n_classes(), tree.n_features());
    doc["root"] = node_to_json(tree, 0);
    return doc.dump();
}

std::string serialize_model(const Forest& forest) {
    json doc = header("forest", forest.task, forest.n_classes, forest.n_features);
    doc["seed"] = forest.seed;
    doc["strategy"] = to_string(forest.trained_for);
    doc["hyperparams"] = hyperparams_to_json(forest.hyperparams);
    json trees = json::array();
    for (std::size_t i = 0; i < forest.size(); ++i) {
        json root = node_to_json(forest.trees[i], 0);
        if (forest.negated[i]) root["negated"] = true;
        trees.push_back(std::move(root));
    }
    doc["trees"] = std::move(trees);
    return doc.dump();
}

std::string serialize_model(const Model& model) {
    return std::visit([](const auto& m) { return serialize_model(m); }, model);
}

Model deserialize_model(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("model: invalid JSON: ") + e.what());
    }
    try {
        if (!doc.is_object()) throw DataError("model: document is not an object");
        const int version = doc.at("version").get<int>();
        if (version != kModelFormatVersion) {
            throw DataError("model: unsupported format version " + std::to_string(version) + " (expected " +
                            std::to_string(kModelFormatVersion) + ")");
        }
        const Task task = parse_task(doc.at("task").get<std::string>());
        const auto n_features = doc.at("n_features").get<std::size_t>();
        const auto n_classes = doc.at("n_classes").get<std::size_t>();
        if (n_features == 0) throw DataError("model: n_features must be positive");
        if (task == Task::classification && n_classes < 2) throw DataError("model: classification needs n_classes >= 2");
        NodeReader reader(task, n_features, task == Task::classification ? n_classes : 0);

        const auto kind = doc.at("kind").get<std::string>();
        if (kind == "tree") return reader.read(doc.at("root"));
        if (kind != "forest") throw DataError("model: unknown kind '" + kind + "'");

        Forest forest;
        forest.task = task;
        forest.n_features = n_features;
        forest.n_classes = task == Task::classification ? n_classes : 0;
        forest.seed = doc.at("seed").get<std::uint64_t>();
        forest.trained_for = parse_strategy(doc.at("strategy").get<std::string>());
        forest.hyperparams = hyperparams_from_json(doc.at("hyperparams"));
        forest.hyperparams.seed = forest.seed;
        for (const auto& root : doc.at("trees")) {
            forest.trees.push_back(reader.read(root));
            forest.negated.push_back(root.value("negated", false));
        }
        if (forest.trees.empty()) throw DataError("model: forest without trees");
        return forest;
    } catch (const json::exception& e) {
        throw DataError(std::string("model: malformed document: ") + e.what());
    } catch (const UsageError& e) {
        throw DataError(std::string("model: ") + e.what());
    }
}

}  // namespace condbias
