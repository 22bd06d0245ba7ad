#include "condbias/mirror.hpp"

namespace condbias {

namespace {

// Re-emits the subtree at `index` in preorder with children swapped.
std::uint32_t emit_mirrored(const std::vector<Node>& in, std::uint32_t index, std::vector<Node>& out) {
    const Node& node = in[index];
    const auto position = static_cast<std::uint32_t>(out.size());
    out.push_back(node);
    if (node.is_leaf()) return position;
    out[position].threshold = -node.threshold;
    const auto left = emit_mirrored(in, node.right, out);
    const auto right = emit_mirrored(in, node.left, out);
    out[position].left = left;
    out[position].right = right;
    return position;
}

}  // namespace

Tree mirror(const Tree& tree) {
    std::vector<Node> nodes;
    nodes.reserve(tree.nodes().size());
    emit_mirrored(tree.nodes(), 0, nodes);
    return Tree(tree.task(), tree.n_features(), tree.n_classes(), std::move(nodes));
}

std::vector<double> predict_nondefault(const Tree& tree, std::span<const double> x) {
    return predict(tree, x, Operator::LT);
}

std::vector<double> predict_negated(const Tree& tree, std::span<const double> x) {
    std::vector<double> negated(x.begin(), x.end());
    for (double& v : negated) v = -v;
    return predict(tree, negated, Operator::LE);
}

Tree fit_on_negated(const Dataset& data, const Hyperparams& hp, std::span<const std::size_t> rows, Rng& rng) {
    return fit_tree(data.negated(), hp, rows, rng);
}

Tree fit_on_negated(const Dataset& data, const Hyperparams& hp) {
    return fit_tree(data.negated(), hp);
}

}  // namespace condbias
