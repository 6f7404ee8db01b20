#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "saia/error.hpp"
#include "saia/gbdt.hpp"

namespace saia {

GradHess grad_hess_logistic(int y, double margin, double weight) {
    const double p = sigmoid(margin);
    return {weight * (p - static_cast<double>(y)), weight * std::max(p * (1.0 - p), kHessianFloor)};
}

std::vector<GradHess> grad_hess_softmax(int y, std::span<const double> margins) {
    if (margins.size() < 2) throw Error(ErrorKind::InvalidArgument, "softmax needs at least two classes");
    const auto p = softmax(margins);
    std::vector<GradHess> out(p.size());
    for (std::size_t c = 0; c < p.size(); ++c) {
        out[c].g = p[c] - (static_cast<int>(c) == y ? 1.0 : 0.0);
        out[c].h = std::max(p[c] * (1.0 - p[c]), kHessianFloor);
    }
    return out;
}

double sigmoid(double margin) {
    if (margin >= 0) return 1.0 / (1.0 + std::exp(-margin));
    const double e = std::exp(margin);
    return e / (1.0 + e);
}

std::vector<double> softmax(std::span<const double> margins) {
    const double top = *std::max_element(margins.begin(), margins.end());
    std::vector<double> out(margins.size());
    double sum = 0.0;
    for (std::size_t c = 0; c < margins.size(); ++c) {
        out[c] = std::exp(margins[c] - top);
        sum += out[c];
    }
    for (double& v : out) v /= sum;
    return out;
}

Tree::Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw Error(ErrorKind::MalformedModel, "tree without nodes");
    const int n = static_cast<int>(nodes_.size());
    for (const auto& node : nodes_) {
        if (node.is_leaf()) continue;
        if (node.left <= 0 || node.right <= 0 || node.left >= n || node.right >= n) {
            throw Error(ErrorKind::MalformedModel, "internal node with invalid children");
        }
    }
}

double Tree::predict(std::span<const double> features) const {
    std::size_t i = 0;
    while (!nodes_[i].is_leaf()) {
        const auto& node = nodes_[i];
        i = static_cast<std::size_t>(features[node.feature] < node.threshold ? node.left : node.right);
    }
    return nodes_[i].weight;
}

double Tree::max_abs_leaf() const {
    double best = 0.0;
    for (const auto& node : nodes_) {
        if (node.is_leaf()) best = std::max(best, std::abs(node.weight));
    }
    return best;
}

int Tree::depth() const {
    std::vector<int> level(nodes_.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (!nodes_[i].is_leaf()) {
            level[nodes_[i].left] = level[i] + 1;
            level[nodes_[i].right] = level[i] + 1;
        }
    }
    return deepest;
}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) throw Error(ErrorKind::ArityMismatch, "feature matrix shape mismatch");
}

FeatureMatrix FeatureMatrix::from(const Dataset& ds) {
    std::vector<double> values;
    values.reserve(ds.size() * static_cast<std::size_t>(ds.feature_count()));
    for (const auto& s : ds) values.insert(values.end(), s.features.begin(), s.features.end());
    return FeatureMatrix(ds.size(), static_cast<std::size_t>(ds.feature_count()), std::move(values));
}

namespace {

using IndexList = std::vector<std::uint32_t>;

struct SplitCandidate {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    double left_g = 0.0;
    double left_h = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(std::span<const GradHess> grads, const FeatureMatrix& x, const TrainConfig& cfg)
        : grads_(grads), x_(x), cfg_(cfg) {}

    Tree build() {
        std::vector<IndexList> sorted(x_.cols());
        for (std::size_t f = 0; f < x_.cols(); ++f) {
            auto& order = sorted[f];
            order.resize(x_.rows());
            std::iota(order.begin(), order.end(), 0u);
            std::stable_sort(order.begin(), order.end(),
                             [&](std::uint32_t a, std::uint32_t b) { return x_.at(a, f) < x_.at(b, f); });
        }
        double g = 0.0;
        double h = 0.0;
        for (const auto& gh : grads_) {
            g += gh.g;
            h += gh.h;
        }
        grow(std::move(sorted), 0, g, h);
        return Tree(std::move(nodes_));
    }

private:
    double score(double g, double h) const {
        const double denom = h + cfg_.lambda;
        return denom > 0.0 ? g * g / denom : 0.0;
    }

    double leaf_weight(double g, double h) const {
        const double denom = h + cfg_.lambda;
        return denom > 0.0 ? -g / denom : 0.0;
    }

    SplitCandidate best_split(const std::vector<IndexList>& sorted, double g, double h) const {
        SplitCandidate best;
        const double parent = score(g, h);
        for (std::size_t f = 0; f < sorted.size(); ++f) {
            const auto& order = sorted[f];
            double gl = 0.0;
            double hl = 0.0;
            for (std::size_t k = 0; k + 1 < order.size(); ++k) {
                gl += grads_[order[k]].g;
                hl += grads_[order[k]].h;
                const double lo = x_.at(order[k], f);
                const double hi = x_.at(order[k + 1], f);
                if (!(lo < hi)) continue;
                const double hr = h - hl;
                if (hl < cfg_.min_child_hessian || hr < cfg_.min_child_hessian) continue;
                const double gain = 0.5 * (score(gl, hl) + score(g - gl, hr) - parent) - cfg_.gamma;
                if (gain > best.gain) {
                    double threshold = lo + (hi - lo) / 2.0;
                    if (!(threshold > lo)) threshold = hi;
                    best = {static_cast<int>(f), threshold, gain, gl, hl};
                }
            }
        }
        return best;
    }

    int grow(std::vector<IndexList> sorted, int depth, double g, double h) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(TreeNode{});
        SplitCandidate split;
        if (depth < cfg_.max_depth && sorted.front().size() >= 2) split = best_split(sorted, g, h);
        if (split.feature < 0) {
            nodes_[id].weight = leaf_weight(g, h);
            return id;
        }

        std::vector<IndexList> left(sorted.size());
        std::vector<IndexList> right(sorted.size());
        for (std::size_t f = 0; f < sorted.size(); ++f) {
            for (auto i : sorted[f]) {
                (x_.at(i, split.feature) < split.threshold ? left[f] : right[f]).push_back(i);
            }
        }
        sorted.clear();
        sorted.shrink_to_fit();

        nodes_[id].feature = split.feature;
        nodes_[id].threshold = split.threshold;
        const int l = grow(std::move(left), depth + 1, split.left_g, split.left_h);
        const int r = grow(std::move(right), depth + 1, g - split.left_g, h - split.left_h);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    std::span<const GradHess> grads_;
    const FeatureMatrix& x_;
    const TrainConfig& cfg_;
    std::vector<TreeNode> nodes_;
};

}  // namespace

Tree build_tree(std::span<const GradHess> grads, const FeatureMatrix& features, const TrainConfig& cfg) {
    if (grads.empty()) throw Error(ErrorKind::InvalidArgument, "build_tree needs at least one sample");
    if (grads.size() != features.rows()) throw Error(ErrorKind::ArityMismatch, "one gradient per row required");
    return TreeBuilder(grads, features, cfg).build();
}

}  // namespace saia
