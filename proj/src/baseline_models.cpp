#include "iclbench/baseline_models.hpp"

#include "iclbench/errors.hpp"
#include "iclbench/random.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>
#include <thread>

namespace iclbench::models {

namespace {

std::size_t check_shape(const FeatureMatrix& x, std::span<const double> y)
{
    if (x.size() != y.size()) {
        throw ValidationError(fmt::format("feature matrix has {} rows but target vector has {}", x.size(), y.size()));
    }
    if (x.empty()) {
        throw SizeError("cannot fit a model on zero rows");
    }
    const auto cols = x.front().size();
    for (std::size_t r = 0; r < x.size(); ++r) {
        if (x[r].size() != cols) {
            throw ValidationError(fmt::format("row {} has {} features, expected {}", r, x[r].size(), cols));
        }
    }
    return cols;
}

void check_arity(std::size_t expected, std::span<const double> x)
{
    if (x.size() != expected) {
        throw ValidationError(fmt::format("model expects {} features, got {}", expected, x.size()));
    }
}

// Solves A z = b in place for symmetric positive definite A (row-major, n x n).
std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n)
{
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        scale = std::max(scale, std::fabs(a[i * n + i]));
    }
    const double tol = 1e-12 * std::max(scale, 1.0);

    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) {
            d -= a[j * n + k] * a[j * n + k];
        }
        if (!(d > tol)) {
            throw SingularSystemError(fmt::format("ridge normal equations are singular at feature {}", j));
        }
        const double l = std::sqrt(d);
        a[j * n + j] = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / l;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    return b;
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const FeatureMatrix& x, std::span<const double> y, int max_depth, std::vector<double>& gains)
        : x_(x), y_(y), max_depth_(max_depth), gains_(gains)
    {
    }

    RegressionTree build(std::vector<std::size_t> sample)
    {
        RegressionTree tree;
        grow(tree, std::move(sample), 0);
        return tree;
    }

private:
    int grow(RegressionTree& tree, std::vector<std::size_t> sample, int depth)
    {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        double mean = 0.0;
        for (auto i : sample) {
            mean += y_[i];
        }
        mean /= static_cast<double>(sample.size());
        tree.nodes[id].value = mean;

        if (depth >= max_depth_ || sample.size() < 2) {
            return id;
        }
        const auto choice = best_split(sample, mean);
        if (choice.feature < 0) {
            return id;
        }
        gains_[static_cast<std::size_t>(choice.feature)] += choice.gain;

        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (auto i : sample) {
            (x_[i][static_cast<std::size_t>(choice.feature)] <= choice.threshold ? left : right).push_back(i);
        }
        sample.clear();
        sample.shrink_to_fit();

        tree.nodes[id].feature = choice.feature;
        tree.nodes[id].threshold = choice.threshold;
        const int l = grow(tree, std::move(left), depth + 1);
        tree.nodes[id].left = l;
        const int r = grow(tree, std::move(right), depth + 1);
        tree.nodes[id].right = r;
        return id;
    }

    SplitChoice best_split(const std::vector<std::size_t>& sample, double mean) const
    {
        const std::size_t n = sample.size();
        const std::size_t n_features = x_.front().size();

        // Targets are centered on the node mean so the sum-of-squares identity
        // stays accurate for large-valued targets (prices).
        double total_sq = 0.0;
        for (auto i : sample) {
            const double d = y_[i] - mean;
            total_sq += d * d;
        }
        SplitChoice best;
        if (!(total_sq > 0.0)) {
            return best;
        }

        std::vector<std::pair<double, double>> column(n);
        for (std::size_t f = 0; f < n_features; ++f) {
            for (std::size_t r = 0; r < n; ++r) {
                column[r] = {x_[sample[r]][f], y_[sample[r]] - mean};
            }
            std::sort(column.begin(), column.end());

            double left_sum = 0.0;
            double left_sq = 0.0;
            double right_sum = 0.0;
            for (const auto& [_, d] : column) {
                right_sum += d;
            }
            double right_sq = total_sq;
            for (std::size_t r = 1; r < n; ++r) {
                const double d = column[r - 1].second;
                left_sum += d;
                left_sq += d * d;
                right_sum -= d;
                right_sq -= d * d;
                const double lo = column[r - 1].first;
                const double hi = column[r].first;
                if (!(lo < hi)) {
                    continue;
                }
                const auto nl = static_cast<double>(r);
                const auto nr = static_cast<double>(n - r);
                const double sse = (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
                const double gain = total_sq - sse;
                if (gain > best.gain && gain > 1e-12 * total_sq) {
                    double threshold = lo + (hi - lo) / 2.0;
                    if (!(threshold < hi)) {
                        threshold = lo;
                    }
                    best = {static_cast<int>(f), threshold, gain};
                }
            }
        }
        return best;
    }

    const FeatureMatrix& x_;
    std::span<const double> y_;
    int max_depth_;
    std::vector<double>& gains_;
};

} // namespace

double RegressionTree::predict(std::span<const double> x) const
{
    int id = 0;
    while (nodes[static_cast<std::size_t>(id)].feature >= 0) {
        const auto& node = nodes[static_cast<std::size_t>(id)];
        id = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(id)].value;
}

int RegressionTree::depth() const
{
    std::vector<int> level(nodes.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (nodes[i].feature >= 0) {
            level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
            level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
        }
    }
    return deepest;
}

MeanModel fit_mean(std::span<const double> targets)
{
    if (targets.empty()) {
        throw SizeError("cannot fit a mean model on an empty target vector");
    }
    return {std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(targets.size())};
}

RidgeModel fit_ridge(const FeatureMatrix& x, std::span<const double> y, double alpha)
{
    if (!(alpha >= 0.0)) {
        throw ValidationError(fmt::format("ridge alpha must be non-negative, got {}", alpha));
    }
    const std::size_t p = check_shape(x, y);
    const std::size_t n = x.size();

    std::vector<double> x_mean(p, 0.0);
    double y_mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < p; ++c) {
            x_mean[c] += x[r][c];
        }
        y_mean += y[r];
    }
    for (auto& m : x_mean) {
        m /= static_cast<double>(n);
    }
    y_mean /= static_cast<double>(n);

    std::vector<double> gram(p * p, 0.0);
    std::vector<double> rhs(p, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double yc = y[r] - y_mean;
        for (std::size_t i = 0; i < p; ++i) {
            const double xi = x[r][i] - x_mean[i];
            rhs[i] += xi * yc;
            for (std::size_t j = 0; j <= i; ++j) {
                gram[i * p + j] += xi * (x[r][j] - x_mean[j]);
            }
        }
    }
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            gram[j * p + i] = gram[i * p + j];
        }
        gram[i * p + i] += alpha;
    }

    RidgeModel model;
    model.alpha = alpha;
    model.weights = p == 0 ? std::vector<double>{} : cholesky_solve(std::move(gram), std::move(rhs), p);
    model.intercept = y_mean;
    for (std::size_t i = 0; i < p; ++i) {
        model.intercept -= model.weights[i] * x_mean[i];
    }
    return model;
}

ForestModel fit_forest(const FeatureMatrix& x, std::span<const double> y, const ForestParams& params)
{
    if (params.n_estimators <= 0) {
        throw ValidationError("forest needs at least one estimator");
    }
    if (params.max_depth < 1) {
        throw ValidationError("forest max_depth must be at least 1");
    }
    const std::size_t p = check_shape(x, y);
    if (x.size() < 2) {
        throw SizeError("forest needs at least 2 rows");
    }
    const std::size_t n = x.size();
    const auto n_trees = static_cast<std::size_t>(params.n_estimators);

    ForestModel model;
    model.params = params;
    model.n_features = p;
    model.trees.resize(n_trees);
    std::vector<std::vector<double>> per_tree_gain(n_trees, std::vector<double>(p, 0.0));

    auto grow_range = [&](std::size_t begin, std::size_t end) {
        std::vector<std::size_t> sample(n);
        for (std::size_t t = begin; t < end; ++t) {
            Rng rng(derive_seed(params.seed, t));
            for (auto& s : sample) {
                s = static_cast<std::size_t>(rng.below(n));
            }
            TreeBuilder builder(x, y, params.max_depth, per_tree_gain[t]);
            model.trees[t] = builder.build(sample);
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, n_trees);
    if (workers == 1) {
        grow_range(0, n_trees);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (n_trees + workers - 1) / workers;
        for (std::size_t begin = 0; begin < n_trees; begin += chunk) {
            pool.emplace_back(grow_range, begin, std::min(n_trees, begin + chunk));
        }
    }

    model.feature_importance.assign(p, 0.0);
    for (const auto& gains : per_tree_gain) {
        for (std::size_t f = 0; f < p; ++f) {
            model.feature_importance[f] += gains[f];
        }
    }
    const double total = std::accumulate(model.feature_importance.begin(), model.feature_importance.end(), 0.0);
    model.importance_defined = total > 0.0;
    if (model.importance_defined) {
        for (auto& v : model.feature_importance) {
            v /= total;
        }
    }
    return model;
}

double predict(const MeanModel& model, std::span<const double>)
{
    return model.mean;
}

double predict(const RidgeModel& model, std::span<const double> x)
{
    check_arity(model.weights.size(), x);
    double out = model.intercept;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out += model.weights[i] * x[i];
    }
    return out;
}

double predict(const ForestModel& model, std::span<const double> x)
{
    check_arity(model.n_features, x);
    double sum = 0.0;
    for (const auto& tree : model.trees) {
        sum += tree.predict(x);
    }
    return sum / static_cast<double>(model.trees.size());
}

double predict(const Model& model, std::span<const double> x)
{
    return std::visit([&](const auto& m) { return predict(m, x); }, model);
}

nlohmann::json model_to_json(const Model& model)
{
    using nlohmann::json;
    json doc{{"schema_version", kModelSchemaVersion}};
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, MeanModel>) {
                doc["kind"] = "mean";
                doc["mean"] = m.mean;
            } else if constexpr (std::is_same_v<T, RidgeModel>) {
                doc["kind"] = "ridge";
                doc["weights"] = m.weights;
                doc["intercept"] = m.intercept;
                doc["alpha"] = m.alpha;
            } else {
                doc["kind"] = "forest";
                doc["params"] = {{"n_estimators", m.params.n_estimators},
                                 {"max_depth", m.params.max_depth},
                                 {"seed", m.params.seed}};
                doc["n_features"] = m.n_features;
                doc["feature_importance"] = m.feature_importance;
                doc["importance_defined"] = m.importance_defined;
                json trees = json::array();
                for (const auto& tree : m.trees) {
                    json nodes = json::array();
                    for (const auto& node : tree.nodes) {
                        nodes.push_back({node.feature, node.threshold, node.left, node.right, node.value});
                    }
                    trees.push_back(std::move(nodes));
                }
                doc["trees"] = std::move(trees);
            }
        },
        model);
    return doc;
}

Model model_from_json(const nlohmann::json& doc)
{
    try {
        if (doc.at("schema_version").get<int>() != kModelSchemaVersion) {
            throw SchemaError(fmt::format("unsupported model schema_version {}", doc.at("schema_version").dump()));
        }
        const auto kind = doc.at("kind").get<std::string>();
        if (kind == "mean") {
            return MeanModel{doc.at("mean").get<double>()};
        }
        if (kind == "ridge") {
            return RidgeModel{doc.at("weights").get<std::vector<double>>(), doc.at("intercept").get<double>(),
                              doc.at("alpha").get<double>()};
        }
        if (kind == "forest") {
            ForestModel m;
            const auto& params = doc.at("params");
            m.params.n_estimators = params.at("n_estimators").get<int>();
            m.params.max_depth = params.at("max_depth").get<int>();
            m.params.seed = params.at("seed").get<std::uint64_t>();
            m.n_features = doc.at("n_features").get<std::size_t>();
            m.feature_importance = doc.at("feature_importance").get<std::vector<double>>();
            m.importance_defined = doc.at("importance_defined").get<bool>();
            for (const auto& nodes : doc.at("trees")) {
                RegressionTree tree;
                for (const auto& n : nodes) {
                    tree.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(),
                                          n.at(3).get<int>(), n.at(4).get<double>()});
                }
                m.trees.push_back(std::move(tree));
            }
            return m;
        }
        throw SchemaError(fmt::format("unknown model kind '{}'", kind));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(fmt::format("malformed model document: {}", e.what()));
    }
}

} // namespace iclbench::models
