#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <span>
#include <variant>
#include <vector>

namespace iclbench::models {

/// Row-major feature matrix; every row has the same length.
using FeatureMatrix = std::vector<std::vector<double>>;

/// Constant predictor.
struct MeanModel {
    double mean = 0.0;
};

/// Linear model w.x + b fitted by ridge regression with an unpenalized intercept.
struct RidgeModel {
    std::vector<double> weights;
    double intercept = 0.0;
    double alpha = 1.0;
};

/// Forest hyper-parameters. Defaults: 10,000 trees of depth 2.
struct ForestParams {
    int n_estimators = 10000;
    int max_depth = 2;
    std::uint64_t seed = 0;
};

/// One node of a regression tree. A node with `feature < 0` is a leaf.
/// Samples with x[feature] <= threshold go to `left`.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct RegressionTree {
    std::vector<TreeNode> nodes; // nodes[0] is the root

    double predict(std::span<const double> x) const;
    int depth() const;
};

struct ForestModel {
    std::vector<RegressionTree> trees;
    ForestParams params;
    std::size_t n_features = 0;
    /// Normalized total variance reduction per feature. All zeros (and
    /// `importance_defined == false`) when no tree found a useful split.
    std::vector<double> feature_importance;
    bool importance_defined = false;
};

using Model = std::variant<MeanModel, RidgeModel, ForestModel>;

MeanModel fit_mean(std::span<const double> targets);

/// Minimizes |y - Xw - b|^2 + alpha |w|^2 by centering X and y and solving
/// (Xc'Xc + alpha I) w = Xc'yc with a Cholesky factorization; b = mean(y) - w.mean(X).
/// Throws SingularSystemError when the system is not positive definite
/// (e.g. a constant column with alpha = 0).
RidgeModel fit_ridge(const FeatureMatrix& x, std::span<const double> y, double alpha);

/// Bagged CART regression trees. Each tree sees a bootstrap resample of size n
/// drawn from Rng(derive_seed(params.seed, tree_index)); every split considers
/// all features and all midpoints between consecutive distinct values, keeping
/// the first best (lowest feature, then lowest threshold). Trees are grown in
/// parallel; results do not depend on the thread count.
ForestModel fit_forest(const FeatureMatrix& x, std::span<const double> y, const ForestParams& params);

double predict(const MeanModel& model, std::span<const double> x);
double predict(const RidgeModel& model, std::span<const double> x);
double predict(const ForestModel& model, std::span<const double> x);
double predict(const Model& model, std::span<const double> x);

inline constexpr int kModelSchemaVersion = 1;

nlohmann::json model_to_json(const Model& model);
Model model_from_json(const nlohmann::json& doc);

} // namespace iclbench::models
