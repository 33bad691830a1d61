#include "iclbench/baseline_models.hpp"
#include "iclbench/errors.hpp"
#include "iclbench/random.hpp"

#include "oracles.hpp"

#include <cmath>
#include <doctest.h>

using namespace iclbench;
using namespace iclbench::models;

namespace {

struct Problem {
    FeatureMatrix x;
    std::vector<double> y;
};

Problem random_problem(std::uint64_t seed, std::size_t n, std::size_t p)
{
    Rng rng(seed);
    Problem pr;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row;
        double y = 0.7;
        for (std::size_t j = 0; j < p; ++j) {
            row.push_back(rng.normal() * static_cast<double>(j + 1));
            y += (static_cast<double>(j) - 1.0) * row.back();
        }
        pr.x.push_back(std::move(row));
        pr.y.push_back(y + rng.normal());
    }
    return pr;
}

} // namespace

TEST_CASE("fit_mean")
{
    CHECK(fit_mean(std::vector<double>{1, 2, 3}).mean == 2.0);
    CHECK(fit_mean(std::vector<double>{7}).mean == 7.0);
    CHECK_THROWS_AS(fit_mean(std::vector<double>{}), SizeError);
    CHECK(predict(MeanModel{3.0}, std::vector<double>{99, -5}) == 3.0);
}

TEST_CASE("ridge hand cases")
{
    const FeatureMatrix x{{0}, {1}};
    const std::vector<double> y{0, 1};
    const auto exact = fit_ridge(x, y, 0.0);
    CHECK(exact.weights[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(exact.intercept) < 1e-12);
    const auto shrunk = fit_ridge(x, y, 1.0);
    CHECK(std::abs(shrunk.weights[0] - 1.0 / 3.0) <= 1e-12);
    CHECK(std::abs(shrunk.intercept - 1.0 / 3.0) <= 1e-12);
    CHECK(predict(RidgeModel{{2.0}, 1.0, 1.0}, std::vector<double>{3}) == 7.0);
}

TEST_CASE("ridge matches the gradient-descent oracle")
{
    for (std::uint64_t seed = 1; seed <= 2; ++seed) {
        const auto pr = random_problem(seed, 50, 3);
        const auto fit = fit_ridge(pr.x, pr.y, 1.0);
        const auto oracle = testing::ridge_by_gradient_descent(pr.x, pr.y, 1.0, 100000);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(std::abs(fit.weights[j] - oracle.w[j]) <= 1e-6);
        }
        CHECK(std::abs(fit.intercept - oracle.b) <= 1e-6);
    }
}

TEST_CASE("ridge properties")
{
    const auto pr = random_problem(11, 60, 3);

    SUBCASE("larger alpha never grows the weight norm")
    {
        double previous = INFINITY;
        for (double alpha : {0.0, 0.1, 1.0, 10.0, 100.0, 1e4}) {
            const auto fit = fit_ridge(pr.x, pr.y, alpha);
            double norm = 0.0;
            for (double w : fit.weights) {
                norm += w * w;
            }
            CHECK(norm <= previous * (1 + 1e-12));
            previous = norm;
        }
    }
    SUBCASE("shifting y shifts only the intercept")
    {
        auto shifted = pr.y;
        for (auto& v : shifted) {
            v += 123.5;
        }
        const auto a = fit_ridge(pr.x, pr.y, 1.0);
        const auto b = fit_ridge(pr.x, shifted, 1.0);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(b.weights[j] == doctest::Approx(a.weights[j]).epsilon(1e-10));
        }
        CHECK(b.intercept == doctest::Approx(a.intercept + 123.5).epsilon(1e-10));
    }
    SUBCASE("constant column")
    {
        FeatureMatrix x{{1, 5}, {2, 5}, {3, 5}};
        const std::vector<double> y{1, 2, 3};
        CHECK_THROWS_AS(fit_ridge(x, y, 0.0), SingularSystemError);
        const auto fit = fit_ridge(x, y, 1.0);
        CHECK(fit.weights[1] == doctest::Approx(0.0));
    }
    SUBCASE("arity mismatch")
    {
        const auto fit = fit_ridge(pr.x, pr.y, 1.0);
        CHECK_THROWS_AS(predict(fit, std::vector<double>{1.0}), ValidationError);
    }
}

TEST_CASE("forest predictions average tree leaves")
{
    ForestModel f;
    f.n_features = 1;
    f.trees = {RegressionTree{{TreeNode{-1, 0, -1, -1, 4.0}}}, RegressionTree{{TreeNode{-1, 0, -1, -1, 6.0}}}};
    CHECK(predict(f, std::vector<double>{0.3}) == 5.0);
    CHECK_THROWS_AS(predict(f, std::vector<double>{0.3, 1.0}), ValidationError);
}

TEST_CASE("forest fits a step and ranks features")
{
    Rng rng(8);
    FeatureMatrix x;
    std::vector<double> step;
    std::vector<double> linear;
    for (int i = 0; i < 200; ++i) {
        const double f1 = rng.uniform();
        const double f2 = rng.uniform();
        x.push_back({f1, f2});
        step.push_back(f1 > 0.5 ? 1.0 : 0.0);
        linear.push_back(10 * f1 + f2);
    }
    const ForestParams params{100, 2, 3};
    const auto forest = fit_forest(x, step, params);
    double mse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = predict(forest, x[i]) - step[i];
        mse += e * e;
    }
    CHECK(mse / 200.0 < 0.01);
    for (const auto& tree : forest.trees) {
        CHECK(tree.depth() <= 2);
    }

    const auto ranked = fit_forest(x, linear, params);
    CHECK(ranked.importance_defined);
    CHECK(ranked.feature_importance[0] > ranked.feature_importance[1]);
}

TEST_CASE("forest bounds, determinism and constant targets")
{
    Rng rng(4);
    FeatureMatrix x;
    std::vector<double> y;
    for (int i = 0; i < 80; ++i) {
        x.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
        y.push_back(rng.normal() * 5.0 + 2.0);
    }
    const ForestParams params{64, 2, 17};
    const auto a = fit_forest(x, y, params);
    const auto b = fit_forest(x, y, params);
    const auto lo = *std::min_element(y.begin(), y.end());
    const auto hi = *std::max_element(y.begin(), y.end());
    for (int i = 0; i < 200; ++i) {
        const std::vector<double> q{rng.uniform() * 2 - 0.5, rng.uniform(), rng.uniform()};
        const double p = predict(a, q);
        CHECK(p >= lo);
        CHECK(p <= hi);
        CHECK(p == predict(b, q));
    }
    CHECK(model_to_json(a) == model_to_json(b));

    const std::vector<double> flat(x.size(), 5.0);
    const auto constant = fit_forest(x, flat, params);
    CHECK_FALSE(constant.importance_defined);
    for (double v : constant.feature_importance) {
        CHECK(v == 0.0);
    }
    CHECK(predict(constant, x[3]) == 5.0);
}

TEST_CASE("model serialization round-trips")
{
    const auto pr = random_problem(2, 30, 2);
    const std::vector<Model> ms{MeanModel{1.25}, fit_ridge(pr.x, pr.y, 1.0), fit_forest(pr.x, pr.y, {5, 2, 1})};
    for (const auto& m : ms) {
        const auto back = model_from_json(model_to_json(m));
        for (const auto& row : pr.x) {
            CHECK(predict(back, row) == predict(m, row));
        }
    }
    CHECK_THROWS(model_from_json(nlohmann::json{{"schema_version", 99}, {"kind", "mean"}}));
}
