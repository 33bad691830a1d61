#include "iclbench/metrics.hpp"

#include "iclbench/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace iclbench::metrics {

namespace {

void check_pair(std::span<const double> pred, std::span<const double> truth)
{
    if (pred.size() != truth.size()) {
        throw ValidationError(fmt::format("{} predictions for {} ground-truth values", pred.size(), truth.size()));
    }
    if (pred.empty()) {
        throw ValidationError("metrics need at least one prediction");
    }
}

} // namespace

double mse(std::span<const double> pred, std::span<const double> truth)
{
    check_pair(pred, truth);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - truth[i];
        sum += e * e;
    }
    return sum / static_cast<double>(pred.size());
}

double mae(std::span<const double> pred, std::span<const double> truth)
{
    check_pair(pred, truth);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        sum += std::fabs(pred[i] - truth[i]);
    }
    return sum / static_cast<double>(pred.size());
}

double r2(std::span<const double> pred, std::span<const double> truth)
{
    check_pair(pred, truth);
    if (truth.size() < 2) {
        throw ValidationError("r2 needs at least 2 values");
    }
    double mean = 0.0;
    for (double t : truth) {
        mean += t;
    }
    mean /= static_cast<double>(truth.size());
    double ss_tot = 0.0;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ss_tot += (truth[i] - mean) * (truth[i] - mean);
        ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    }
    if (!(ss_tot > 0.0)) {
        throw ValidationError("r2 is undefined for a constant ground truth");
    }
    return 1.0 - ss_res / ss_tot;
}

std::optional<double> ker(double y_af, double y_nf, double y_gt)
{
    const double af_err = std::fabs(y_af - y_gt);
    if (af_err == 0.0) {
        return std::nullopt;
    }
    return (af_err - std::fabs(y_nf - y_gt)) / af_err * 100.0;
}

double median(std::vector<double> values)
{
    if (values.empty()) {
        throw ValidationError("median of an empty set");
    }
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

KERReport median_ker(std::span<const double> af_preds, std::span<const double> nf_preds,
                     std::span<const double> truths)
{
    if (af_preds.size() != nf_preds.size() || af_preds.size() != truths.size()) {
        throw ValidationError(fmt::format("KER needs aligned vectors, got {}/{}/{}", af_preds.size(), nf_preds.size(),
                                          truths.size()));
    }
    KERReport report;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (auto v = ker(af_preds[i], nf_preds[i], truths[i])) {
            report.per_instance_ker.push_back(*v);
        } else {
            ++report.n_excluded;
        }
    }
    if (report.per_instance_ker.empty()) {
        throw ValidationError("every KER instance was excluded (anonymized predictions exact)");
    }
    report.median_ker = median(report.per_instance_ker);
    return report;
}

MetricsReport aggregate(std::span<const gateway::PredictionRecord> records)
{
    if (records.empty()) {
        throw ValidationError("no records to aggregate");
    }
    MetricsReport report;
    report.cell_id = records.front().cell_id();
    std::vector<double> pred;
    std::vector<double> truth;
    for (const auto& r : records) {
        if (r.cell_id() != report.cell_id) {
            throw ValidationError(fmt::format("cannot aggregate records of '{}' with '{}'", r.cell_id(), report.cell_id));
        }
        if (r.parsed_value) {
            pred.push_back(*r.parsed_value);
            truth.push_back(r.ground_truth);
        } else {
            ++report.n_failed;
        }
    }
    report.n_scored = pred.size();
    if (pred.empty()) {
        throw ValidationError(fmt::format("cell '{}' has no scored predictions", report.cell_id));
    }
    report.mse = mse(pred, truth);
    report.mae = mae(pred, truth);
    const bool r2_defined = truth.size() >= 2 && std::any_of(truth.begin(), truth.end(), [&](double t) {
        return t != truth.front();
    });
    report.r2 = r2_defined ? r2(pred, truth) : std::numeric_limits<double>::quiet_NaN();
    report.one_minus_r2 = 1.0 - report.r2;
    return report;
}

} // namespace iclbench::metrics
