#pragma once

#include "iclbench/baseline_models.hpp"
#include "iclbench/data.hpp"
#include "iclbench/llm_gateway.hpp"
#include "iclbench/metrics.hpp"

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace iclbench::reporting {

struct BaselineOptions {
    double ridge_alpha = 1.0;
    models::ForestParams forest; // 10,000 trees of depth 2 unless overridden
    /// Mean-model constant; defaults to the mean of the in-context targets.
    std::optional<double> mean_override;
};

struct BaselineRow {
    std::string model; // "mean", "ridge", "random_forest"
    int k = 0;
    double mse = 0.0;
    double mae = 0.0;
    double r2 = 0.0; // NaN when the test targets are constant
};

/// Fits the Mean, Ridge and RandomForest baselines on the in-context split
/// restricted to the first k features and scores them on the test split.
std::vector<BaselineRow> baseline_table(const data::SplitDataset& split, int k, const BaselineOptions& options = {});

/// Metric of the constant Mean-model prediction on the test split.
double mean_model_reference(const data::SplitDataset& split, const std::string& metric,
                            std::optional<double> mean_override = std::nullopt);

struct ConfigRow {
    std::string dataset;
    std::string model;
    std::string config;
    int m = 0;
    int k = 0;
    metrics::MetricsReport report;
    std::size_t expected = 0;
    bool complete = false;
};

/// One row per cell, ordered by (dataset, model, config, m, k). Cells with
/// fewer than `expected_per_cell` records are kept and flagged incomplete.
/// Throws ValidationError on an empty store.
std::vector<ConfigRow> config_comparison(std::span<const gateway::PredictionRecord> records,
                                         std::size_t expected_per_cell = data::kTestSize);

struct KerAverage {
    std::string dataset;
    std::string model;
    int m = 0;
    double mean_median_ker = 0.0;
    std::size_t n_k = 0;
};

struct KerSummary {
    std::vector<metrics::KERReport> pairs; // one per (dataset, model, m, k)
    std::vector<KerAverage> by_m;          // mean of the per-k medians
    std::vector<std::string> warnings;
};

/// Pairs anonymized and named cells of the same (dataset, model, m, k),
/// aligns them by query index (both scored), and reports the median KER per
/// pair and its mean across k. Unpaired cells produce a warning.
KerSummary ker_summary(std::span<const gateway::PredictionRecord> records);

void write_config_csv(std::ostream& out, std::span<const ConfigRow> rows);
void write_baseline_csv(std::ostream& out, const std::string& dataset, std::span<const BaselineRow> rows);
void write_ker_csv(std::ostream& out, const KerSummary& summary);
void write_ker_by_m_csv(std::ostream& out, const KerSummary& summary);

/// One plotted point.
struct ChartPoint {
    std::string series;
    double x = 0.0;
    double y = 0.0;
    std::string cell_id;
};

struct ReferenceLine {
    std::string label;
    double value = 0.0;
};

struct SeriesSpec {
    std::string title;
    std::string x_axis; // "m" or "k"
    std::string metric; // mse, mae, one_minus_r2, median_ker
    std::optional<ReferenceLine> reference;
};

/// Standalone SVG line chart: axes, ticks, legend, one polyline per series
/// (series in first-appearance order), optional dashed red reference line.
/// Every marker carries data-value with the exact number plotted. Throws
/// ValidationError on empty input or a non-finite value (naming the cell).
std::string emit_chart(const SeriesSpec& spec, std::span<const ChartPoint> points);

/// Points for one (dataset, model) chart of `metric` against `axis`. Series are
/// "<config> k=<k>" for axis m and "<config> m=<m>" for axis k.
std::vector<ChartPoint> chart_points(std::span<const ConfigRow> rows, const std::string& dataset,
                                     const std::string& model, const std::string& metric, const std::string& axis);

/// Points for the median-KER chart of one (dataset, model): one series per k
/// plus "mean over k".
std::vector<ChartPoint> ker_chart_points(const KerSummary& summary, const std::string& dataset,
                                         const std::string& model);

double metric_value(const metrics::MetricsReport& report, const std::string& metric);

} // namespace iclbench::reporting
