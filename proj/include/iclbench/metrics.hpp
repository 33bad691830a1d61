#pragma once

#include "iclbench/llm_gateway.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace iclbench::metrics {

struct MetricsReport {
    std::string cell_id;
    std::size_t n_scored = 0;
    std::size_t n_failed = 0;
    double mse = 0.0;
    double mae = 0.0;
    double r2 = 0.0;
    double one_minus_r2 = 0.0;
};

/// Median Knowledge Effect Ratio for one (dataset, model, m, k) pair of
/// anonymized / named cells.
struct KERReport {
    std::string dataset;
    std::string model;
    int m = 0;
    int k = 0;
    std::vector<double> per_instance_ker;
    double median_ker = 0.0;
    std::size_t n_excluded = 0;
};

double mse(std::span<const double> pred, std::span<const double> truth);
double mae(std::span<const double> pred, std::span<const double> truth);

/// 1 - SS_res / SS_tot, SS_tot about mean(truth). Can be negative. Throws
/// ValidationError for fewer than 2 values or constant truth.
double r2(std::span<const double> pred, std::span<const double> truth);

/// Percentage reduction of absolute error from the anonymized prediction to the
/// named prediction: (|af - gt| - |nf - gt|) / |af - gt| * 100. nullopt when the
/// anonymized prediction is exact (zero denominator); such instances are excluded.
std::optional<double> ker(double y_af, double y_nf, double y_gt);

/// Midpoint of the two central values for even counts. Throws on empty input.
double median(std::vector<double> values);

/// Per-instance KER over aligned vectors and its median. Throws ValidationError
/// on length mismatch and when every instance is excluded.
KERReport median_ker(std::span<const double> af_preds, std::span<const double> nf_preds,
                     std::span<const double> truths);

/// Scores one cell. Records without a parsed value count as failed and are
/// left out of the metrics. r2 is NaN when the scored ground truth is constant. Throws ValidationError for mixed cells or when no
/// record was scored.
MetricsReport aggregate(std::span<const gateway::PredictionRecord> records);

} // namespace iclbench::metrics
