#include "iclbench/reporting.hpp"

#include "iclbench/errors.hpp"
#include "iclbench/numeric_format.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <map>
#include <set>
#include <spdlog/spdlog.h>
#include <tuple>

namespace iclbench::reporting {

namespace {

double safe_r2(std::span<const double> pred, std::span<const double> truth)
{
    const bool defined = truth.size() >= 2 && std::any_of(truth.begin(), truth.end(), [&](double t) {
        return t != truth.front();
    });
    return defined ? metrics::r2(pred, truth) : std::numeric_limits<double>::quiet_NaN();
}

std::string csv_escape(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += "\"\"";
        } else {
            out += c;
        }
    }
    return out + "\"";
}

std::string xml_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

// Fixed palette so charts are byte-stable.
constexpr const char* kPalette[] = {"#1f77b4", "#2ca02c", "#9acd32", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};
constexpr const char* kReferenceColor = "#d62728";

std::string coord(double v)
{
    return fmt::format("{:.2f}", v);
}

// Tick step of 1, 2 or 5 times a power of ten giving at most ~6 ticks.
double nice_step(double span)
{
    if (!(span > 0.0)) {
        return 1.0;
    }
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double f : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= f * mag) {
            return f * mag;
        }
    }
    return 10.0 * mag;
}

} // namespace

std::vector<BaselineRow> baseline_table(const data::SplitDataset& split, int k, const BaselineOptions& options)
{
    if (k < 1) {
        throw ValidationError("baseline k must be at least 1");
    }
    const auto kk = static_cast<std::size_t>(k);
    const auto x_train = data::features_of(split.in_context, kk);
    const auto y_train = data::targets_of(split.in_context);
    const auto x_test = data::features_of(split.test, kk);
    const auto y_test = data::targets_of(split.test);

    std::vector<BaselineRow> rows;
    auto score = [&](const std::string& name, const models::Model& model) {
        std::vector<double> pred;
        pred.reserve(x_test.size());
        for (const auto& x : x_test) {
            pred.push_back(models::predict(model, x));
        }
        rows.push_back({name, k, metrics::mse(pred, y_test), metrics::mae(pred, y_test), safe_r2(pred, y_test)});
    };

    auto mean_model = models::fit_mean(y_train);
    if (options.mean_override) {
        mean_model.mean = *options.mean_override;
    }
    score("mean", mean_model);
    score("ridge", models::fit_ridge(x_train, y_train, options.ridge_alpha));
    score("random_forest", models::fit_forest(x_train, y_train, options.forest));
    return rows;
}

double mean_model_reference(const data::SplitDataset& split, const std::string& metric,
                            std::optional<double> mean_override)
{
    const auto y_train = data::targets_of(split.in_context);
    const double mean = mean_override.value_or(models::fit_mean(y_train).mean);
    const auto y_test = data::targets_of(split.test);
    const std::vector<double> pred(y_test.size(), mean);
    if (metric == "mse") {
        return metrics::mse(pred, y_test);
    }
    if (metric == "mae") {
        return metrics::mae(pred, y_test);
    }
    if (metric == "one_minus_r2") {
        return 1.0 - safe_r2(pred, y_test);
    }
    throw ValidationError(fmt::format("no Mean-model reference for metric '{}'", metric));
}

double metric_value(const metrics::MetricsReport& report, const std::string& metric)
{
    if (metric == "mse") {
        return report.mse;
    }
    if (metric == "mae") {
        return report.mae;
    }
    if (metric == "r2") {
        return report.r2;
    }
    if (metric == "one_minus_r2") {
        return report.one_minus_r2;
    }
    throw ValidationError(fmt::format("unknown metric '{}'", metric));
}

std::vector<ConfigRow> config_comparison(std::span<const gateway::PredictionRecord> records,
                                         std::size_t expected_per_cell)
{
    if (records.empty()) {
        throw ValidationError("result store is empty");
    }
    using Key = std::tuple<std::string, std::string, std::string, int, int>;
    std::map<Key, std::vector<gateway::PredictionRecord>> groups;
    for (const auto& r : records) {
        groups[{r.cell.dataset_id, r.cell.model_id, config_tag(r.cell.config), r.cell.m, r.cell.k}].push_back(r);
    }
    std::vector<ConfigRow> rows;
    for (const auto& [key, group] : groups) {
        ConfigRow row;
        std::tie(row.dataset, row.model, row.config, row.m, row.k) = key;
        row.expected = expected_per_cell;
        try {
            row.report = metrics::aggregate(group);
        } catch (const ValidationError& e) {
            // Every prediction failed: keep the row so the cell stays visible.
            row.report.cell_id = group.front().cell_id();
            row.report.n_failed = group.size();
            row.report.mse = row.report.mae = row.report.r2 = row.report.one_minus_r2 =
                std::numeric_limits<double>::quiet_NaN();
        }
        row.complete = group.size() >= expected_per_cell;
        if (!row.complete) {
            spdlog::warn("cell {} is incomplete: {} of {} records", row.report.cell_id, group.size(),
                         expected_per_cell);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

KerSummary ker_summary(std::span<const gateway::PredictionRecord> records)
{
    using PairKey = std::tuple<std::string, std::string, int, int>;
    std::map<PairKey, std::map<std::size_t, const gateway::PredictionRecord*>> anonymized;
    std::map<PairKey, std::map<std::size_t, const gateway::PredictionRecord*>> named;
    for (const auto& r : records) {
        if (r.cell.config.ablation) {
            continue;
        }
        const PairKey key{r.cell.dataset_id, r.cell.model_id, r.cell.m, r.cell.k};
        if (r.cell.config.kind == PromptKind::AnonymizedFeatures) {
            anonymized[key][r.query_index] = &r;
        } else if (r.cell.config.kind == PromptKind::NamedFeatures) {
            named[key][r.query_index] = &r;
        }
    }

    KerSummary summary;
    for (const auto& [key, af_records] : anonymized) {
        const auto& [dataset, model, m, k] = key;
        const auto nf_it = named.find(key);
        if (nf_it == named.end()) {
            summary.warnings.push_back(
                fmt::format("{}/{}/m{}/k{}: no named_features counterpart; KER row omitted", dataset, model, m, k));
            continue;
        }
        std::vector<double> af;
        std::vector<double> nf;
        std::vector<double> gt;
        for (const auto& [q, af_rec] : af_records) {
            const auto hit = nf_it->second.find(q);
            if (hit == nf_it->second.end() || !af_rec->parsed_value || !hit->second->parsed_value) {
                continue;
            }
            af.push_back(*af_rec->parsed_value);
            nf.push_back(*hit->second->parsed_value);
            gt.push_back(af_rec->ground_truth);
        }
        try {
            auto report = metrics::median_ker(af, nf, gt);
            report.dataset = dataset;
            report.model = model;
            report.m = m;
            report.k = k;
            summary.pairs.push_back(std::move(report));
        } catch (const ValidationError& e) {
            summary.warnings.push_back(fmt::format("{}/{}/m{}/k{}: {}", dataset, model, m, k, e.what()));
        }
    }
    for (const auto& [key, _] : named) {
        if (!anonymized.contains(key)) {
            const auto& [dataset, model, m, k] = key;
            summary.warnings.push_back(fmt::format(
                "{}/{}/m{}/k{}: no anonymized_features counterpart; KER row omitted", dataset, model, m, k));
        }
    }

    std::map<std::tuple<std::string, std::string, int>, std::vector<double>> per_m;
    for (const auto& p : summary.pairs) {
        per_m[{p.dataset, p.model, p.m}].push_back(p.median_ker);
    }
    for (const auto& [key, medians] : per_m) {
        double sum = 0.0;
        for (double v : medians) {
            sum += v;
        }
        summary.by_m.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key),
                                sum / static_cast<double>(medians.size()), medians.size()});
    }
    for (const auto& w : summary.warnings) {
        spdlog::warn("{}", w);
    }
    return summary;
}

void write_config_csv(std::ostream& out, std::span<const ConfigRow> rows)
{
    out << "dataset,model,config,m,k,n_scored,n_failed,mse,mae,r2,one_minus_r2,complete\n";
    for (const auto& r : rows) {
        out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_escape(r.dataset), csv_escape(r.model),
                           csv_escape(r.config), r.m, r.k, r.report.n_scored, r.report.n_failed,
                           format_shortest(r.report.mse), format_shortest(r.report.mae),
                           format_shortest(r.report.r2), format_shortest(r.report.one_minus_r2),
                           r.complete ? "true" : "false");
    }
}

void write_baseline_csv(std::ostream& out, const std::string& dataset, std::span<const BaselineRow> rows)
{
    out << "dataset,model,k,mse,mae,r2,one_minus_r2\n";
    for (const auto& r : rows) {
        out << fmt::format("{},{},{},{},{},{},{}\n", csv_escape(dataset), r.model, r.k, format_shortest(r.mse),
                           format_shortest(r.mae), format_shortest(r.r2), format_shortest(1.0 - r.r2));
    }
}

void write_ker_csv(std::ostream& out, const KerSummary& summary)
{
    out << "dataset,model,m,k,n_instances,n_excluded,median_ker\n";
    for (const auto& p : summary.pairs) {
        out << fmt::format("{},{},{},{},{},{},{}\n", csv_escape(p.dataset), csv_escape(p.model), p.m, p.k,
                           p.per_instance_ker.size(), p.n_excluded, format_shortest(p.median_ker));
    }
}

void write_ker_by_m_csv(std::ostream& out, const KerSummary& summary)
{
    out << "dataset,model,m,n_k,mean_median_ker\n";
    for (const auto& a : summary.by_m) {
        out << fmt::format("{},{},{},{},{}\n", csv_escape(a.dataset), csv_escape(a.model), a.m, a.n_k,
                           format_shortest(a.mean_median_ker));
    }
}

std::vector<ChartPoint> chart_points(std::span<const ConfigRow> rows, const std::string& dataset,
                                     const std::string& model, const std::string& metric, const std::string& axis)
{
    if (axis != "m" && axis != "k") {
        throw ValidationError(fmt::format("chart axis must be m or k, got '{}'", axis));
    }
    std::vector<ChartPoint> points;
    for (const auto& r : rows) {
        if (r.dataset != dataset || r.model != model) {
            continue;
        }
        ChartPoint p;
        if (axis == "m") {
            p.series = fmt::format("{} k={}", r.config, r.k);
            p.x = r.m;
        } else {
            p.series = fmt::format("{} m={}", r.config, r.m);
            p.x = r.k;
        }
        p.y = metric_value(r.report, metric);
        p.cell_id = r.report.cell_id;
        points.push_back(std::move(p));
    }
    return points;
}

std::vector<ChartPoint> ker_chart_points(const KerSummary& summary, const std::string& dataset,
                                         const std::string& model)
{
    std::vector<ChartPoint> points;
    for (const auto& p : summary.pairs) {
        if (p.dataset == dataset && p.model == model) {
            points.push_back({fmt::format("k={}", p.k), static_cast<double>(p.m), p.median_ker,
                              fmt::format("{}/{}/m{}/k{}", dataset, model, p.m, p.k)});
        }
    }
    std::sort(points.begin(), points.end(), [](const ChartPoint& a, const ChartPoint& b) {
        return std::tie(a.series, a.x) < std::tie(b.series, b.x);
    });
    for (const auto& a : summary.by_m) {
        if (a.dataset == dataset && a.model == model) {
            points.push_back({"mean over k", static_cast<double>(a.m), a.mean_median_ker,
                              fmt::format("{}/{}/m{}", dataset, model, a.m)});
        }
    }
    return points;
}

std::string emit_chart(const SeriesSpec& spec, std::span<const ChartPoint> points)
{
    if (points.empty()) {
        throw ValidationError(fmt::format("chart '{}' has no points", spec.title));
    }
    for (const auto& p : points) {
        if (!std::isfinite(p.y) || !std::isfinite(p.x)) {
            throw ValidationError(fmt::format("chart '{}': non-finite {} for cell {}", spec.title, spec.metric,
                                              p.cell_id));
        }
    }
    if (spec.reference && !std::isfinite(spec.reference->value)) {
        throw ValidationError(fmt::format("chart '{}': non-finite reference line", spec.title));
    }

    constexpr double width = 760.0;
    constexpr double height = 460.0;
    constexpr double left = 80.0;
    constexpr double right = 220.0;
    constexpr double top = 50.0;
    constexpr double bottom = 60.0;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    std::vector<double> xs;
    std::vector<std::string> series;
    double y_min = 0.0;
    double y_max = 0.0;
    for (const auto& p : points) {
        if (std::find(xs.begin(), xs.end(), p.x) == xs.end()) {
            xs.push_back(p.x);
        }
        if (std::find(series.begin(), series.end(), p.series) == series.end()) {
            series.push_back(p.series);
        }
        y_min = std::min(y_min, p.y);
        y_max = std::max(y_max, p.y);
    }
    if (spec.reference) {
        y_min = std::min(y_min, spec.reference->value);
        y_max = std::max(y_max, spec.reference->value);
    }
    std::sort(xs.begin(), xs.end());
    const double step = nice_step(y_max - y_min);
    y_min = std::floor(y_min / step) * step;
    y_max = std::ceil(y_max / step) * step;
    if (y_max <= y_min) {
        y_max = y_min + step;
    }

    auto x_pos = [&](double x) {
        const auto idx = static_cast<double>(std::find(xs.begin(), xs.end(), x) - xs.begin());
        return xs.size() == 1 ? left + plot_w / 2.0 : left + plot_w * idx / static_cast<double>(xs.size() - 1);
    };
    auto y_pos = [&](double y) { return top + plot_h * (1.0 - (y - y_min) / (y_max - y_min)); };

    std::string svg;
    svg += fmt::format("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
                       "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
                       "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n",
                       width, height);
    svg += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", width, height);
    svg += fmt::format("<text x=\"{}\" y=\"28\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                       coord(left + plot_w / 2.0), xml_escape(spec.title));

    // Axes and ticks.
    svg += "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\"/>\n", coord(left), coord(top + plot_h),
                       coord(left + plot_w));
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\"/>\n", coord(left), coord(top),
                       coord(top + plot_h));
    svg += "</g>\n<g class=\"ticks\">\n";
    for (double y = y_min; y <= y_max + step * 1e-9; y += step) {
        const double py = y_pos(y);
        svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#dddddd\"/>\n", coord(left),
                           coord(py), coord(left + plot_w));
        svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", coord(left - 6),
                           coord(py + 4), xml_escape(fmt::format("{:g}", std::abs(y) < step * 1e-9 ? 0.0 : y)));
    }
    for (double x : xs) {
        svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", coord(x_pos(x)),
                           coord(top + plot_h + 18), xml_escape(fmt::format("{:g}", x)));
    }
    svg += "</g>\n";
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", coord(left + plot_w / 2.0),
                       coord(height - 18), xml_escape(spec.x_axis));
    svg += fmt::format("<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">{1}</text>\n",
                       coord(top + plot_h / 2.0), xml_escape(spec.metric));

    if (spec.reference) {
        const double py = y_pos(spec.reference->value);
        svg += fmt::format("<line class=\"reference-line\" x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" "
                           "stroke=\"{3}\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\" data-value=\"{4}\"/>\n",
                           coord(left), coord(py), coord(left + plot_w), kReferenceColor,
                           format_shortest(spec.reference->value));
    }

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % std::size(kPalette)];
        std::vector<const ChartPoint*> pts;
        for (const auto& p : points) {
            if (p.series == series[s]) {
                pts.push_back(&p);
            }
        }
        std::stable_sort(pts.begin(), pts.end(), [](const ChartPoint* a, const ChartPoint* b) { return a->x < b->x; });
        svg += fmt::format("<g class=\"series\" data-series=\"{}\">\n", xml_escape(series[s]));
        if (pts.size() > 1) {
            std::string path;
            for (const auto* p : pts) {
                path += fmt::format("{}{},{}", path.empty() ? "" : " ", coord(x_pos(p->x)), coord(y_pos(p->y)));
            }
            svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n", color,
                               path);
        }
        for (const auto* p : pts) {
            svg += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"3.5\" fill=\"{}\" data-cell=\"{}\" data-x=\"{}\" "
                               "data-value=\"{}\"/>\n",
                               coord(x_pos(p->x)), coord(y_pos(p->y)), color, xml_escape(p->cell_id),
                               format_shortest(p->x), format_shortest(p->y));
        }
        svg += "</g>\n";
    }

    // Legend.
    svg += "<g class=\"legend\">\n";
    double ly = top + 6;
    for (std::size_t s = 0; s < series.size(); ++s) {
        svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n",
                           coord(left + plot_w + 16), coord(ly), kPalette[s % std::size(kPalette)]);
        svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", coord(left + plot_w + 34), coord(ly + 10),
                           xml_escape(series[s]));
        ly += 18;
    }
    if (spec.reference) {
        svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"1.5\" "
                           "stroke-dasharray=\"6 4\"/>\n",
                           coord(left + plot_w + 16), coord(ly + 6), coord(left + plot_w + 28), kReferenceColor);
        svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", coord(left + plot_w + 34), coord(ly + 10),
                           xml_escape(spec.reference->label));
    }
    svg += "</g>\n</svg>\n";
    return svg;
}

} // namespace iclbench::reporting
