#include "golden.hpp"

#include "iclbench/errors.hpp"
#include "iclbench/numeric_format.hpp"
#include "iclbench/orchestrator.hpp"
#include "iclbench/random.hpp"
#include "iclbench/reporting.hpp"
#include "iclbench/result_store.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace fs = std::filesystem;
using namespace iclbench;

namespace {

constexpr int kExitPaused = 3;
constexpr int kExitAborted = 4;

int run_command(const fs::path& manifest_path, bool resume, bool dry_run)
{
    const auto manifest = orchestrator::load_manifest(manifest_path);
    const auto cells = orchestrator::expand_grid(manifest);
    if (dry_run) {
        for (const auto& cell : cells) {
            std::cout << cell.id() << '\n';
        }
        std::cout << fmt::format("{} cells, {} queries\n", cells.size(), cells.size() * manifest.queries_per_cell);
        return 0;
    }
    const auto datasets = orchestrator::prepare_datasets(manifest);
    auto registry = orchestrator::build_registry(manifest);
    const auto summary = orchestrator::run(manifest, datasets, registry, {resume});

    nlohmann::json doc = {{"planned_queries", summary.planned_queries},
                          {"endpoint_calls", summary.endpoint_calls},
                          {"records_written", summary.records_written},
                          {"cache_hits", summary.cache_hits},
                          {"skipped_existing", summary.skipped_existing},
                          {"failed_records", summary.failed_records},
                          {"paused_by_budget", summary.paused_by_budget},
                          {"aborted_models", summary.aborted_models},
                          {"complete", summary.complete()}};
    std::ofstream(manifest.output_dir / "run_summary.json") << doc.dump(2) << '\n';
    std::cout << doc.dump(2) << '\n';
    if (summary.paused_by_budget) {
        return kExitPaused;
    }
    return summary.aborted_models.empty() ? 0 : kExitAborted;
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(fmt::format("cannot write '{}'", path.string()));
    }
    out << text;
}

template <typename Fn>
void write_csv(const fs::path& path, Fn&& fn)
{
    std::ostringstream out;
    fn(out);
    write_file(path, out.str());
    spdlog::info("wrote {}", path.string());
}

int report_command(const std::string& what, const fs::path& store_dir, const fs::path& out_dir)
{
    const auto records = orchestrator::ResultStore::read(store_dir);
    fs::create_directories(out_dir);

    std::optional<orchestrator::RunManifest> manifest;
    std::map<std::string, orchestrator::PreparedDataset> datasets;
    if (fs::exists(store_dir / orchestrator::kManifestCopyName)) {
        manifest = orchestrator::load_manifest(store_dir / orchestrator::kManifestCopyName);
        datasets = orchestrator::prepare_datasets(*manifest);
    } else {
        spdlog::warn("no {} in {}; baselines and Mean-model reference lines are skipped",
                     orchestrator::kManifestCopyName, store_dir.string());
    }
    const auto expected = manifest ? manifest->queries_per_cell : data::kTestSize;
    const bool all = what == "all";
    int status = 0;

    const auto rows = reporting::config_comparison(records, expected);
    if (all || what == "tables") {
        write_csv(out_dir / "config_comparison.csv", [&](std::ostream& o) { reporting::write_config_csv(o, rows); });
        if (!datasets.empty()) {
            write_csv(out_dir / "baselines.csv", [&](std::ostream& o) {
                bool header = true;
                for (const auto& [id, prepared] : datasets) {
                    std::vector<reporting::BaselineRow> table;
                    for (int k = 1; k <= std::min<int>(3, static_cast<int>(prepared.dataset.feature_count())); ++k) {
                        const auto part = reporting::baseline_table(prepared.split, k);
                        table.insert(table.end(), part.begin(), part.end());
                    }
                    std::ostringstream block;
                    reporting::write_baseline_csv(block, id, table);
                    auto text = block.str();
                    if (!header) {
                        text.erase(0, text.find('\n') + 1);
                    }
                    header = false;
                    o << text;
                }
            });
        }
    }

    const auto ker = reporting::ker_summary(records);
    if (all || what == "ker") {
        write_csv(out_dir / "ker_pairs.csv", [&](std::ostream& o) { reporting::write_ker_csv(o, ker); });
        write_csv(out_dir / "ker_by_m.csv", [&](std::ostream& o) { reporting::write_ker_by_m_csv(o, ker); });
    }

    if (all || what == "charts") {
        std::set<std::pair<std::string, std::string>> panels;
        for (const auto& r : rows) {
            panels.emplace(r.dataset, r.model);
        }
        for (const auto& [dataset, model] : panels) {
            for (const std::string metric : {"mse", "mae", "one_minus_r2"}) {
                std::optional<reporting::ReferenceLine> reference;
                if (const auto it = datasets.find(dataset); it != datasets.end()) {
                    std::optional<double> mean_override;
                    if (manifest->mean_model == orchestrator::MeanModelSource::FullDataset) {
                        mean_override = it->second.dataset.stats.mean;
                    }
                    reference = reporting::ReferenceLine{
                        "Mean model", reporting::mean_model_reference(it->second.split, metric, mean_override)};
                }
                for (const std::string axis : {"m", "k"}) {
                    const reporting::SeriesSpec spec{fmt::format("{} / {}: {} by {}", dataset, model, metric, axis),
                                                     axis, metric, reference};
                    const auto points = reporting::chart_points(rows, dataset, model, metric, axis);
                    const auto path = out_dir / fmt::format("{}_{}_{}_{}.svg", dataset, model, metric, axis);
                    try {
                        write_file(path, reporting::emit_chart(spec, points));
                        spdlog::info("wrote {}", path.string());
                    } catch (const ValidationError& e) {
                        spdlog::error("chart {} not written: {}", path.filename().string(), e.what());
                        status = 1;
                    }
                }
            }
            const auto ker_points = reporting::ker_chart_points(ker, dataset, model);
            if (!ker_points.empty()) {
                const reporting::SeriesSpec spec{fmt::format("{} / {}: median KER by m", dataset, model), "m",
                                                 "median_ker", std::nullopt};
                write_file(out_dir / fmt::format("{}_{}_median_ker_m.svg", dataset, model),
                           reporting::emit_chart(spec, ker_points));
            }
        }
    }
    return status;
}

int golden_command(const fs::path& csv, const fs::path& out_dir)
{
    const auto fixture = golden::load_fixture(csv);
    fs::create_directories(out_dir);
    for (const auto& c : golden::cases()) {
        write_file(out_dir / c.file_name, golden::render(c, fixture));
    }
    std::cout << fmt::format("wrote {} prompts to {}\n", golden::cases().size(), out_dir.string());
    return 0;
}

// Noiseless linear data: Power Usage = 2 Voltage + 3 Current Draw, with an
// irrelevant third column. Voltage values are distinct so no two prompts repeat.
int synth_command(const fs::path& out, std::size_t rows, std::uint64_t seed)
{
    if (rows > 1000) {
        throw ValidationError("synth supports at most 1000 rows");
    }
    Rng rng(seed);
    std::vector<int> voltage(1000);
    std::iota(voltage.begin(), voltage.end(), 0);
    rng.shuffle(voltage);
    std::ostringstream csv;
    csv << "Voltage,Current Draw,Cabinet Temperature,Power Usage\n";
    for (std::size_t i = 0; i < rows; ++i) {
        const double v = voltage[i] / 100.0;
        const double c = round2(rng.uniform());
        const double t = round2(rng.uniform());
        csv << fmt::format("{},{},{},{}\n", format_shortest(v), format_shortest(c), format_shortest(t),
                           format_shortest(round2(2.0 * v + 3.0 * c)));
    }
    write_file(out, csv.str());
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"In-context regression benchmark: run LLM experiments and report metrics"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error")->capture_default_str();

    auto* run = app.add_subcommand("run", "Run (or resume) the experiment grid of a manifest");
    fs::path manifest_path;
    bool resume = false;
    bool dry_run = false;
    run->add_option("--manifest", manifest_path, "Run manifest (JSON)")->required()->check(CLI::ExistingFile);
    run->add_flag("--resume", resume, "Continue a run whose result store already has records");
    run->add_flag("--dry-run", dry_run, "List the cells without preparing data or calling endpoints");

    auto* report = app.add_subcommand("report", "Write metric tables, KER summaries and charts");
    std::string what = "all";
    fs::path store_dir;
    fs::path report_out;
    report->add_option("what", what, "tables, charts, ker or all")
        ->check(CLI::IsMember({"tables", "charts", "ker", "all"}))
        ->capture_default_str();
    report->add_option("--store", store_dir, "Run output directory holding results.jsonl")
        ->required()
        ->check(CLI::ExistingDirectory);
    report->add_option("--out", report_out, "Directory for reports")->required();

    auto* golden_cmd = app.add_subcommand("golden", "Regenerate golden prompt files");
    fs::path golden_csv;
    fs::path golden_out;
    bool regenerate = false;
    golden_cmd->add_option("--data", golden_csv, "Synthetic dataset CSV")->required()->check(CLI::ExistingFile);
    golden_cmd->add_option("--out", golden_out, "Output directory")->required();
    golden_cmd->add_flag("--regenerate-golden", regenerate, "Required: acknowledges overwriting the golden files");

    auto* synth = app.add_subcommand("synth", "Write the synthetic linear dataset");
    fs::path synth_out;
    std::size_t synth_rows = 400;
    std::uint64_t synth_seed = 100;
    synth->add_option("--out", synth_out, "CSV path")->required();
    synth->add_option("--rows", synth_rows, "Number of rows")->capture_default_str();
    synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    // Logs go to stderr so stdout carries only command output.
    spdlog::set_default_logger(spdlog::stderr_color_mt("iclbench"));
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (*run) {
            return run_command(manifest_path, resume, dry_run);
        }
        if (*report) {
            return report_command(what, store_dir, report_out);
        }
        if (*golden_cmd) {
            if (!regenerate) {
                std::cerr << "refusing to overwrite golden files without --regenerate-golden\n";
                return 2;
            }
            return golden_command(golden_csv, golden_out);
        }
        if (*synth) {
            return synth_command(synth_out, synth_rows, synth_seed);
        }
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
