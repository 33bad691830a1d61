#include "iclbench/manifest.hpp"

#include "iclbench/errors.hpp"

#include <fmt/format.h>
#include <fstream>
#include <set>
#include <spdlog/spdlog.h>

namespace iclbench::orchestrator {

namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

// Accepts "column" or {"column": ..., "label": ...}.
std::pair<std::string, std::string> column_and_label(const json& j)
{
    if (j.is_string()) {
        return {j.get<std::string>(), j.get<std::string>()};
    }
    const auto column = j.at("column").get<std::string>();
    return {column, j.value("label", column)};
}

DatasetSpec parse_dataset(const json& j, const std::filesystem::path& base)
{
    DatasetSpec spec;
    spec.id = j.at("id").get<std::string>();
    spec.path = resolve(base, j.at("path").get<std::string>());
    std::tie(spec.target_column, spec.target_label) = column_and_label(j.at("target"));
    for (const auto& f : j.at("features")) {
        auto [column, label] = column_and_label(f);
        spec.feature_columns.push_back(std::move(column));
        spec.feature_labels.push_back(std::move(label));
    }
    if (spec.feature_columns.empty()) {
        throw SchemaError(fmt::format("dataset '{}' lists no features", spec.id));
    }
    if (auto it = j.find("encodings"); it != j.end()) {
        for (const auto& [column, mapping] : it->items()) {
            spec.encodings[column] = mapping.get<std::map<std::string, double>>();
        }
    }
    if (auto it = j.find("importance"); it != j.end() && !it->is_null()) {
        spec.importance = it->get<std::vector<double>>();
    }
    if (auto it = j.find("ranking_forest"); it != j.end()) {
        spec.ranking_forest.n_estimators = it->value("n_estimators", spec.ranking_forest.n_estimators);
        spec.ranking_forest.max_depth = it->value("max_depth", spec.ranking_forest.max_depth);
        spec.ranking_forest.seed = it->value("seed", spec.ranking_forest.seed);
    }
    const auto convention = j.value("std_convention", std::string("sample"));
    if (convention == "sample") {
        spec.std_convention = data::StdConvention::Sample;
    } else if (convention == "population") {
        spec.std_convention = data::StdConvention::Population;
    } else {
        throw SchemaError(fmt::format("std_convention must be sample or population, got '{}'", convention));
    }
    if (auto it = j.find("expected_stats"); it != j.end()) {
        spec.expected_stats = data::Stats{it->at("mean").get<double>(), it->at("std").get<double>()};
    }
    return spec;
}

ModelSpec parse_model(const json& j)
{
    ModelSpec spec;
    spec.id = j.at("id").get<std::string>();
    spec.params = gateway::ModelParams::defaults_for(j.value("model_name", spec.id));
    if (auto it = j.find("params"); it != j.end()) {
        spec.params.temperature = it->value("temperature", spec.params.temperature);
        spec.params.max_tokens = it->value("max_tokens", spec.params.max_tokens);
        if (auto tp = it->find("top_p"); tp != it->end()) {
            spec.params.top_p = tp->is_null() ? std::nullopt : std::optional<double>(tp->get<double>());
        }
    }
    spec.endpoint = j.at("endpoint");
    if (auto it = j.find("endpoint_by_config"); it != j.end()) {
        for (const auto& [kind, endpoint] : it->items()) {
            spec.endpoint_by_kind[prompt_kind_from_string(kind)] = endpoint;
        }
    }
    return spec;
}

} // namespace

RunManifest parse_manifest(const json& doc, const std::filesystem::path& given_base_dir)
{
    try {
        // The copy written next to results records where its relative paths point.
        std::filesystem::path base_dir = given_base_dir;
        if (base_dir.empty() && doc.contains("base_dir")) {
            base_dir = doc.at("base_dir").get<std::string>();
        }
        const auto version = doc.value("schema_version", kManifestSchemaVersion);
        if (version != kManifestSchemaVersion) {
            throw SchemaError(fmt::format("unsupported manifest schema_version {}", version));
        }
        RunManifest m;
        m.source = doc;
        m.source["base_dir"] =
            (base_dir.empty() ? std::filesystem::current_path() : std::filesystem::absolute(base_dir))
                .lexically_normal()
                .string();
        m.global_seed = doc.value("global_seed", m.global_seed);
        m.split_seed = doc.value("split_seed", m.split_seed);
        for (const auto& d : doc.at("datasets")) {
            m.datasets.push_back(parse_dataset(d, base_dir));
        }
        for (const auto& model : doc.value("models", json::array())) {
            m.models.push_back(parse_model(model));
        }
        if (auto it = doc.find("factors"); it != doc.end()) {
            for (const auto& c : it->value("configs", json::array())) {
                m.factors.configs.push_back(config_from_json(c));
            }
            m.factors.m_values = it->value("m", std::vector<int>{});
            m.factors.k_values = it->value("k", std::vector<int>{});
        }
        for (const auto& c : doc.value("cells", json::array())) {
            m.explicit_cells.push_back(cell_from_json(c));
        }
        if (auto it = doc.find("policy"); it != doc.end()) {
            m.policy.initial_seed = it->value("initial_seed", m.policy.initial_seed);
            m.policy.max_attempts = it->value("max_attempts", m.policy.max_attempts);
        }
        if (auto it = doc.find("backoff"); it != doc.end()) {
            m.backoff.max_retries = it->value("max_retries", m.backoff.max_retries);
            m.backoff.initial_delay = std::chrono::milliseconds(it->value("initial_delay_ms", 500));
            m.backoff.factor = it->value("factor", m.backoff.factor);
            m.backoff.max_delay = std::chrono::milliseconds(it->value("max_delay_ms", 30000));
        }
        m.output_dir = resolve(base_dir, doc.value("output_dir", std::string("results")));
        m.cache_dir = resolve(base_dir, doc.value("cache_dir", std::string("cache")));
        m.queries_per_cell = doc.value("queries_per_cell", m.queries_per_cell);
        if (m.queries_per_cell == 0 || m.queries_per_cell > data::kTestSize) {
            throw SchemaError(fmt::format("queries_per_cell must be in 1..{}", data::kTestSize));
        }
        if (auto it = doc.find("budget"); it != doc.end()) {
            if (auto mc = it->find("max_calls"); mc != it->end() && !mc->is_null()) {
                m.max_calls = mc->get<std::size_t>();
            }
        }
        if (auto it = doc.find("concurrency"); it != doc.end()) {
            m.concurrency.workers = it->value("workers", m.concurrency.workers);
            m.concurrency.max_in_flight = it->value("max_in_flight", m.concurrency.max_in_flight);
            m.concurrency.min_interval = std::chrono::milliseconds(it->value("min_interval_ms", 0));
        }
        m.paranoid = doc.value("paranoid", false);
        if (auto it = doc.find("transcript"); it != doc.end() && !it->is_null()) {
            m.transcript = resolve(base_dir, it->get<std::string>());
        }
        const auto mean_source = doc.value("mean_model", std::string("in_context"));
        if (mean_source == "in_context") {
            m.mean_model = MeanModelSource::InContext;
        } else if (mean_source == "full_dataset") {
            m.mean_model = MeanModelSource::FullDataset;
        } else {
            throw SchemaError(fmt::format("mean_model must be in_context or full_dataset, got '{}'", mean_source));
        }

        std::set<std::string> ids;
        for (const auto& d : m.datasets) {
            if (!ids.insert(d.id).second) {
                throw SchemaError(fmt::format("dataset id '{}' defined twice", d.id));
            }
        }
        ids.clear();
        for (const auto& model : m.models) {
            if (!ids.insert(model.id).second) {
                throw SchemaError(fmt::format("model id '{}' defined twice", model.id));
            }
        }
        return m;
    } catch (const json::exception& e) {
        throw SchemaError(fmt::format("malformed manifest: {}", e.what()));
    }
}

RunManifest load_manifest(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in) {
        throw SchemaError(fmt::format("cannot open manifest '{}'", file.string()));
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw SchemaError(fmt::format("manifest '{}' is not valid JSON: {}", file.string(), e.what()));
    }
    if (doc.contains("base_dir")) {
        return parse_manifest(doc);
    }
    return parse_manifest(doc, file.parent_path());
}

PreparedDataset prepare_dataset(const DatasetSpec& spec, std::uint64_t split_seed)
{
    auto raw = data::load_csv(spec.path, spec.target_column, spec.feature_columns, spec.encodings);
    for (std::size_t i = 0; i < spec.feature_labels.size(); ++i) {
        raw.column_names[i] = spec.feature_labels[i];
    }
    raw.column_names.back() = spec.target_label;

    std::vector<double> importance;
    if (spec.importance) {
        importance = *spec.importance;
    } else {
        spdlog::info("ranking features of '{}' with a {}-tree forest", spec.id, spec.ranking_forest.n_estimators);
        importance = data::rank_features(raw, spec.ranking_forest, spec.ranking_forest.seed);
    }
    PreparedDataset out;
    out.dataset = data::preprocess(raw, importance, spec.id, spec.std_convention);
    if (spec.expected_stats && (std::abs(spec.expected_stats->mean - out.dataset.stats.mean) > 0.005 ||
                                std::abs(spec.expected_stats->std - out.dataset.stats.std) > 0.005)) {
        spdlog::warn("dataset '{}': computed stats ({}, {}) differ from expected ({}, {})", spec.id,
                     out.dataset.stats.mean, out.dataset.stats.std, spec.expected_stats->mean,
                     spec.expected_stats->std);
    }
    out.split = data::split(out.dataset, split_seed);
    return out;
}

std::map<std::string, PreparedDataset> prepare_datasets(const RunManifest& manifest)
{
    std::map<std::string, PreparedDataset> out;
    for (const auto& spec : manifest.datasets) {
        out.emplace(spec.id, prepare_dataset(spec, manifest.split_seed));
    }
    return out;
}

} // namespace iclbench::orchestrator
