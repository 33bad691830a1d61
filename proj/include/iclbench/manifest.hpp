#pragma once

#include "iclbench/baseline_models.hpp"
#include "iclbench/cell.hpp"
#include "iclbench/data.hpp"
#include "iclbench/llm_gateway.hpp"
#include "iclbench/model_params.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace iclbench::orchestrator {

inline constexpr int kManifestSchemaVersion = 1;

/// How to load one dataset: CSV columns, display labels, encodings.
struct DatasetSpec {
    std::string id;
    std::filesystem::path path;
    std::string target_column;
    std::string target_label;
    std::vector<std::string> feature_columns;
    std::vector<std::string> feature_labels; // aligned with feature_columns
    data::CategoricalEncodings encodings;
    std::optional<std::vector<double>> importance; // skips forest ranking when set
    models::ForestParams ranking_forest;
    data::StdConvention std_convention = data::StdConvention::Sample;
    std::optional<data::Stats> expected_stats;
};

struct ModelSpec {
    std::string id;
    gateway::ModelParams params;
    nlohmann::json endpoint;                             // "openai" or a mock spec
    std::map<PromptKind, nlohmann::json> endpoint_by_kind; // per-configuration overrides
};

struct FactorSpec {
    std::vector<PromptConfig> configs;
    std::vector<int> m_values;
    std::vector<int> k_values;
};

struct Concurrency {
    int workers = 4;
    int max_in_flight = 4;
    std::chrono::milliseconds min_interval{0};
};

enum class MeanModelSource { InContext, FullDataset };

struct RunManifest {
    std::uint64_t global_seed = 100;
    std::uint64_t split_seed = 100;
    std::vector<DatasetSpec> datasets;
    std::vector<ModelSpec> models;
    FactorSpec factors;
    std::vector<FactorCell> explicit_cells;
    gateway::RetryPolicy policy;
    gateway::BackoffPolicy backoff;
    std::filesystem::path output_dir = "results";
    std::filesystem::path cache_dir = "cache";
    std::size_t queries_per_cell = data::kTestSize;
    std::optional<std::size_t> max_calls;
    Concurrency concurrency;
    bool paranoid = false;
    std::optional<std::filesystem::path> transcript;
    MeanModelSource mean_model = MeanModelSource::InContext;
    nlohmann::json source; // the document this manifest was parsed from
};

/// Parses a manifest document. Relative paths resolve against `base_dir`.
RunManifest parse_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunManifest load_manifest(const std::filesystem::path& file);

/// A dataset ready for prompting.
struct PreparedDataset {
    data::Dataset dataset;
    data::SplitDataset split;
};

/// load_csv -> (rank_features unless importance is given) -> preprocess -> split.
/// Logs a warning when computed stats differ from `expected_stats`.
PreparedDataset prepare_dataset(const DatasetSpec& spec, std::uint64_t split_seed);

std::map<std::string, PreparedDataset> prepare_datasets(const RunManifest& manifest);

} // namespace iclbench::orchestrator
