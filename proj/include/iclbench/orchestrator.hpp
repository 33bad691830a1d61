#pragma once

#include "iclbench/cache_key.hpp"
#include "iclbench/cell.hpp"
#include "iclbench/llm_gateway.hpp"
#include "iclbench/manifest.hpp"
#include "iclbench/result_store.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace iclbench::orchestrator {

inline constexpr int kValidM[] = {0, 10, 30, 100};
inline constexpr int kValidK[] = {1, 2, 3};

/// Checks m in {0,10,30,100}, k in {1,2,3}, and that m = 0 only with DirectQA
/// or Reasoning while DirectQA only runs at m = 0. Returns a description of the
/// first violation, or nullopt.
std::optional<std::string> validate_cell(const FactorCell& cell);

/// Example-selection seed shared by every prompt configuration and model for
/// the same (dataset, m, k), so anonymized and named cells see the same examples.
std::uint64_t cell_seed(std::uint64_t global_seed, const std::string& dataset_id, int m, int k);

/// Cartesian product of datasets x models x configs x m x k, dropping
/// combinations that fail validate_cell, followed by explicit cells (which must
/// be valid: ValidationError otherwise). Deduplicated; ordered by (dataset,
/// model, config, m, k) in manifest order. Seeds are filled in.
std::vector<FactorCell> expand_grid(const RunManifest& manifest);

/// Responders for one model, with optional per-configuration overrides.
struct ModelEndpoints {
    gateway::ModelParams params;
    gateway::ResponderPtr default_endpoint;
    std::map<PromptKind, gateway::ResponderPtr> by_kind;

    gateway::ResponderPtr for_kind(PromptKind kind) const;
};

using EndpointRegistry = std::map<std::string, ModelEndpoints>;

/// Builds responders from the manifest: "openai" uses OpenAICompatibleResponder
/// configured from the environment; objects with a "mock" key go through
/// gateway::register_mock. Every responder is wrapped in a ThrottledResponder
/// (and a TranscriptResponder when the manifest names a transcript file).
EndpointRegistry build_registry(const RunManifest& manifest);

struct RunOptions {
    bool resume = false;
};

struct CellTally {
    std::size_t queries = 0;
    std::size_t already_done = 0;
    std::size_t written = 0;
    std::size_t failed = 0;
    std::size_t cache_hits = 0;
};

struct RunSummary {
    std::size_t planned_queries = 0;
    std::size_t endpoint_calls = 0;
    std::size_t records_written = 0;
    std::size_t cache_hits = 0;
    std::size_t skipped_existing = 0;
    std::size_t failed_records = 0;
    bool paused_by_budget = false;
    std::map<std::string, std::string> aborted_models; // model id -> error
    std::map<std::string, CellTally> cells;

    bool complete() const { return !paused_by_budget && aborted_models.empty(); }
};

/// Runs every (cell, query) not already in the result store under
/// manifest.output_dir. A query whose prompt is in the response cache is
/// answered from it without an endpoint call. Terminal endpoint errors abort
/// only that model's remaining queries. When manifest.max_calls endpoint calls
/// have been made the run pauses; rerun with resume to continue.
/// Throws ValidationError when the store already holds records and
/// options.resume is false.
RunSummary run(const RunManifest& manifest, const std::map<std::string, PreparedDataset>& datasets,
               EndpointRegistry& registry, const RunOptions& options = {});

/// Copy of the manifest written next to the results so reports can reload datasets.
inline constexpr const char* kManifestCopyName = "run_manifest.json";

} // namespace iclbench::orchestrator
