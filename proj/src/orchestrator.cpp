#include "iclbench/orchestrator.hpp"

#include "iclbench/errors.hpp"
#include "iclbench/openai_responder.hpp"
#include "iclbench/mock_responders.hpp"
#include "iclbench/random.hpp"

#include <algorithm>
#include <atomic>
#include <fmt/format.h>
#include <fstream>
#include <set>
#include <spdlog/spdlog.h>
#include <thread>

namespace iclbench::orchestrator {

namespace {

bool contains(std::span<const int> values, int v)
{
    return std::find(values.begin(), values.end(), v) != values.end();
}

// Thrown by the budget guard; never escapes run().
struct BudgetExhausted {};

class BudgetedResponder final : public gateway::Responder {
public:
    BudgetedResponder(gateway::ResponderPtr inner, std::atomic<std::size_t>& calls, std::optional<std::size_t> budget)
        : inner_(std::move(inner)), calls_(calls), budget_(budget)
    {
    }

    std::string respond(const gateway::ChatRequest& request) override
    {
        const auto n = calls_.fetch_add(1);
        if (budget_ && n >= *budget_) {
            calls_.fetch_sub(1);
            throw BudgetExhausted{};
        }
        return inner_->respond(request);
    }

private:
    gateway::ResponderPtr inner_;
    std::atomic<std::size_t>& calls_;
    std::optional<std::size_t> budget_;
};

gateway::ResponderPtr make_endpoint(const nlohmann::json& spec)
{
    if (spec.is_string() && spec.get<std::string>() == "openai") {
        return std::make_shared<gateway::OpenAICompatibleResponder>(gateway::OpenAICompatibleResponder::config_from_env());
    }
    if (spec.is_object() && spec.contains("openai")) {
        auto config = gateway::OpenAICompatibleResponder::config_from_env();
        const auto& o = spec.at("openai");
        config.base_url = o.value("base_url", config.base_url);
        if (auto key_env = o.find("api_key_env"); key_env != o.end()) {
            const char* v = std::getenv(key_env->get<std::string>().c_str());
            config.api_key = v != nullptr ? v : "";
        }
        return std::make_shared<gateway::OpenAICompatibleResponder>(config);
    }
    if (spec.is_object() && spec.contains("mock")) {
        return gateway::register_mock(spec);
    }
    throw SchemaError(fmt::format("unknown endpoint spec {}", spec.dump()));
}

struct Task {
    std::size_t cell;
    std::size_t query;
};

} // namespace

std::optional<std::string> validate_cell(const FactorCell& cell)
{
    if (!contains(kValidM, cell.m)) {
        return fmt::format("cell {}: m = {} is not one of 0, 10, 30, 100", cell.id(), cell.m);
    }
    if (!contains(kValidK, cell.k)) {
        return fmt::format("cell {}: k = {} is not one of 1, 2, 3", cell.id(), cell.k);
    }
    const auto kind = cell.config.kind;
    if (kind == PromptKind::DirectQA && cell.m != 0) {
        return fmt::format("cell {}: direct_qa uses no in-context examples (m must be 0)", cell.id());
    }
    if (cell.m == 0 && kind != PromptKind::DirectQA && kind != PromptKind::Reasoning) {
        return fmt::format("cell {}: m = 0 is only valid for direct_qa (or reasoning)", cell.id());
    }
    if (cell.config.ablation && std::holds_alternative<SortedExamples>(*cell.config.ablation) && cell.m == 0) {
        return fmt::format("cell {}: sorting needs in-context examples", cell.id());
    }
    return std::nullopt;
}

std::uint64_t cell_seed(std::uint64_t global_seed, const std::string& dataset_id, int m, int k)
{
    return mix64(fnv1a64(fmt::format("{}|{}|{}|{}", global_seed, dataset_id, m, k)));
}

std::vector<FactorCell> expand_grid(const RunManifest& manifest)
{
    std::vector<FactorCell> cells;
    std::set<std::string> seen;
    auto add = [&](FactorCell cell) {
        cell.seed = cell_seed(manifest.global_seed, cell.dataset_id, cell.m, cell.k);
        if (seen.insert(cell.id()).second) {
            cells.push_back(std::move(cell));
        }
    };

    if (manifest.models.empty()) {
        spdlog::warn("manifest defines no models; the grid is empty");
    }
    for (const auto& dataset : manifest.datasets) {
        for (const auto& model : manifest.models) {
            for (const auto& config : manifest.factors.configs) {
                for (int m : manifest.factors.m_values) {
                    for (int k : manifest.factors.k_values) {
                        FactorCell cell{dataset.id, model.id, config, m, k, 0};
                        if (!validate_cell(cell)) {
                            add(std::move(cell));
                        }
                    }
                }
            }
        }
    }

    std::set<std::string> dataset_ids;
    for (const auto& d : manifest.datasets) {
        dataset_ids.insert(d.id);
    }
    std::set<std::string> model_ids;
    for (const auto& m : manifest.models) {
        model_ids.insert(m.id);
    }
    for (const auto& explicit_cell : manifest.explicit_cells) {
        if (auto violation = validate_cell(explicit_cell)) {
            throw ValidationError(*violation);
        }
        if (!dataset_ids.contains(explicit_cell.dataset_id)) {
            throw ValidationError(fmt::format("cell {} names undefined dataset '{}'", explicit_cell.id(),
                                              explicit_cell.dataset_id));
        }
        if (!model_ids.contains(explicit_cell.model_id)) {
            throw ValidationError(fmt::format("cell {} names undefined model '{}'", explicit_cell.id(),
                                              explicit_cell.model_id));
        }
        add(explicit_cell);
    }
    return cells;
}

gateway::ResponderPtr ModelEndpoints::for_kind(PromptKind kind) const
{
    if (auto it = by_kind.find(kind); it != by_kind.end()) {
        return it->second;
    }
    return default_endpoint;
}

EndpointRegistry build_registry(const RunManifest& manifest)
{
    auto wrap = [&](gateway::ResponderPtr inner) -> gateway::ResponderPtr {
        if (manifest.transcript) {
            inner = std::make_shared<gateway::TranscriptResponder>(std::move(inner), manifest.transcript->string());
        }
        return std::make_shared<gateway::ThrottledResponder>(std::move(inner), manifest.concurrency.max_in_flight,
                                                             manifest.concurrency.min_interval);
    };
    EndpointRegistry registry;
    for (const auto& model : manifest.models) {
        ModelEndpoints endpoints;
        endpoints.params = model.params;
        endpoints.default_endpoint = wrap(make_endpoint(model.endpoint));
        for (const auto& [kind, spec] : model.endpoint_by_kind) {
            endpoints.by_kind[kind] = wrap(make_endpoint(spec));
        }
        registry.emplace(model.id, std::move(endpoints));
    }
    return registry;
}

RunSummary run(const RunManifest& manifest, const std::map<std::string, PreparedDataset>& datasets,
               EndpointRegistry& registry, const RunOptions& options)
{
    const auto cells = expand_grid(manifest);
    for (const auto& cell : cells) {
        if (!datasets.contains(cell.dataset_id)) {
            throw ValidationError(fmt::format("dataset '{}' was not prepared", cell.dataset_id));
        }
        if (!registry.contains(cell.model_id)) {
            throw ValidationError(fmt::format("no endpoint registered for model '{}'", cell.model_id));
        }
    }

    auto store = ResultStore::open(manifest.output_dir);
    if (store.size() > 0 && !options.resume) {
        throw ValidationError(fmt::format("'{}' already holds {} records; pass resume to continue that run",
                                          store.path().string(), store.size()));
    }
    if (!manifest.source.is_null()) {
        std::ofstream(manifest.output_dir / kManifestCopyName) << manifest.source.dump(2) << '\n';
    }
    auto cache = ResponseCache::open(manifest.cache_dir);

    RunSummary summary;
    std::vector<Task> tasks;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        auto& tally = summary.cells[cells[c].id()];
        tally.queries = manifest.queries_per_cell;
        for (std::size_t q = 0; q < manifest.queries_per_cell; ++q) {
            ++summary.planned_queries;
            if (store.contains(cells[c].id(), q)) {
                ++tally.already_done;
                ++summary.skipped_existing;
            } else {
                tasks.push_back({c, q});
            }
        }
    }
    spdlog::info("{} cells, {} queries planned, {} already in the store, {} to run", cells.size(),
                 summary.planned_queries, summary.skipped_existing, tasks.size());

    std::atomic<std::size_t> calls{0};
    std::map<std::string, std::map<PromptKind, gateway::ResponderPtr>> guarded;
    for (const auto& cell : cells) {
        auto& slot = guarded[cell.model_id][cell.config.kind];
        if (!slot) {
            slot = std::make_shared<BudgetedResponder>(registry.at(cell.model_id).for_kind(cell.config.kind), calls,
                                                       manifest.max_calls);
        }
    }

    std::mutex state_mutex;
    std::atomic<bool> paused{false};
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> finished{0};
    const std::size_t progress_step = std::max<std::size_t>(1, tasks.size() / 10);

    auto worker = [&] {
        for (;;) {
            if (paused.load()) {
                return;
            }
            const auto t = next.fetch_add(1);
            if (t >= tasks.size()) {
                return;
            }
            const auto& cell = cells[tasks[t].cell];
            const auto query = tasks[t].query;
            {
                std::lock_guard lock(state_mutex);
                if (summary.aborted_models.contains(cell.model_id)) {
                    continue;
                }
            }
            const auto& prepared = datasets.at(cell.dataset_id);
            const auto& endpoints = registry.at(cell.model_id);
            try {
                const auto prompt = prompt::build_prompt(cell, prepared.dataset, prepared.split, query);
                const auto key = cache_key(prompt.full_text, endpoints.params.model_id, endpoints.params);

                gateway::PredictionRecord record;
                bool from_cache = false;
                if (auto hit = cache.lookup(key)) {
                    if (manifest.paranoid && hit->prompt_text && *hit->prompt_text != prompt.full_text) {
                        throw Error(fmt::format("cache entry {} holds a different prompt than {} query {}", key,
                                                cell.id(), query));
                    }
                    record.cell = cell;
                    record.query_index = query;
                    record.ground_truth = prompt.provenance.query_target;
                    record.cache_key = key;
                    record.raw_text = hit->raw_text;
                    record.parsed_value = hit->parsed_value;
                    record.attempts = hit->attempts;
                    record.seeds = hit->seeds;
                    from_cache = true;
                } else {
                    auto& endpoint = *guarded.at(cell.model_id).at(cell.config.kind);
                    record = gateway::query_with_retry(prompt, endpoints.params, manifest.policy, endpoint,
                                                       manifest.backoff);
                    if (record.parsed_value) {
                        cache.insert({key, record.raw_text, *record.parsed_value, record.attempts, record.seeds,
                                      manifest.paranoid ? std::optional<std::string>(prompt.full_text)
                                                        : std::nullopt});
                    }
                }
                if (manifest.paranoid) {
                    record.prompt_text = prompt.full_text;
                }
                store.append(record);

                std::lock_guard lock(state_mutex);
                auto& tally = summary.cells[cell.id()];
                ++tally.written;
                ++summary.records_written;
                if (from_cache) {
                    ++tally.cache_hits;
                    ++summary.cache_hits;
                }
                if (!record.parsed_value) {
                    ++tally.failed;
                    ++summary.failed_records;
                }
            } catch (const BudgetExhausted&) {
                if (!paused.exchange(true)) {
                    spdlog::warn("call budget of {} reached; pausing run", manifest.max_calls.value_or(0));
                }
                return;
            } catch (const ConfigurationError& e) {
                std::lock_guard lock(state_mutex);
                if (summary.aborted_models.emplace(cell.model_id, e.what()).second) {
                    spdlog::error("aborting model '{}': {}", cell.model_id, e.what());
                }
            } catch (const TransportError& e) {
                std::lock_guard lock(state_mutex);
                if (summary.aborted_models.emplace(cell.model_id, e.what()).second) {
                    spdlog::error("aborting model '{}' after transport failures: {}", cell.model_id, e.what());
                }
            }
            const auto done = finished.fetch_add(1) + 1;
            if (done % progress_step == 0) {
                spdlog::info("progress: {}/{} queries", done, tasks.size());
            }
        }
    };

    const auto n_workers = static_cast<std::size_t>(std::max(1, manifest.concurrency.workers));
    if (n_workers == 1 || tasks.size() <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < std::min(n_workers, tasks.size()); ++i) {
            pool.emplace_back(worker);
        }
    }

    summary.endpoint_calls = calls.load();
    summary.paused_by_budget = paused.load();
    for (const auto& [id, tally] : summary.cells) {
        spdlog::debug("cell {}: {} new, {} failed, {} cached, {} already done", id, tally.written, tally.failed,
                      tally.cache_hits, tally.already_done);
        if (tally.failed > 0) {
            spdlog::warn("cell {}: {} of {} queries produced no number", id, tally.failed, tally.queries);
        }
    }
    spdlog::info("run finished: {} records written, {} endpoint calls, {} cache hits, {} failed{}",
                 summary.records_written, summary.endpoint_calls, summary.cache_hits, summary.failed_records,
                 summary.paused_by_budget ? " (paused by budget)" : "");
    return summary;
}

} // namespace iclbench::orchestrator
