#pragma once

#include "iclbench/llm_gateway.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace iclbench::orchestrator {

/// Append-only JSONL of PredictionRecords (one per line, schema-versioned),
/// indexed by (cell id, query index) and by cache key. Appends are serialized
/// and flushed line by line, so a crash loses at most the line being written;
/// a torn final line is dropped when the store is reopened.
class ResultStore {
public:
    static constexpr const char* kFileName = "results.jsonl";

    /// Opens (creating if needed) `dir`/results.jsonl and loads existing records.
    static ResultStore open(const std::filesystem::path& dir);

    /// Loads a store read-only; throws SchemaError when the file is missing.
    static std::vector<gateway::PredictionRecord> read(const std::filesystem::path& dir);

    ResultStore(ResultStore&& other) noexcept;

    bool contains(const std::string& cell_id, std::size_t query_index) const;
    std::optional<gateway::PredictionRecord> find_by_cache_key(const std::string& key) const;
    void append(const gateway::PredictionRecord& record);

    std::vector<gateway::PredictionRecord> records() const;
    std::size_t size() const;
    const std::filesystem::path& path() const { return path_; }

private:
    explicit ResultStore(std::filesystem::path path) : path_(std::move(path)) {}
    void index(const gateway::PredictionRecord& record);

    std::filesystem::path path_;
    mutable std::mutex mutex_;
    std::vector<gateway::PredictionRecord> records_;
    std::set<std::pair<std::string, std::size_t>> done_;
    std::map<std::string, std::size_t> by_key_;
};

/// A response stored under its cache key, shared across runs.
struct CachedResponse {
    std::string cache_key;
    std::string raw_text;
    double parsed_value = 0.0;
    int attempts = 0;
    std::vector<std::uint64_t> seeds;
    std::optional<std::string> prompt_text;
};

/// Content-addressed response cache at `dir`/responses.jsonl. Only responses
/// that yielded a number are cached. Reads may run concurrently; writes are
/// serialized.
class ResponseCache {
public:
    static constexpr const char* kFileName = "responses.jsonl";

    static ResponseCache open(const std::filesystem::path& dir);
    ResponseCache(ResponseCache&& other) noexcept;

    std::optional<CachedResponse> lookup(const std::string& key) const;
    void insert(const CachedResponse& entry);
    std::size_t size() const;

private:
    explicit ResponseCache(std::filesystem::path path) : path_(std::move(path)) {}

    std::filesystem::path path_;
    mutable std::mutex mutex_;
    std::map<std::string, CachedResponse> entries_;
};

} // namespace iclbench::orchestrator
