#include "iclbench/result_store.hpp"

#include "iclbench/errors.hpp"

#include <fmt/format.h>
#include <fstream>
#include <spdlog/spdlog.h>
#include <sstream>

namespace iclbench::orchestrator {

namespace {

// Reads complete lines of a JSONL file. A final line without a newline is a
// torn write: it is dropped and the file truncated to the last full line.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path, bool repair)
{
    std::vector<nlohmann::json> out;
    if (!std::filesystem::exists(path)) {
        return out;
    }
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    const auto text = buf.str();

    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < text.size()) {
        const auto end = text.find('\n', start);
        if (end == std::string::npos) {
            spdlog::warn("{}: dropping incomplete final line", path.string());
            if (repair) {
                std::filesystem::resize_file(path, start);
            }
            break;
        }
        ++line_no;
        const auto line = std::string_view(text).substr(start, end - start);
        if (!line.empty()) {
            try {
                out.push_back(nlohmann::json::parse(line));
            } catch (const nlohmann::json::exception& e) {
                throw SchemaError(fmt::format("{}:{}: invalid JSON: {}", path.string(), line_no, e.what()));
            }
        }
        start = end + 1;
    }
    return out;
}

void append_line(const std::filesystem::path& path, const nlohmann::json& doc)
{
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) {
        throw Error(fmt::format("cannot append to '{}'", path.string()));
    }
    out << doc.dump() << '\n';
    out.flush();
}

} // namespace

ResultStore ResultStore::open(const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    ResultStore store(dir / kFileName);
    if (!std::filesystem::exists(store.path_)) {
        std::ofstream(store.path_, std::ios::app);
    }
    for (const auto& doc : read_jsonl(store.path_, true)) {
        store.index(gateway::record_from_json(doc));
    }
    return store;
}

std::vector<gateway::PredictionRecord> ResultStore::read(const std::filesystem::path& dir)
{
    const auto path = dir / kFileName;
    if (!std::filesystem::exists(path)) {
        throw SchemaError(fmt::format("no result store at '{}'", path.string()));
    }
    std::vector<gateway::PredictionRecord> out;
    for (const auto& doc : read_jsonl(path, false)) {
        out.push_back(gateway::record_from_json(doc));
    }
    return out;
}

ResultStore::ResultStore(ResultStore&& other) noexcept
    : path_(std::move(other.path_)), records_(std::move(other.records_)), done_(std::move(other.done_)),
      by_key_(std::move(other.by_key_))
{
}

void ResultStore::index(const gateway::PredictionRecord& record)
{
    if (!done_.emplace(record.cell_id(), record.query_index).second) {
        spdlog::warn("duplicate record for {} query {} ignored", record.cell_id(), record.query_index);
        return;
    }
    by_key_.emplace(record.cache_key, records_.size());
    records_.push_back(record);
}

bool ResultStore::contains(const std::string& cell_id, std::size_t query_index) const
{
    std::lock_guard lock(mutex_);
    return done_.contains({cell_id, query_index});
}

std::optional<gateway::PredictionRecord> ResultStore::find_by_cache_key(const std::string& key) const
{
    std::lock_guard lock(mutex_);
    if (auto it = by_key_.find(key); it != by_key_.end()) {
        return records_[it->second];
    }
    return std::nullopt;
}

void ResultStore::append(const gateway::PredictionRecord& record)
{
    std::lock_guard lock(mutex_);
    if (done_.contains({record.cell_id(), record.query_index})) {
        return;
    }
    append_line(path_, gateway::record_to_json(record));
    index(record);
}

std::vector<gateway::PredictionRecord> ResultStore::records() const
{
    std::lock_guard lock(mutex_);
    return records_;
}

std::size_t ResultStore::size() const
{
    std::lock_guard lock(mutex_);
    return records_.size();
}

ResponseCache ResponseCache::open(const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    ResponseCache cache(dir / kFileName);
    for (const auto& doc : read_jsonl(cache.path_, true)) {
        try {
            CachedResponse entry;
            entry.cache_key = doc.at("cache_key").get<std::string>();
            entry.raw_text = doc.at("raw_text").get<std::string>();
            entry.parsed_value = doc.at("parsed_value").get<double>();
            entry.attempts = doc.at("attempts").get<int>();
            entry.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
            if (auto it = doc.find("prompt_text"); it != doc.end()) {
                entry.prompt_text = it->get<std::string>();
            }
            cache.entries_.emplace(entry.cache_key, std::move(entry));
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(fmt::format("{}: malformed cache entry: {}", cache.path_.string(), e.what()));
        }
    }
    return cache;
}

ResponseCache::ResponseCache(ResponseCache&& other) noexcept
    : path_(std::move(other.path_)), entries_(std::move(other.entries_))
{
}

std::optional<CachedResponse> ResponseCache::lookup(const std::string& key) const
{
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) {
        return it->second;
    }
    return std::nullopt;
}

void ResponseCache::insert(const CachedResponse& entry)
{
    std::lock_guard lock(mutex_);
    if (entries_.contains(entry.cache_key)) {
        return;
    }
    nlohmann::json doc{{"cache_key", entry.cache_key},
                       {"raw_text", entry.raw_text},
                       {"parsed_value", entry.parsed_value},
                       {"attempts", entry.attempts},
                       {"seeds", entry.seeds}};
    if (entry.prompt_text) {
        doc["prompt_text"] = *entry.prompt_text;
    }
    append_line(path_, doc);
    entries_.emplace(entry.cache_key, entry);
}

std::size_t ResponseCache::size() const
{
    std::lock_guard lock(mutex_);
    return entries_.size();
}

} // namespace iclbench::orchestrator
