#pragma once

#include "iclbench/cell.hpp"
#include "iclbench/model_params.hpp"
#include "iclbench/prompt_builder.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace iclbench::gateway {

struct ChatMessage {
    std::string role;
    std::string content;
};

/// One chat-completions request. Serializes to the OpenAI wire format.
struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.1;
    int max_tokens = 10;
    std::optional<double> top_p;
    std::uint64_t seed = 100;

    nlohmann::json to_json() const;
    const std::string& prompt_text() const { return messages.back().content; }
};

/// Anything that turns a chat request into assistant text: an HTTP client or an
/// in-process mock. Implementations must tolerate concurrent calls.
///
/// Failures are reported by throwing TransportError / RateLimitError
/// (retryable) or ConfigurationError (terminal).
class Responder {
public:
    virtual ~Responder() = default;
    virtual std::string respond(const ChatRequest& request) = 0;
};

using ResponderPtr = std::shared_ptr<Responder>;

/// Exponential backoff applied to retryable transport failures inside complete().
struct BackoffPolicy {
    int max_retries = 5;
    std::chrono::milliseconds initial_delay{500};
    double factor = 2.0;
    std::chrono::milliseconds max_delay{30000};
    /// Replaced in tests to record delays instead of sleeping.
    std::function<void(std::chrono::milliseconds)> sleep;
};

/// Prompt is sent as a single user message.
ChatRequest make_request(const prompt::Prompt& prompt, const ModelParams& params);

/// Sends the prompt and returns the assistant text verbatim. Transport
/// failures and rate limits are retried with exponential backoff up to
/// backoff.max_retries times before the last error is rethrown.
std::string complete(const prompt::Prompt& prompt, const ModelParams& params, Responder& endpoint,
                     const BackoffPolicy& backoff = {});

/// Last numeric token in `raw`, ignoring currency symbols, thousands
/// separators, and sentence-final periods. nullopt when there is none.
std::optional<double> parse_numeric(std::string_view raw);

struct PredictionRecord {
    FactorCell cell;
    std::size_t query_index = 0; // position in the test split
    std::string raw_text;
    std::optional<double> parsed_value;
    int attempts = 0;
    std::vector<std::uint64_t> seeds; // one per attempt, in order
    std::string cache_key;
    double ground_truth = 0.0;
    std::optional<std::string> prompt_text; // stored only in paranoid runs

    std::string cell_id() const { return cell.id(); }
    bool scored() const { return parsed_value.has_value(); }
};

inline constexpr int kRecordSchemaVersion = 1;

nlohmann::json record_to_json(const PredictionRecord& record);
PredictionRecord record_from_json(const nlohmann::json& doc);

/// Runs complete + parse_numeric, bumping the seed each time the answer holds no
/// number. After policy.max_attempts the record is returned without a parsed
/// value. ConfigurationError and exhausted TransportError propagate.
PredictionRecord query_with_retry(const prompt::Prompt& prompt, const ModelParams& params, const RetryPolicy& policy,
                                  Responder& endpoint, const BackoffPolicy& backoff = {});

/// Caps concurrent requests to an endpoint and spaces request starts by a
/// minimum interval (0 disables the rate limit).
class ThrottledResponder final : public Responder {
public:
    ThrottledResponder(ResponderPtr inner, int max_in_flight, std::chrono::milliseconds min_interval);
    std::string respond(const ChatRequest& request) override;

private:
    ResponderPtr inner_;
    int max_in_flight_;
    std::chrono::milliseconds min_interval_;
    std::mutex mutex_;
    std::condition_variable cv_;
    int in_flight_ = 0;
    std::chrono::steady_clock::time_point next_start_{};
};

/// Appends one JSON line per request/response (or error) to a transcript file.
class TranscriptResponder final : public Responder {
public:
    TranscriptResponder(ResponderPtr inner, std::string path);
    std::string respond(const ChatRequest& request) override;

private:
    ResponderPtr inner_;
    std::string path_;
    std::mutex mutex_;
};

} // namespace iclbench::gateway
