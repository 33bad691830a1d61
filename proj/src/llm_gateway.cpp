#include "iclbench/llm_gateway.hpp"

#include "iclbench/cache_key.hpp"
#include "iclbench/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <charconv>
#include <fmt/format.h>
#include <fstream>
#include <spdlog/spdlog.h>
#include <thread>

namespace iclbench::gateway {

ModelParams ModelParams::defaults_for(std::string model_id)
{
    ModelParams params;
    std::string lowered = model_id;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lowered.find("llama") != std::string::npos) {
        params.max_tokens = 6;
        params.top_p = 0.99;
    }
    params.model_id = std::move(model_id);
    return params;
}

nlohmann::json ChatRequest::to_json() const
{
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages) {
        msgs.push_back({{"role", m.role}, {"content", m.content}});
    }
    nlohmann::json body{{"model", model},
                        {"messages", std::move(msgs)},
                        {"temperature", temperature},
                        {"max_tokens", max_tokens},
                        {"seed", seed}};
    if (top_p) {
        body["top_p"] = *top_p;
    }
    return body;
}

ChatRequest make_request(const prompt::Prompt& prompt, const ModelParams& params)
{
    return {params.model_id, {{"user", prompt.full_text}}, params.temperature, params.max_tokens, params.top_p,
            params.seed};
}

std::string complete(const prompt::Prompt& prompt, const ModelParams& params, Responder& endpoint,
                     const BackoffPolicy& backoff)
{
    const auto request = make_request(prompt, params);
    auto delay = backoff.initial_delay;
    for (int retry = 0;; ++retry) {
        try {
            return endpoint.respond(request);
        } catch (const TransportError& e) {
            if (retry >= backoff.max_retries) {
                throw;
            }
            const bool limited = dynamic_cast<const RateLimitError*>(&e) != nullptr;
            spdlog::warn("{} from endpoint for model '{}' (retry {}/{}), backing off {} ms: {}",
                         limited ? "rate limit" : "transport failure", params.model_id, retry + 1,
                         backoff.max_retries, delay.count(), e.what());
            if (backoff.sleep) {
                backoff.sleep(delay);
            } else {
                std::this_thread::sleep_for(delay);
            }
            const auto next = std::chrono::duration<double, std::milli>(delay) * backoff.factor;
            delay = std::min(backoff.max_delay, std::chrono::duration_cast<std::chrono::milliseconds>(next));
        }
    }
}

namespace {

bool is_digit(char c)
{
    return c >= '0' && c <= '9';
}

bool is_word(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

// Length of a digit run starting at i.
std::size_t digits_at(std::string_view s, std::size_t i)
{
    std::size_t n = 0;
    while (i + n < s.size() && is_digit(s[i + n])) {
        ++n;
    }
    return n;
}

} // namespace

std::optional<double> parse_numeric(std::string_view raw)
{
    std::optional<double> last;
    std::size_t i = 0;
    while (i < raw.size()) {
        const bool starts_number = is_digit(raw[i]) || (raw[i] == '.' && i + 1 < raw.size() && is_digit(raw[i + 1]));
        if (!starts_number) {
            ++i;
            continue;
        }
        if (i > 0 && is_word(raw[i - 1])) {
            // Digits glued to a word ("GPT4", "x2") are not answers.
            while (i < raw.size() && is_word(raw[i])) {
                ++i;
            }
            continue;
        }
        std::string token;
        std::size_t j = i;
        if (j > 0 && raw[j - 1] == '-' && (j < 2 || !is_word(raw[j - 2]))) {
            token.push_back('-');
        }
        // Integer part, with comma thousands separators in groups of three.
        const auto lead = digits_at(raw, j);
        token.append(raw.substr(j, lead));
        j += lead;
        while (lead > 0 && lead <= 3 && j + 4 <= raw.size() && raw[j] == ',' && digits_at(raw, j + 1) == 3) {
            token.append(raw.substr(j + 1, 3));
            j += 4;
        }
        if (j + 1 < raw.size() && raw[j] == '.' && is_digit(raw[j + 1])) {
            const auto frac = digits_at(raw, j + 1);
            token.append(raw.substr(j, frac + 1));
            j += frac + 1;
        }
        if (j + 1 < raw.size() && (raw[j] == 'e' || raw[j] == 'E')) {
            std::size_t e = j + 1;
            if (e < raw.size() && (raw[e] == '+' || raw[e] == '-')) {
                ++e;
            }
            const auto exp_digits = digits_at(raw, e);
            if (exp_digits > 0 && (e + exp_digits == raw.size() || !is_word(raw[e + exp_digits]))) {
                token.append(raw.substr(j, e + exp_digits - j));
                j = e + exp_digits;
            }
        }
        double value = 0.0;
        const auto* first = token.data();
        if (!token.empty() && token.front() == '.') {
            token.insert(token.begin(), '0');
            first = token.data();
        }
        if (token.size() > 1 && token[0] == '-' && token[1] == '.') {
            token.insert(token.begin() + 1, '0');
            first = token.data();
        }
        const auto res = std::from_chars(first, token.data() + token.size(), value);
        if (res.ec == std::errc{} && std::isfinite(value)) {
            last = value;
        }
        i = j;
    }
    return last;
}

nlohmann::json record_to_json(const PredictionRecord& record)
{
    nlohmann::json doc{{"schema_version", kRecordSchemaVersion},
                       {"cell_id", record.cell_id()},
                       {"cell", cell_to_json(record.cell)},
                       {"query_index", record.query_index},
                       {"raw_text", record.raw_text},
                       {"parsed_value", record.parsed_value ? nlohmann::json(*record.parsed_value) : nlohmann::json()},
                       {"attempts", record.attempts},
                       {"seeds", record.seeds},
                       {"cache_key", record.cache_key},
                       {"ground_truth", record.ground_truth}};
    if (record.prompt_text) {
        doc["prompt_text"] = *record.prompt_text;
    }
    return doc;
}

PredictionRecord record_from_json(const nlohmann::json& doc)
{
    try {
        const auto version = doc.at("schema_version").get<int>();
        if (version != kRecordSchemaVersion) {
            throw SchemaError(fmt::format("unsupported record schema_version {}", version));
        }
        PredictionRecord r;
        r.cell = cell_from_json(doc.at("cell"));
        r.query_index = doc.at("query_index").get<std::size_t>();
        r.raw_text = doc.at("raw_text").get<std::string>();
        if (const auto& v = doc.at("parsed_value"); !v.is_null()) {
            r.parsed_value = v.get<double>();
        }
        r.attempts = doc.at("attempts").get<int>();
        r.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
        r.cache_key = doc.at("cache_key").get<std::string>();
        r.ground_truth = doc.at("ground_truth").get<double>();
        if (auto it = doc.find("prompt_text"); it != doc.end()) {
            r.prompt_text = it->get<std::string>();
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(fmt::format("malformed prediction record: {}", e.what()));
    }
}

PredictionRecord query_with_retry(const prompt::Prompt& prompt, const ModelParams& params, const RetryPolicy& policy,
                                  Responder& endpoint, const BackoffPolicy& backoff)
{
    if (policy.max_attempts < 1) {
        throw ValidationError("retry policy needs at least one attempt");
    }
    PredictionRecord record;
    record.cell = prompt.provenance.cell;
    record.query_index = prompt.provenance.query_position;
    record.ground_truth = prompt.provenance.query_target;
    record.cache_key = orchestrator::cache_key(prompt.full_text, params.model_id, params);

    auto attempt_params = params;
    for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
        attempt_params.seed = policy.initial_seed + static_cast<std::uint64_t>(attempt - 1);
        record.seeds.push_back(attempt_params.seed);
        record.attempts = attempt;
        record.raw_text = complete(prompt, attempt_params, endpoint, backoff);
        if (auto value = parse_numeric(record.raw_text)) {
            record.parsed_value = value;
            return record;
        }
        spdlog::debug("no number in answer for {} query {} (attempt {}): '{}'", record.cell_id(), record.query_index,
                      attempt, record.raw_text);
    }
    return record;
}

ThrottledResponder::ThrottledResponder(ResponderPtr inner, int max_in_flight, std::chrono::milliseconds min_interval)
    : inner_(std::move(inner)), max_in_flight_(std::max(1, max_in_flight)), min_interval_(min_interval)
{
}

std::string ThrottledResponder::respond(const ChatRequest& request)
{
    {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
        ++in_flight_;
        if (min_interval_.count() > 0) {
            const auto now = std::chrono::steady_clock::now();
            const auto start = std::max(now, next_start_);
            next_start_ = start + min_interval_;
            lock.unlock();
            std::this_thread::sleep_until(start);
        }
    }
    struct Release {
        ThrottledResponder& self;
        ~Release()
        {
            {
                std::lock_guard lock(self.mutex_);
                --self.in_flight_;
            }
            self.cv_.notify_one();
        }
    } release{*this};
    return inner_->respond(request);
}

TranscriptResponder::TranscriptResponder(ResponderPtr inner, std::string path)
    : inner_(std::move(inner)), path_(std::move(path))
{
}

std::string TranscriptResponder::respond(const ChatRequest& request)
{
    nlohmann::json line{{"request", request.to_json()}};
    try {
        auto text = inner_->respond(request);
        line["response"] = text;
        std::lock_guard lock(mutex_);
        std::ofstream(path_, std::ios::app) << line.dump() << '\n';
        return text;
    } catch (const std::exception& e) {
        line["error"] = e.what();
        std::lock_guard lock(mutex_);
        std::ofstream(path_, std::ios::app) << line.dump() << '\n';
        throw;
    }
}

} // namespace iclbench::gateway
