#include "iclbench/openai_responder.hpp"

#include "iclbench/errors.hpp"

#include <cstdlib>
#include <fmt/format.h>
#include <httplib.h>

namespace iclbench::gateway {

namespace {

std::string env_or(const char* primary, const char* fallback, std::string def)
{
    if (const char* v = std::getenv(primary); v != nullptr && *v != '\0') {
        return v;
    }
    if (const char* v = std::getenv(fallback); v != nullptr && *v != '\0') {
        return v;
    }
    return def;
}

} // namespace

OpenAICompatibleResponder::Config OpenAICompatibleResponder::config_from_env()
{
    Config config;
    config.base_url = env_or("ICLBENCH_BASE_URL", "OPENAI_BASE_URL", config.base_url);
    config.api_key = env_or("ICLBENCH_API_KEY", "OPENAI_API_KEY", {});
    return config;
}

OpenAICompatibleResponder::OpenAICompatibleResponder(Config config) : config_(std::move(config))
{
    const auto scheme_end = config_.base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigurationError(fmt::format("base URL '{}' has no scheme", config_.base_url));
    }
    const auto path_start = config_.base_url.find('/', scheme_end + 3);
    scheme_host_port_ = config_.base_url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? std::string{} : config_.base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') {
        prefix.pop_back();
    }
    path_ = prefix + "/chat/completions";
}

std::string OpenAICompatibleResponder::respond(const ChatRequest& request)
{
    httplib::Client client(scheme_host_port_);
    if (!client.is_valid()) {
        throw ConfigurationError(fmt::format("cannot build HTTP client for '{}'", scheme_host_port_));
    }
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);

    httplib::Headers headers;
    if (!config_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.api_key);
    }
    const auto result = client.Post(path_, headers, request.to_json().dump(), "application/json");
    if (!result) {
        throw TransportError(fmt::format("request to {}{} failed: {}", scheme_host_port_, path_,
                                         httplib::to_string(result.error())));
    }
    const auto status = result->status;
    if (status == 429) {
        throw RateLimitError(fmt::format("HTTP 429 from {}: {}", scheme_host_port_, result->body));
    }
    if (status >= 500) {
        throw TransportError(fmt::format("HTTP {} from {}: {}", status, scheme_host_port_, result->body));
    }
    if (status >= 400) {
        throw ConfigurationError(fmt::format("HTTP {} from {}: {}", status, scheme_host_port_, result->body));
    }
    try {
        const auto body = nlohmann::json::parse(result->body);
        const auto& content = body.at("choices").at(0).at("message").at("content");
        return content.is_null() ? std::string{} : content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(fmt::format("unreadable completion body from {}: {}", scheme_host_port_, e.what()));
    }
}

} // namespace iclbench::gateway
