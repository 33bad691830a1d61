#pragma once

#include "iclbench/llm_gateway.hpp"

#include <chrono>
#include <string>

namespace iclbench::gateway {

/// Client for any OpenAI-compatible chat-completions endpoint.
///
/// `base_url` includes the API prefix, e.g. "https://api.openai.com/v1" or
/// "http://localhost:8000/v1"; requests go to base_url + "/chat/completions".
/// Status mapping: 2xx -> assistant text, 429 -> RateLimitError,
/// other 4xx -> ConfigurationError, 5xx and connection failures -> TransportError.
class OpenAICompatibleResponder final : public Responder {
public:
    struct Config {
        std::string base_url = "https://api.openai.com/v1";
        std::string api_key; // omitted from the request when empty
        std::chrono::seconds timeout{60};
    };

    /// Reads ICLBENCH_BASE_URL / ICLBENCH_API_KEY, falling back to
    /// OPENAI_BASE_URL / OPENAI_API_KEY.
    static Config config_from_env();

    explicit OpenAICompatibleResponder(Config config);
    std::string respond(const ChatRequest& request) override;

private:
    Config config_;
    std::string scheme_host_port_;
    std::string path_;
};

} // namespace iclbench::gateway
