#include "iclbench/cache_key.hpp"

#include "iclbench/digest.hpp"

#include <nlohmann/json.hpp>

namespace iclbench::orchestrator {

std::string cache_key(std::string_view prompt_text, std::string_view model_id, const gateway::ModelParams& params)
{
    nlohmann::json canonical{
        {"max_tokens", params.max_tokens},
        {"model", model_id},
        {"prompt", prompt_text},
        {"temperature", params.temperature},
        {"top_p", params.top_p ? nlohmann::json(*params.top_p) : nlohmann::json(nullptr)},
    };
    return sha256_hex(canonical.dump());
}

} // namespace iclbench::orchestrator
