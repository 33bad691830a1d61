#pragma once

#include "iclbench/model_params.hpp"

#include <string>
#include <string_view>

namespace iclbench::orchestrator {

/// SHA-256 over the canonical JSON {"max_tokens","model","prompt","temperature","top_p"}
/// (keys sorted, numbers in shortest round-trip form). The sampling seed is
/// deliberately left out so retries of one query share a key.
std::string cache_key(std::string_view prompt_text, std::string_view model_id, const gateway::ModelParams& params);

} // namespace iclbench::orchestrator
