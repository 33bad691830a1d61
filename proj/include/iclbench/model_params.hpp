#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace iclbench::gateway {

/// Sampling parameters sent with every request.
struct ModelParams {
    std::string model_id;
    double temperature = 0.1;
    int max_tokens = 10;
    std::optional<double> top_p;
    std::uint64_t seed = 100;

    /// GPT-family defaults (temperature 0.1, 10 tokens). Model ids containing
    /// "llama" (any case) get 6 tokens and top_p 0.99.
    static ModelParams defaults_for(std::string model_id);
};

/// Seed ladder: attempt i (1-based) uses seed initial_seed + i - 1.
struct RetryPolicy {
    std::uint64_t initial_seed = 100;
    int max_attempts = 10;
};

} // namespace iclbench::gateway
