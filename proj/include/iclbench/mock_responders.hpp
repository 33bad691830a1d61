#pragma once

#include "iclbench/llm_gateway.hpp"

#include <atomic>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace iclbench::gateway {

/// Answers w.x + b from the query's feature values, ignoring the examples.
/// Uses the first min(|w|, k) features. Models pure knowledge retrieval.
class LinearOracleResponder final : public Responder {
public:
    LinearOracleResponder(std::vector<double> weights, double bias);
    std::string respond(const ChatRequest& request) override;

private:
    std::vector<double> weights_;
    double bias_;
};

/// Fits ridge regression on the example lines of the prompt and predicts the
/// query. Models pure learning from the context.
class IclRidgeResponder final : public Responder {
public:
    explicit IclRidgeResponder(double alpha);
    std::string respond(const ChatRequest& request) override;

private:
    double alpha_;
};

/// Answers the mean of the example targets shown in the prompt.
class EchoMeanResponder final : public Responder {
public:
    std::string respond(const ChatRequest& request) override;
};

/// Refuses the first n requests for each distinct prompt text, then delegates.
class RefuserResponder final : public Responder {
public:
    static constexpr const char* kRefusal = "I'm sorry, but the data is insufficient to make an estimate.";

    RefuserResponder(int refusals, ResponderPtr delegate);
    std::string respond(const ChatRequest& request) override;

private:
    int refusals_;
    ResponderPtr delegate_;
    std::mutex mutex_;
    std::map<std::string, int> seen_;
};

/// Replays a fixed script and records every request it receives.
class ScriptedResponder final : public Responder {
public:
    struct Step {
        enum class Kind { Text, RateLimit, TransportFailure, HttpError };
        Kind kind = Kind::Text;
        std::string text;
        int status = 200;

        static Step reply(std::string text) { return {Kind::Text, std::move(text), 200}; }
        static Step rate_limit() { return {Kind::RateLimit, {}, 429}; }
        static Step transport_failure() { return {Kind::TransportFailure, {}, 0}; }
        static Step http_error(int status) { return {Kind::HttpError, {}, status}; }
    };

    explicit ScriptedResponder(std::vector<Step> steps);
    std::string respond(const ChatRequest& request) override;

    std::vector<ChatRequest> transcript() const;

private:
    std::vector<Step> steps_;
    mutable std::mutex mutex_;
    std::size_t next_ = 0;
    std::vector<ChatRequest> transcript_;
};

/// Counts calls passing through to an inner responder.
class CountingResponder final : public Responder {
public:
    explicit CountingResponder(ResponderPtr inner);
    std::string respond(const ChatRequest& request) override;
    std::size_t calls() const { return calls_.load(); }

private:
    ResponderPtr inner_;
    std::atomic<std::size_t> calls_{0};
};

/// Builds a mock from its JSON description:
///   {"mock": "linear_oracle", "w": [...], "b": 0}
///   {"mock": "icl_ridge", "alpha": 1}
///   {"mock": "echo_mean"}
///   {"mock": "refuser", "n": 3, "then": {...}}
///   {"mock": "scripted", "replies": ["42", ...]}
ResponderPtr register_mock(const nlohmann::json& spec);

} // namespace iclbench::gateway
