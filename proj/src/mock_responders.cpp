#include "iclbench/mock_responders.hpp"

#include "iclbench/baseline_models.hpp"
#include "iclbench/errors.hpp"
#include "iclbench/numeric_format.hpp"

#include <fmt/format.h>
#include <numeric>

namespace iclbench::gateway {

namespace {

prompt::ParsedPrompt parse_or_throw(const ChatRequest& request)
{
    try {
        return prompt::parse_rendered_prompt(request.prompt_text());
    } catch (const ParseError& e) {
        throw MockError(fmt::format("mock cannot read prompt: {}", e.what()));
    }
}

} // namespace

LinearOracleResponder::LinearOracleResponder(std::vector<double> weights, double bias)
    : weights_(std::move(weights)), bias_(bias)
{
}

std::string LinearOracleResponder::respond(const ChatRequest& request)
{
    const auto parsed = parse_or_throw(request);
    double y = bias_;
    const auto n = std::min(weights_.size(), parsed.query_features.size());
    for (std::size_t i = 0; i < n; ++i) {
        y += weights_[i] * parsed.query_features[i];
    }
    return format_shortest(y);
}

IclRidgeResponder::IclRidgeResponder(double alpha) : alpha_(alpha) {}

std::string IclRidgeResponder::respond(const ChatRequest& request)
{
    const auto parsed = parse_or_throw(request);
    if (parsed.example_targets.empty()) {
        throw MockError("icl_ridge mock needs in-context examples; prompt has none");
    }
    const auto model = models::fit_ridge(parsed.example_features, parsed.example_targets, alpha_);
    return format_shortest(models::predict(model, parsed.query_features));
}

std::string EchoMeanResponder::respond(const ChatRequest& request)
{
    const auto parsed = parse_or_throw(request);
    if (parsed.example_targets.empty()) {
        throw MockError("echo_mean mock needs in-context examples; prompt has none");
    }
    const double sum = std::accumulate(parsed.example_targets.begin(), parsed.example_targets.end(), 0.0);
    return format_shortest(sum / static_cast<double>(parsed.example_targets.size()));
}

RefuserResponder::RefuserResponder(int refusals, ResponderPtr delegate)
    : refusals_(refusals), delegate_(std::move(delegate))
{
}

std::string RefuserResponder::respond(const ChatRequest& request)
{
    {
        std::lock_guard lock(mutex_);
        auto& count = seen_[request.prompt_text()];
        if (count < refusals_) {
            ++count;
            return kRefusal;
        }
    }
    return delegate_->respond(request);
}

ScriptedResponder::ScriptedResponder(std::vector<Step> steps) : steps_(std::move(steps)) {}

std::string ScriptedResponder::respond(const ChatRequest& request)
{
    Step step;
    {
        std::lock_guard lock(mutex_);
        transcript_.push_back(request);
        if (next_ >= steps_.size()) {
            throw MockError(fmt::format("scripted mock exhausted after {} replies", steps_.size()));
        }
        step = steps_[next_++];
    }
    switch (step.kind) {
    case Step::Kind::Text:
        return step.text;
    case Step::Kind::RateLimit:
        throw RateLimitError("HTTP 429: rate limited (scripted)");
    case Step::Kind::TransportFailure:
        throw TransportError("connection refused (scripted)");
    case Step::Kind::HttpError:
        if (step.status >= 500) {
            throw TransportError(fmt::format("HTTP {} (scripted)", step.status));
        }
        throw ConfigurationError(fmt::format("HTTP {} (scripted)", step.status));
    }
    return {};
}

std::vector<ChatRequest> ScriptedResponder::transcript() const
{
    std::lock_guard lock(mutex_);
    return transcript_;
}

CountingResponder::CountingResponder(ResponderPtr inner) : inner_(std::move(inner)) {}

std::string CountingResponder::respond(const ChatRequest& request)
{
    ++calls_;
    return inner_->respond(request);
}

ResponderPtr register_mock(const nlohmann::json& spec)
{
    try {
        const auto kind = spec.at("mock").get<std::string>();
        if (kind == "linear_oracle") {
            return std::make_shared<LinearOracleResponder>(spec.at("w").get<std::vector<double>>(),
                                                           spec.value("b", 0.0));
        }
        if (kind == "icl_ridge") {
            const double alpha = spec.value("alpha", 1.0);
            if (!(alpha >= 0.0)) {
                throw SchemaError("icl_ridge alpha must be non-negative");
            }
            return std::make_shared<IclRidgeResponder>(alpha);
        }
        if (kind == "echo_mean") {
            return std::make_shared<EchoMeanResponder>();
        }
        if (kind == "refuser") {
            const int n = spec.at("n").get<int>();
            if (n < 0) {
                throw SchemaError("refuser n must be non-negative");
            }
            return std::make_shared<RefuserResponder>(n, register_mock(spec.at("then")));
        }
        if (kind == "scripted") {
            std::vector<ScriptedResponder::Step> steps;
            for (const auto& reply : spec.at("replies")) {
                steps.push_back(ScriptedResponder::Step::reply(reply.get<std::string>()));
            }
            return std::make_shared<ScriptedResponder>(std::move(steps));
        }
        throw SchemaError(fmt::format("unknown mock kind '{}'", kind));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(fmt::format("malformed mock spec {}: {}", spec.dump(), e.what()));
    }
}

} // namespace iclbench::gateway
