#include "iclbench/errors.hpp"
#include "iclbench/mock_responders.hpp"
#include "iclbench/numeric_format.hpp"
#include "iclbench/orchestrator.hpp"

#include "golden.hpp"
#include "test_support.hpp"

#include <atomic>
#include <cmath>
#include <doctest.h>
#include <fstream>
#include <thread>

using namespace iclbench;
using namespace iclbench::gateway;
using namespace std::chrono_literals;

namespace {

const golden::Fixture& fixture()
{
    static const auto f = golden::load_fixture(testing::synthetic_csv());
    return f;
}

prompt::Prompt sample_prompt(PromptKind kind = PromptKind::NamedFeatures, int m = 10, int k = 2, std::size_t q = 0)
{
    FactorCell cell{golden::kDatasetId, "mock", {kind, {}}, m, k, 0};
    cell.seed = orchestrator::cell_seed(100, cell.dataset_id, m, k);
    return prompt::build_prompt(cell, fixture().dataset, fixture().split, q);
}

BackoffPolicy recording_backoff(std::vector<std::chrono::milliseconds>& delays)
{
    BackoffPolicy b;
    b.sleep = [&delays](std::chrono::milliseconds d) { delays.push_back(d); };
    return b;
}

using Step = ScriptedResponder::Step;

} // namespace

TEST_CASE("parse_numeric")
{
    CHECK(parse_numeric("$20,000") == 20000.0);
    CHECK(parse_numeric("My final estimation is 0.80.") == 0.80);
    CHECK_FALSE(parse_numeric("the data is insufficient").has_value());
    CHECK(parse_numeric("42") == 42.0);
    CHECK(parse_numeric("  -3.5\n") == -3.5);
    CHECK(parse_numeric("between 10 and 12") == 12.0);
    CHECK(parse_numeric("1,234,567.5 dollars") == 1234567.5);
    CHECK(parse_numeric("1.5e3") == 1500.0);
    CHECK(parse_numeric("well-known 7") == 7.0);
    CHECK(parse_numeric("x-5") == 5.0);
    CHECK(parse_numeric("price: 12,34") == 34.0);
    CHECK(parse_numeric("abc123 is not a number, 9 is") == 9.0);
    CHECK_FALSE(parse_numeric("abc123").has_value());
    CHECK_FALSE(parse_numeric("").has_value());

    SUBCASE("formatted numbers parse back")
    {
        for (double v : {0.0, 1.0, -2.25, 13270.42, 1e-7, 123456789.0}) {
            const auto text = format_shortest(v);
            CHECK(parse_numeric(text) == v);
            CHECK(parse_numeric("My final estimation is " + text + ".") == v);
        }
    }
}

TEST_CASE("requests use the chat wire format")
{
    const auto p = sample_prompt();
    const auto params = ModelParams::defaults_for("gpt-4o-mini");
    const auto req = make_request(p, params);
    const auto j = req.to_json();
    CHECK(j["model"] == "gpt-4o-mini");
    CHECK(j["messages"].size() == 1);
    CHECK(j["messages"][0]["role"] == "user");
    CHECK(j["messages"][0]["content"] == p.full_text);
    CHECK(j["temperature"] == 0.1);
    CHECK(j["max_tokens"] == 10);
    CHECK(j["seed"] == 100);
    CHECK_FALSE(j.contains("top_p"));

    const auto llama = ModelParams::defaults_for("llama-3-70b-instruct");
    CHECK(llama.max_tokens == 6);
    REQUIRE(llama.top_p);
    CHECK(*llama.top_p == 0.99);
    CHECK(make_request(p, llama).to_json()["top_p"] == 0.99);
}

TEST_CASE("complete retries rate limits with exponential backoff")
{
    std::vector<std::chrono::milliseconds> delays;
    ScriptedResponder mock({Step::rate_limit(), Step::rate_limit(), Step::reply("17.5")});
    const auto text = complete(sample_prompt(), ModelParams::defaults_for("m"), mock, recording_backoff(delays));
    CHECK(text == "17.5");
    CHECK(delays == std::vector<std::chrono::milliseconds>{500ms, 1000ms});
    CHECK(mock.transcript().size() == 3);
}

TEST_CASE("complete gives up after the retry budget and never retries configuration errors")
{
    std::vector<std::chrono::milliseconds> delays;
    auto backoff = recording_backoff(delays);
    backoff.max_retries = 2;
    ScriptedResponder down({Step::transport_failure(), Step::transport_failure(), Step::transport_failure(),
                            Step::reply("1")});
    CHECK_THROWS_AS(complete(sample_prompt(), ModelParams::defaults_for("m"), down, backoff), TransportError);
    CHECK(down.transcript().size() == 3);

    ScriptedResponder forbidden({Step::http_error(401), Step::reply("1")});
    CHECK_THROWS_AS(complete(sample_prompt(), ModelParams::defaults_for("m"), forbidden, backoff), ConfigurationError);
    CHECK(forbidden.transcript().size() == 1);

    ScriptedResponder flaky({Step::http_error(503), Step::reply("8")});
    CHECK(complete(sample_prompt(), ModelParams::defaults_for("m"), flaky, backoff) == "8");

    delays.clear();
    backoff.max_retries = 10;
    backoff.max_delay = 3000ms;
    std::vector<Step> many(8, Step::rate_limit());
    many.push_back(Step::reply("3"));
    ScriptedResponder capped(many);
    CHECK(complete(sample_prompt(), ModelParams::defaults_for("m"), capped, backoff) == "3");
    CHECK(delays.back() == 3000ms);
}

TEST_CASE("retry ladder bumps the seed on unparseable answers")
{
    const std::string refusal = RefuserResponder::kRefusal;
    ScriptedResponder mock({Step::reply(refusal), Step::reply(refusal), Step::reply(refusal), Step::reply("42")});
    const auto p = sample_prompt();
    const auto record = query_with_retry(p, ModelParams::defaults_for("m"), RetryPolicy{}, mock);
    REQUIRE(record.parsed_value);
    CHECK(*record.parsed_value == 42.0);
    CHECK(record.attempts == 4);
    CHECK(record.seeds == std::vector<std::uint64_t>{100, 101, 102, 103});
    const auto sent = mock.transcript();
    REQUIRE(sent.size() == 4);
    for (std::size_t i = 0; i < sent.size(); ++i) {
        CHECK(sent[i].seed == 100 + i);
        CHECK(sent[i].prompt_text() == p.full_text);
        CHECK(sent[i].temperature == 0.1);
    }
    CHECK(record.ground_truth == p.provenance.query_target);
    CHECK(record.cell == p.provenance.cell);
}

TEST_CASE("retry ladder soft-fails after max attempts")
{
    auto refuser = std::make_shared<RefuserResponder>(1000, std::make_shared<EchoMeanResponder>());
    const auto record = query_with_retry(sample_prompt(), ModelParams::defaults_for("m"), RetryPolicy{100, 10}, *refuser);
    CHECK_FALSE(record.parsed_value);
    CHECK(record.attempts == 10);
    CHECK(record.seeds.front() == 100);
    CHECK(record.seeds.back() == 109);
    CHECK(record.raw_text == RefuserResponder::kRefusal);

    ScriptedResponder broken({Step::http_error(404)});
    CHECK_THROWS_AS(query_with_retry(sample_prompt(), ModelParams::defaults_for("m"), RetryPolicy{}, broken), ConfigurationError);
}

TEST_CASE("mock responders")
{
    const auto p = sample_prompt(PromptKind::AnonymizedFeatures, 100, 2, 3);
    const auto req = make_request(p, ModelParams::defaults_for("m"));
    const auto parsed = prompt::parse_rendered_prompt(p.full_text);

    LinearOracleResponder oracle({2.0, 3.0, 100.0}, 0.5);
    CHECK(std::stod(oracle.respond(req)) == 0.5 + 2.0 * parsed.query_features[0] + 3.0 * parsed.query_features[1]);

    IclRidgeResponder ridge(1.0);
    const auto direct = models::fit_ridge(parsed.example_features, parsed.example_targets, 1.0);
    CHECK(std::stod(ridge.respond(req)) == models::predict(direct, parsed.query_features));

    EchoMeanResponder echo;
    double mean = 0.0;
    for (double t : parsed.example_targets) {
        mean += t;
    }
    CHECK(std::stod(echo.respond(req)) == doctest::Approx(mean / 100.0).epsilon(1e-12));

    const auto qa = make_request(sample_prompt(PromptKind::DirectQA, 0, 2), ModelParams::defaults_for("m"));
    CHECK_THROWS_AS(ridge.respond(qa), MockError);
    CHECK_THROWS_AS(echo.respond(qa), MockError);
    CHECK_NOTHROW(oracle.respond(qa));
    ChatRequest garbage = req;
    garbage.messages.back().content = "what is the price?";
    CHECK_THROWS_AS(oracle.respond(garbage), MockError);

    SUBCASE("factory")
    {
        auto built = register_mock({{"mock", "linear_oracle"}, {"w", {2, 3}}, {"b", 0.5}});
        CHECK(built->respond(req) == oracle.respond(req));
        auto refuser = register_mock({{"mock", "refuser"}, {"n", 2}, {"then", {{"mock", "echo_mean"}}}});
        CHECK(refuser->respond(req) == RefuserResponder::kRefusal);
        CHECK(refuser->respond(req) == RefuserResponder::kRefusal);
        CHECK(refuser->respond(req) == echo.respond(req));
        auto scripted = register_mock({{"mock", "scripted"}, {"replies", {"1", "2"}}});
        CHECK(scripted->respond(req) == "1");
        CHECK(scripted->respond(req) == "2");
        CHECK_THROWS_AS(scripted->respond(req), MockError);
        CHECK_THROWS_AS(register_mock({{"mock", "oracle_of_delphi"}}), SchemaError);
    }
}

TEST_CASE("prediction records round-trip through JSON")
{
    const auto p = sample_prompt(PromptKind::NamedFeatures, 30, 3, 9);
    ScriptedResponder mock({Step::reply("nope"), Step::reply("Roughly 12.5")});
    auto record = query_with_retry(p, ModelParams::defaults_for("m"), RetryPolicy{}, mock);
    record.cache_key = "abc";
    record.prompt_text = p.full_text;
    const auto back = record_from_json(record_to_json(record));
    CHECK(back.cell == record.cell);
    CHECK(back.query_index == record.query_index);
    CHECK(back.raw_text == record.raw_text);
    CHECK(back.parsed_value == record.parsed_value);
    CHECK(back.attempts == 2);
    CHECK(back.seeds == record.seeds);
    CHECK(back.cache_key == "abc");
    CHECK(back.ground_truth == record.ground_truth);
    CHECK(back.prompt_text == record.prompt_text);

    PredictionRecord failed = record;
    failed.parsed_value.reset();
    failed.prompt_text.reset();
    const auto j = record_to_json(failed);
    CHECK(record_from_json(j).parsed_value == std::nullopt);
    CHECK(record_from_json(nlohmann::json::parse(j.dump())).cell == failed.cell);
}

namespace {

class SlowResponder final : public Responder {
public:
    std::string respond(const ChatRequest&) override
    {
        const int now = ++in_flight;
        int seen = peak.load();
        while (now > seen && !peak.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(5ms);
        --in_flight;
        return "1";
    }
    std::atomic<int> in_flight{0};
    std::atomic<int> peak{0};
};

} // namespace

TEST_CASE("throttled responder caps concurrency")
{
    auto slow = std::make_shared<SlowResponder>();
    ThrottledResponder throttled(slow, 2, 0ms);
    const auto req = make_request(sample_prompt(), ModelParams::defaults_for("m"));
    std::vector<std::jthread> threads;
    for (int t = 0; t < 6; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 5; ++i) {
                throttled.respond(req);
            }
        });
    }
    threads.clear();
    CHECK(slow->peak.load() <= 2);
    CHECK(slow->peak.load() >= 1);
}

TEST_CASE("transcript responder logs requests and errors")
{
    testing::TempDir dir("transcript");
    const auto path = dir.path() / "t.jsonl";
    auto scripted = std::make_shared<ScriptedResponder>(std::vector<Step>{Step::reply("5"), Step::http_error(400)});
    TranscriptResponder transcript(scripted, path.string());
    const auto req = make_request(sample_prompt(), ModelParams::defaults_for("m"));
    CHECK(transcript.respond(req) == "5");
    CHECK_THROWS_AS(transcript.respond(req), ConfigurationError);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    const auto first = nlohmann::json::parse(line);
    CHECK(first["response"] == "5");
    CHECK(first["request"]["seed"] == 100);
    std::getline(in, line);
    CHECK(nlohmann::json::parse(line).contains("error"));
}
