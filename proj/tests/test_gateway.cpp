// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "hazardkit/digest.hpp"
#include "hazardkit/gateway.hpp"
#include "hazardkit/util.hpp"
#include "hazardkit/wire.hpp"
#include "test_support.hpp"

using namespace hazardkit;
using testsupport::RefSha256;
using testsupport::TempDir;

namespace {

gateway::ChatRequest text_only_request(const std::string& body,
                                       const std::string& model = "test-model",
                                       double temperature = 0.0) {
    gateway::ChatRequest request;
    request.model_name = model;
    request.temperature = temperature;
    request.messages.push_back(gateway::Message::text(gateway::Role::user, body));
    return request;
}

}  // namespace

TEST_CASE("reference sha256 matches the published test vectors") {
    CHECK(RefSha256::hex(std::string("abc")) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(RefSha256::hex(std::string("")) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(RefSha256::hex(std::string(
              "abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")) ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("library sha256 agrees with the reference implementation") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::uint8_t> bytes(rng() % 300);
        for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
        CHECK(gateway::sha256_hex(bytes) == RefSha256::hex(bytes));
    }
}

TEST_CASE("request digest is deterministic and field sensitive") {
    gateway::ChatRequest request = text_only_request("hello");
    CHECK(gateway::request_digest(request) == gateway::request_digest(request));

    gateway::ChatRequest warmer = text_only_request("hello", "test-model", 0.7);
    CHECK(gateway::request_digest(request) != gateway::request_digest(warmer));

    gateway::ChatRequest other_model = text_only_request("hello", "other-model");
    CHECK(gateway::request_digest(request) != gateway::request_digest(other_model));

    gateway::ChatRequest other_text = text_only_request("hello!");
    CHECK(gateway::request_digest(request) != gateway::request_digest(other_text));

    // max_output_tokens is not part of the replay key
    gateway::ChatRequest bigger = text_only_request("hello");
    bigger.max_output_tokens = 9999;
    CHECK(gateway::request_digest(request) == gateway::request_digest(bigger));
}

TEST_CASE("permuting image bytes changes the digest") {
    std::vector<std::uint8_t> bytes = {1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<std::uint8_t> permuted = {8, 7, 6, 5, 4, 3, 2, 1};
    // Oracle: an independent hash already separates the two byte strings.
    CHECK(RefSha256::hex(bytes) != RefSha256::hex(permuted));

    gateway::ChatRequest a;
    a.model_name = "m";
    a.messages.push_back(gateway::Message::user_with_image("look", bytes,
                                                           gateway::ImageMedia::png));
    gateway::ChatRequest b = a;
    std::get<gateway::ImagePart>(b.messages[0].parts[1]).bytes = permuted;
    CHECK(gateway::request_digest(a) != gateway::request_digest(b));
}

TEST_CASE("digest canonical form is stable across releases") {
    gateway::ChatRequest request;
    request.model_name = "gpt-4o-mini";
    request.temperature = 0.0;
    request.messages.push_back(gateway::Message::text(gateway::Role::system, "be brief"));
    request.messages.push_back(gateway::Message::text(gateway::Role::user, "hello world"));
    // Frozen; a change here silently breaks every stored fixture.
    CHECK(gateway::request_digest(request) ==
          "dbc0a16253a2a766eb99264c21dd976b382f0ac011934be0245b41ea9d89becd");
}

TEST_CASE("estimate_cost follows the per-token rates") {
    gateway::PriceTable prices{5e-6, 15e-6};
    gateway::Usage zero;
    CHECK(gateway::estimate_cost(zero, prices) == doctest::Approx(0.0));

    gateway::Usage usage;
    usage.total_input_tokens = 100000;
    usage.total_output_tokens = 20000;
    CHECK(gateway::estimate_cost(usage, prices) == doctest::Approx(0.80));
}

TEST_CASE("a 100-report run at ~1000 input tokens lands near one currency unit") {
    // 100 requests x (1000 in + 300 out) under the default price table.
    gateway::Usage usage;
    usage.total_input_tokens = 100 * 1000;
    usage.total_output_tokens = 100 * 300;
    double cost = gateway::estimate_cost(usage, gateway::PriceTable{});
    CHECK(cost >= 0.5);
    CHECK(cost <= 2.0);
}

TEST_CASE("request validation rejects the documented invariant violations") {
    TempDir dir("gw_validate");
    util::write_text_file_atomic(dir / "f.jsonl", "");
    gateway::Gateway gw(gateway::ReplayBackend{dir / "f.jsonl", true}, {}, 6000);

    gateway::ChatRequest empty;
    empty.model_name = "m";
    CHECK_THROWS_AS(gw.send_chat(empty), gateway::ValidationError);

    gateway::ChatRequest late_system = text_only_request("hi");
    late_system.messages.push_back(gateway::Message::text(gateway::Role::system, "sys"));
    CHECK_THROWS_AS(gw.send_chat(late_system), gateway::ValidationError);

    gateway::ChatRequest image_in_assistant = text_only_request("hi");
    gateway::Message assistant;
    assistant.role = gateway::Role::assistant;
    assistant.parts.emplace_back(gateway::ImagePart{{1, 2, 3}, gateway::ImageMedia::png});
    image_in_assistant.messages.push_back(assistant);
    CHECK_THROWS_AS(gw.send_chat(image_in_assistant), gateway::ValidationError);

    gateway::ChatRequest hot = text_only_request("hi");
    hot.temperature = 2.5;
    CHECK_THROWS_AS(gw.send_chat(hot), gateway::ValidationError);

    gateway::ChatRequest no_parts = text_only_request("hi");
    no_parts.messages[0].parts.clear();
    CHECK_THROWS_AS(gw.send_chat(no_parts), gateway::ValidationError);
}

TEST_CASE("replay serves the fixture entry keyed by the request digest") {
    TempDir dir("gw_replay");
    gateway::ChatRequest request = text_only_request("is this a hazard?");
    const std::string digest = gateway::request_digest(request);
    util::write_text_file_atomic(
        dir / "f.jsonl", "{\"digest\":\"" + digest +
                             "\",\"response_text\":\"Yes.\",\"input_tokens\":12,"
                             "\"output_tokens\":3}\n");

    gateway::Gateway gw(gateway::ReplayBackend{dir / "f.jsonl", true}, {}, 6000);
    gateway::ChatResponse response = gw.send_chat(request);
    CHECK(response.text == "Yes.");
    CHECK(response.input_tokens == 12);
    CHECK(response.output_tokens == 3);

    SUBCASE("strict mode misses raise FixtureMiss") {
        gateway::ChatRequest other = text_only_request("unrecorded question");
        CHECK_THROWS_AS(gw.send_chat(other), gateway::FixtureMiss);
    }
    SUBCASE("non-strict mode serves a deterministic placeholder") {
        gateway::Gateway lax(gateway::ReplayBackend{dir / "f.jsonl", false}, {}, 6000);
        CHECK(lax.send_chat(text_only_request("unrecorded question")).text == "UNRECORDED");
    }
}

TEST_CASE("replay is deterministic and usage is additive over a session") {
    TempDir dir("gw_det");
    std::vector<gateway::ChatRequest> requests;
    std::string fixture;
    for (int i = 0; i < 5; ++i) {
        gateway::ChatRequest request = text_only_request("question " + std::to_string(i));
        fixture += "{\"digest\":\"" + gateway::request_digest(request) +
                   "\",\"response_text\":\"answer " + std::to_string(i) +
                   "\",\"input_tokens\":" + std::to_string(10 + i) +
                   ",\"output_tokens\":" + std::to_string(2 * i) + "}\n";
        requests.push_back(std::move(request));
    }
    util::write_text_file_atomic(dir / "f.jsonl", fixture);

    auto run = [&]() {
        gateway::Gateway gw(gateway::ReplayBackend{dir / "f.jsonl", true}, {}, 6000);
        std::vector<std::string> texts;
        for (const auto& request : requests) texts.push_back(gw.send_chat(request).text);
        return std::make_pair(texts, gw.usage());
    };
    auto [texts_a, usage_a] = run();
    auto [texts_b, usage_b] = run();
    CHECK(texts_a == texts_b);

    // additivity: 10+11+12+13+14 = 60 input, 0+2+4+6+8 = 20 output
    CHECK(usage_a.total_input_tokens == 60);
    CHECK(usage_a.total_output_tokens == 20);
    CHECK(usage_b.total_input_tokens == 60);
}

namespace {

// In-process chat-completions endpoint with a scripted status sequence.
class ScriptedServer {
  public:
    explicit ScriptedServer(std::vector<int> statuses, std::string content = "All clear.")
        : statuses_(std::move(statuses)), content_(std::move(content)) {
        server_.Post("/v1/chat/completions",
                     [this](const httplib::Request& req, httplib::Response& res) {
                         const std::size_t n = attempts_.fetch_add(1);
                         {
                             std::lock_guard<std::mutex> lock(mutex_);
                             last_body_ = req.body;
                             auth_header_ = req.get_header_value("Authorization");
                         }
                         const int status = n < statuses_.size() ? statuses_[n] : 200;
                         if (status != 200) {
                             res.status = status;
                             res.set_content("scripted failure", "text/plain");
                             return;
                         }
                         nlohmann::json body = {
                             {"choices",
                              {{{"message", {{"role", "assistant"}, {"content", content_}}},
                                {"finish_reason", finish_reason_}}}},
                             {"usage", {{"prompt_tokens", 17}, {"completion_tokens", 5}}}};
                         res.set_content(body.dump(), "application/json");
                     });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this]() { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~ScriptedServer() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int attempts() const { return static_cast<int>(attempts_.load()); }
    std::string last_body() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return last_body_;
    }
    std::string auth_header() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return auth_header_;
    }
    void set_finish_reason(std::string reason) { finish_reason_ = std::move(reason); }

  private:
    std::vector<int> statuses_;
    std::string content_;
    std::string finish_reason_ = "stop";
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<std::size_t> attempts_{0};
    mutable std::mutex mutex_;
    std::string last_body_;
    std::string auth_header_;
};

gateway::RetryPolicy fast_retry() {
    return gateway::RetryPolicy{5, std::chrono::milliseconds(2), 2.0};
}

}  // namespace

TEST_CASE("live backend round-trips the wire protocol") {
    setenv("HAZARDKIT_API_KEY", "sk-test-token", 1);
    ScriptedServer server({}, "Trailing spaces trimmed.   \n");
    gateway::Gateway gw(gateway::LiveBackend{server.url()}, fast_retry(), 6000);

    gateway::ChatRequest request = text_only_request("describe the scene");
    gateway::ChatResponse response = gw.send_chat(request);
    CHECK(response.text == "Trailing spaces trimmed.");  // only trailing whitespace removed
    CHECK(response.input_tokens == 17);
    CHECK(response.output_tokens == 5);
    CHECK(server.auth_header() == "Bearer sk-test-token");

    nlohmann::json body = nlohmann::json::parse(server.last_body());
    CHECK(body.at("model") == "test-model");
    CHECK(body.at("messages").size() == 1);
    CHECK(body.at("messages")[0].at("content") == "describe the scene");
    CHECK(body.at("temperature") == 0.0);
    CHECK(body.contains("max_tokens"));

    gateway::Usage usage = gw.usage();
    CHECK(usage.total_input_tokens == 17);
    CHECK(usage.total_output_tokens == 5);
    CHECK(usage.estimated_cost > 0.0);
}

TEST_CASE("image parts travel as base64 data URLs") {
    setenv("HAZARDKIT_API_KEY", "sk-test-token", 1);
    ScriptedServer server({});
    gateway::Gateway gw(gateway::LiveBackend{server.url()}, fast_retry(), 6000);

    gateway::ChatRequest request;
    request.model_name = "vision-model";
    request.messages.push_back(gateway::Message::user_with_image(
        "what is this?", {0x89, 0x50, 0x4E, 0x47}, gateway::ImageMedia::png));
    gw.send_chat(request);

    nlohmann::json body = nlohmann::json::parse(server.last_body());
    const auto& content = body.at("messages")[0].at("content");
    REQUIRE(content.is_array());
    CHECK(content[0].at("type") == "text");
    CHECK(content[1].at("type") == "image_url");
    const std::string url = content[1].at("image_url").at("url");
    CHECK(url.starts_with("data:image/png;base64,"));

    // and the wire form parses back into the same request (digest-equal)
    gateway::ChatRequest parsed = gateway::from_wire_json(body);
    CHECK(gateway::request_digest(parsed) == gateway::request_digest(request));
}

TEST_CASE("429 responses are retried with backoff until success") {
    setenv("HAZARDKIT_API_KEY", "sk-test-token", 1);
    ScriptedServer server({429, 429});
    gateway::Gateway gw(gateway::LiveBackend{server.url()}, fast_retry(), 6000);
    CHECK(gw.send_chat(text_only_request("q")).text == "All clear.");
    CHECK(server.attempts() == 3);
}

TEST_CASE("persistent 429 exhausts the budget as RateLimited after 5 attempts") {
    setenv("HAZARDKIT_API_KEY", "sk-test-token", 1);
    ScriptedServer server({429, 429, 429, 429, 429, 429, 429});
    gateway::Gateway gw(gateway::LiveBackend{server.url()}, fast_retry(), 6000);
    CHECK_THROWS_AS(gw.send_chat(text_only_request("q")), gateway::RateLimited);
    CHECK(server.attempts() == 5);  // never more than 5 transport attempts
}

TEST_CASE("persistent 500 exhausts the budget as RetryExhausted after 5 attempts") {
    setenv("HAZARDKIT_API_KEY", "sk-test-token", 1);
    ScriptedServer server({500, 500, 500, 500, 500, 500});
    gateway::Gateway gw(gateway::LiveBackend{server.url()}, fast_retry(), 6000);
    CHECK_THROWS_AS(gw.send_chat(text_only_request("q")), gateway::RetryExhausted);
    CHECK(server.attempts() == 5);
}

TEST_CASE("a 400 fails immediately without burning the retry budget") {
    setenv("HAZARDKIT_API_KEY", "sk-test-token", 1);
    ScriptedServer server({400});
    gateway::Gateway gw(gateway::LiveBackend{server.url()}, fast_retry(), 6000);
    CHECK_THROWS_AS(gw.send_chat(text_only_request("q")), gateway::ApiError);
    CHECK(server.attempts() == 1);
}

TEST_CASE("an unreachable endpoint raises RetryExhausted") {
    setenv("HAZARDKIT_API_KEY", "sk-test-token", 1);
    gateway::Gateway gw(gateway::LiveBackend{"http://127.0.0.1:9"},
                        gateway::RetryPolicy{2, std::chrono::milliseconds(1), 2.0}, 6000);
    CHECK_THROWS_AS(gw.send_chat(text_only_request("q")), gateway::RetryExhausted);
}

TEST_CASE("a missing auth token is rejected before any transport") {
    unsetenv("HAZARDKIT_TEST_EMPTY_TOKEN");
    gateway::Gateway gw(gateway::LiveBackend{"http://127.0.0.1:9", "HAZARDKIT_TEST_EMPTY_TOKEN"},
                        fast_retry(), 6000);
    CHECK_THROWS_AS(gw.send_chat(text_only_request("q")), gateway::GatewayError);
}

TEST_CASE("empty content with finish_reason=length reports truncation") {
    setenv("HAZARDKIT_API_KEY", "sk-test-token", 1);
    ScriptedServer server({}, "");
    server.set_finish_reason("length");
    gateway::Gateway gw(gateway::LiveBackend{server.url()}, fast_retry(), 6000);
    CHECK_THROWS_AS(gw.send_chat(text_only_request("q")), gateway::EmptyResponse);
}

TEST_CASE("recording tees live responses into a replayable fixture") {
    setenv("HAZARDKIT_API_KEY", "sk-test-token", 1);
    TempDir dir("gw_record");
    ScriptedServer server({}, "Recorded answer.");
    gateway::Gateway live(gateway::LiveBackend{server.url()}, fast_retry(), 6000);
    live.set_record_path(dir / "rec.jsonl");

    gateway::ChatRequest request = text_only_request("to be recorded");
    CHECK(live.send_chat(request).text == "Recorded answer.");

    gateway::Gateway replay(gateway::ReplayBackend{dir / "rec.jsonl", true}, {}, 6000);
    gateway::ChatResponse again = replay.send_chat(request);
    CHECK(again.text == "Recorded answer.");
    CHECK(again.input_tokens == 17);
}

TEST_CASE("gateway admits concurrent callers safely") {
    TempDir dir("gw_conc");
    std::string fixture;
    std::vector<gateway::ChatRequest> requests;
    for (int i = 0; i < 16; ++i) {
        gateway::ChatRequest request = text_only_request("parallel " + std::to_string(i));
        fixture += "{\"digest\":\"" + gateway::request_digest(request) +
                   "\",\"response_text\":\"ok\",\"input_tokens\":1,\"output_tokens\":1}\n";
        requests.push_back(std::move(request));
    }
    util::write_text_file_atomic(dir / "f.jsonl", fixture);
    gateway::Gateway gw(gateway::ReplayBackend{dir / "f.jsonl", true}, {}, 60000);

    std::vector<std::thread> threads;
    std::atomic<int> ok{0};
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t]() {
            for (int i = t; i < 16; i += 4) {
                if (gw.send_chat(requests[i]).text == "ok") ok.fetch_add(1);
            }
        });
    }
    for (auto& th : threads) th.join();
    CHECK(ok.load() == 16);
    CHECK(gw.usage().total_input_tokens == 16);
}
