#include "llmloop/llmclient.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "httplib.h"

namespace llmloop {

std::string role_name(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

Role role_from_name(std::string_view name) {
    if (name == "system") return Role::System;
    if (name == "assistant") return Role::Assistant;
    if (name == "user") return Role::User;
    throw Error("unknown message role: " + std::string(name));
}

json CompletionRequest::to_json() const {
    json msgs = json::array();
    for (const auto& m : messages) msgs.push_back({{"role", role_name(m.role)}, {"text", m.text}});
    return {{"messages", msgs},
            {"temperature", temperature},
            {"max_tokens", max_tokens},
            {"tag", tag}};
}

CompletionRequest CompletionRequest::from_json(const json& value) {
    CompletionRequest request;
    for (const auto& m : value.at("messages")) {
        request.messages.push_back(
            {role_from_name(m.at("role").get<std::string>()), m.at("text").get<std::string>()});
    }
    request.temperature = value.at("temperature").get<double>();
    request.max_tokens = value.at("max_tokens").get<int>();
    request.tag = value.value("tag", "");
    return request;
}

std::string request_digest(const CompletionRequest& request) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& m : request.messages) {
        h = fnv1a64(role_name(m.role), h);
        h = fnv1a64("\x1f", h);
        h = fnv1a64(m.text, h);
        h = fnv1a64("\x1e", h);
    }
    h = fnv1a64("temp=" + format_fixed2(request.temperature), h);
    return to_hex(h);
}

// Evaluated in hundredths: 0.1 steps stay exact and the result matches the
// two-decimal rounding the digest applies.
double TemperatureSchedule::value(int failed_attempts) const {
    long long cents = std::llround(base * 100.0) + std::llround(step * 100.0) * failed_attempts;
    long long cap_cents = std::llround(cap * 100.0);
    cents = std::clamp(cents, 0ll, cap_cents);
    return static_cast<double>(cents) / 100.0;
}

double schedule_value(const TemperatureSchedule& schedule, int failed_attempts) {
    return schedule.value(failed_attempts);
}

json Transcript::to_json() const {
    json arr = json::array();
    for (const auto& e : entries) {
        json item = {{"request_digest", e.request_digest},
                     {"response_text", e.response_text},
                     {"latency_ms", e.latency_ms}};
        if (!e.request.is_null()) item["request"] = e.request;
        arr.push_back(std::move(item));
    }
    return arr;
}

Transcript Transcript::from_json(const json& value) {
    Transcript t;
    for (const auto& e : value) {
        TranscriptEntry entry;
        entry.request_digest = e.at("request_digest").get<std::string>();
        entry.response_text = e.at("response_text").get<std::string>();
        entry.latency_ms = e.at("latency_ms").get<std::int64_t>();
        if (e.contains("request")) entry.request = e.at("request");
        t.entries.push_back(std::move(entry));
    }
    return t;
}

void Transcript::save(const std::filesystem::path& path) const {
    write_text_file(path, canonical_dump(to_json()));
}

Transcript Transcript::load(const std::filesystem::path& path) {
    Transcript t = from_json(json::parse(read_text_file(path)));
    t.mode = TranscriptMode::Replay;
    return t;
}

// ---------------------------------------------------------------------------
// Live transport.

namespace {

struct Endpoint {
    std::string host_and_scheme;  // "http://host:port" for httplib::Client
    std::string base_path;        // "/v1" or ""
};

Endpoint split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw SetupError("provider endpoint must include a scheme: " + endpoint);
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, ""};
    std::string path = endpoint.substr(path_start);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return {endpoint.substr(0, path_start), path};
}

}  // namespace

LiveProvider::LiveProvider(LiveConfig config) : config_(std::move(config)) {}

CompletionResponse LiveProvider::complete(const CompletionRequest& request) {
    const Endpoint ep = split_endpoint(config_.endpoint);

    json body = {{"model", config_.model},
                 {"temperature", request.temperature},
                 {"max_tokens", request.max_tokens}};
    json msgs = json::array();
    for (const auto& m : request.messages)
        msgs.push_back({{"role", role_name(m.role)}, {"content", m.text}});
    body["messages"] = msgs;
    const std::string payload = body.dump();

    std::string last_error;
    int backoff = config_.backoff_initial_ms;
    for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
        httplib::Client client(ep.host_and_scheme);
        client.set_connection_timeout(config_.timeout_seconds, 0);
        client.set_read_timeout(config_.timeout_seconds, 0);
        httplib::Headers headers;
        if (!config_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + config_.api_key);

        auto result = client.Post(ep.base_path + "/chat/completions", headers, payload,
                                  "application/json");
        if (!result) {
            last_error = "transport error: " + httplib::to_string(result.error());
            continue;
        }
        if (result->status < 200 || result->status >= 300) {
            last_error = "HTTP " + std::to_string(result->status) + ": " + result->body;
            continue;
        }
        try {
            json reply = json::parse(result->body);
            CompletionResponse response;
            response.text =
                reply.at("choices").at(0).at("message").at("content").get<std::string>();
            if (reply.contains("usage")) {
                response.prompt_tokens = reply["usage"].value("prompt_tokens", 0);
                response.completion_tokens = reply["usage"].value("completion_tokens", 0);
            }
            return response;
        } catch (const json::exception& e) {
            last_error = std::string("malformed provider reply: ") + e.what();
        }
    }
    throw ProviderError("completion failed after " + std::to_string(config_.max_attempts) +
                        " attempts (" + request.tag + "): " + last_error);
}

// ---------------------------------------------------------------------------
// Record / replay.

RecordingProvider::RecordingProvider(LlmProvider& inner, Transcript& transcript, Clock& clock)
    : inner_(&inner), transcript_(&transcript), clock_(&clock) {}

CompletionResponse RecordingProvider::complete(const CompletionRequest& request) {
    const std::int64_t start = clock_->now_ms();
    CompletionResponse response = inner_->complete(request);
    transcript_->entries.push_back(
        {request_digest(request), response.text, clock_->now_ms() - start, request.to_json()});
    return response;
}

ReplayProvider::ReplayProvider(Transcript transcript) : transcript_(std::move(transcript)) {
    transcript_.mode = TranscriptMode::Replay;
}

CompletionResponse ReplayProvider::complete(const CompletionRequest& request) {
    if (next_ >= transcript_.entries.size()) {
        throw ReplayDivergence(next_, "replay transcript exhausted at entry " +
                                          std::to_string(next_) + " (tag: " + request.tag + ")");
    }
    const TranscriptEntry& entry = transcript_.entries[next_];
    const std::string digest = request_digest(request);
    if (digest != entry.request_digest) {
        throw ReplayDivergence(next_, "replay digest mismatch at entry " + std::to_string(next_) +
                                          ": expected " + entry.request_digest + ", got " +
                                          digest + " (tag: " + request.tag + ")");
    }
    ++next_;
    return {entry.response_text, 0, 0};
}

}  // namespace llmloop
