#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "llmloop/core.hpp"

namespace llmloop {

// ---------------------------------------------------------------------------
// Requests / responses.

enum class Role { System, User, Assistant };

std::string role_name(Role role);
Role role_from_name(std::string_view name);

struct Message {
    Role role = Role::User;
    std::string text;

    bool operator==(const Message&) const = default;
};

struct CompletionRequest {
    std::vector<Message> messages;
    double temperature = 0.0;  // [0, 2]
    int max_tokens = 4096;
    std::string tag;  // stage label, e.g. "compile" or "given_tests:repair"

    json to_json() const;
    static CompletionRequest from_json(const json& value);
};

struct CompletionResponse {
    std::string text;
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

/// Content hash over message roles, message texts and the temperature
/// rounded to two decimals.  Stable across serialization round-trips.
std::string request_digest(const CompletionRequest& request);

// ---------------------------------------------------------------------------
// Temperature schedule: value(k) = clamp(base + step*k, 0, cap), evaluated in
// hundredths so repeated 0.1 steps stay exact.

struct TemperatureSchedule {
    double base = 0.0;
    double step = 0.1;
    double cap = 2.0;

    double value(int failed_attempts) const;
};

double schedule_value(const TemperatureSchedule& schedule, int failed_attempts);

// ---------------------------------------------------------------------------
// Transcript: ordered record of provider interactions, enabling network-free
// deterministic replay.  One transcript per pipeline run.

struct TranscriptEntry {
    std::string request_digest;
    std::string response_text;
    std::int64_t latency_ms = 0;
    json request = json();  // full request, kept for auditing (e.g. hidden-test
                            // hygiene scans); null in older transcripts
};

enum class TranscriptMode { Record, Replay };

struct Transcript {
    std::vector<TranscriptEntry> entries;
    TranscriptMode mode = TranscriptMode::Record;

    json to_json() const;
    static Transcript from_json(const json& value);

    void save(const std::filesystem::path& path) const;
    static Transcript load(const std::filesystem::path& path);
};

// ---------------------------------------------------------------------------
// Provider abstraction.

class LlmProvider {
public:
    virtual ~LlmProvider() = default;

    /// Throws ProviderError on transport failure, ReplayDivergence on
    /// transcript mismatch.
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

struct LiveConfig {
    std::string endpoint;  // e.g. "http://localhost:8080/v1"
    std::string model;
    std::string api_key;       // resolved from environment by the CLI
    int max_attempts = 3;      // total tries per request
    int backoff_initial_ms = 250;
    int timeout_seconds = 120;
};

/// HTTP chat-completion transport with exponential backoff.  Safe for
/// concurrent use: one connection per request.
class LiveProvider final : public LlmProvider {
public:
    explicit LiveProvider(LiveConfig config);
    CompletionResponse complete(const CompletionRequest& request) override;

private:
    LiveConfig config_;
};

/// Wraps another provider and appends every exchange to a transcript.
class RecordingProvider final : public LlmProvider {
public:
    RecordingProvider(LlmProvider& inner, Transcript& transcript, Clock& clock);
    CompletionResponse complete(const CompletionRequest& request) override;

private:
    LlmProvider* inner_;
    Transcript* transcript_;
    Clock* clock_;
};

/// Serves responses from a transcript without network access.  Entries are
/// consumed strictly in order; a digest mismatch is a hard error.
class ReplayProvider final : public LlmProvider {
public:
    explicit ReplayProvider(Transcript transcript);
    CompletionResponse complete(const CompletionRequest& request) override;

    std::size_t consumed() const { return next_; }

private:
    Transcript transcript_;
    std::size_t next_ = 0;
};

}  // namespace llmloop
