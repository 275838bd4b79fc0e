#pragma once

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "llmloop/llmclient.hpp"
#include "llmloop/promptgen.hpp"

namespace llmloop::testing {

/// Self-deleting temporary directory.
class TmpDir {
public:
    explicit TmpDir(const std::string& hint = "llmloop") {
        auto pattern =
            (std::filesystem::temp_directory_path() / (hint + "-XXXXXX")).string();
        if (!mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
        path_ = pattern;
    }
    ~TmpDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TmpDir(const TmpDir&) = delete;
    TmpDir& operator=(const TmpDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    operator const std::filesystem::path&() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Serves queued response texts in order, recording (tag, temperature) per
/// call.  Once exhausted it returns empty responses (which the pipeline
/// treats as malformed) or throws, depending on configuration.
class ScriptedProvider final : public LlmProvider {
public:
    struct Call {
        std::string tag;
        double temperature = 0.0;
    };

    explicit ScriptedProvider(std::vector<std::string> responses = {})
        : responses_(std::move(responses)) {}

    void push(const std::string& response) { responses_.push_back(response); }
    void throw_when_exhausted(bool value) { throw_when_exhausted_ = value; }

    CompletionResponse complete(const CompletionRequest& request) override {
        calls_.push_back({request.tag, request.temperature});
        if (next_ >= responses_.size()) {
            if (throw_when_exhausted_) throw ProviderError("scripted provider exhausted");
            return {"", 0, 0};
        }
        return {responses_[next_++], 0, 0};
    }

    const std::vector<Call>& calls() const { return calls_; }
    std::size_t served() const { return next_; }

private:
    std::vector<std::string> responses_;
    std::vector<Call> calls_;
    std::size_t next_ = 0;
    bool throw_when_exhausted_ = false;
};

/// One-file response payload in the documented schema.
inline std::string bundle_response(const std::map<std::string, std::string>& files,
                                   const std::string& main = "",
                                   const std::vector<std::string>& dependencies = {}) {
    json src = json::object();
    for (const auto& [path, text] : files) src[path] = text;
    return json{{"src", src}, {"main", main}, {"dependencies", dependencies}}.dump();
}

}  // namespace llmloop::testing
