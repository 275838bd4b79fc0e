#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "llmloop/llmclient.hpp"
#include "llmloop/toolchain.hpp"

namespace llmloop {

// ---------------------------------------------------------------------------
// Response-parsing errors.  Each triggers one repair re-prompt in the
// pipeline before the attempt is marked failed.

class ResponseParseError : public Error {
public:
    using Error::Error;
};

class NoStructuredObject : public ResponseParseError {
public:
    NoStructuredObject() : ResponseParseError("response contains no structured object") {}
};

class SchemaViolation : public ResponseParseError {
public:
    explicit SchemaViolation(const std::string& field)
        : ResponseParseError("response violates the schema at field '" + field + "'"),
          field(field) {}
    std::string field;
};

class UnsafePath : public ResponseParseError {
public:
    explicit UnsafePath(const std::string& path)
        : ResponseParseError("response contains an unsafe file path '" + path + "'"),
          path(path) {}
    std::string path;
};

class TemplateError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// CodeBundle: the model's structured output.  File paths are relative,
// normalized, free of traversal segments, and rooted at src/ (code) or
// tests/llm/ (model-generated tests); tests/given/ and tests/ext/ belong to
// the harness and are never writable through a bundle.

struct CodeBundle {
    std::map<std::string, std::string> files;  // path -> source text
    std::string main_config;                   // entry identifier + arguments
    std::vector<std::string> dependencies;     // coordinate strings

    bool has_source() const;          // any file under src/
    bool has_llm_tests() const;       // any file under tests/llm/
    std::vector<std::string> paths_under(std::string_view prefix) const;

    /// Merge-by-path update: files overwrite or extend; main/dependencies
    /// replaced only when the update provides them.
    void merge_from(const CodeBundle& update);

    bool operator==(const CodeBundle&) const = default;
    json to_json() const;  // the exact schema the model is asked to produce
    static CodeBundle from_json(const json& value);
};

/// Throws UnsafePath unless the path is relative, normalized, and rooted at
/// src/ or tests/llm/.
void validate_bundle_path(const std::string& path);

/// Extracts the first well-formed bundle object from raw model text,
/// tolerating surrounding prose and fenced code blocks.
CodeBundle parse_response(const std::string& text);

// ---------------------------------------------------------------------------
// Edit scope.

enum class FixTarget { CodeOnly, CodeOrTests };

/// Paths in the update that violate the edit scope (test paths while the
/// scope is code-only).
std::vector<std::string> scope_violations(const CodeBundle& update, FixTarget target);

// ---------------------------------------------------------------------------
// Feedback payloads.

enum class FeedbackKind { CompileErrors, TestFailures, Violations, SurvivingMutants };

std::string feedback_kind_name(FeedbackKind kind);

struct SurvivorRecord {
    std::string file;
    int line = 0;
    int column = 0;
    std::string original;
    std::string replacement;

    bool operator==(const SurvivorRecord&) const = default;
    json to_json() const;
};

struct FeedbackLimits {
    std::size_t max_items = 50;
    std::size_t max_bytes = 16 * 1024;  // rendered size cap
};

struct FeedbackPayload {
    FeedbackKind kind = FeedbackKind::CompileErrors;
    std::vector<Diagnostic> diagnostics;
    std::vector<TestResult> failures;
    std::vector<Violation> violations;
    std::vector<SurvivorRecord> survivors;
    bool truncated = false;

    std::size_t item_count() const;
    bool empty() const { return item_count() == 0; }
};

// Builders apply the keep-first caps; test feedback keeps failing results
// only.
FeedbackPayload compile_feedback(const std::vector<Diagnostic>& diagnostics,
                                 const FeedbackLimits& limits = {});
FeedbackPayload test_feedback(const std::vector<TestResult>& results,
                              const FeedbackLimits& limits = {});
FeedbackPayload violation_feedback(const std::vector<Violation>& violations,
                                   const FeedbackLimits& limits = {});
FeedbackPayload survivor_feedback(const std::vector<SurvivorRecord>& survivors,
                                  const FeedbackLimits& limits = {});

/// Deterministic text rendering, one line per item, truncation note last.
std::string render_feedback(const FeedbackPayload& payload);

// ---------------------------------------------------------------------------
// Templates.  Files under templates/<name>.txt override the embedded
// defaults; placeholders are {lower_case} identifiers, anything else between
// braces passes through untouched.

class TemplateStore {
public:
    TemplateStore() = default;
    explicit TemplateStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

    /// Known names: system, initial, fix_compile, fix_tests, fix_analysis,
    /// fix_mutants, generate_tests.
    std::string text(const std::string& name) const;

private:
    std::filesystem::path dir_;
};

/// Substitutes {name} placeholders; an unbound placeholder is a TemplateError
/// naming it.
std::string render_template(const std::string& pattern,
                            const std::map<std::string, std::string>& bindings);

// ---------------------------------------------------------------------------
// Prompt builders.  Pure: identical inputs give byte-identical requests.
// Temperature is left at 0 for the pipeline's schedule to overwrite.

struct PromptOptions {
    std::string language_constraint = "portable C++20 using only the standard library";
    std::string extra_testgen_instructions;
    FeedbackLimits limits;
};

class PromptBuilder {
public:
    explicit PromptBuilder(TemplateStore store = {}, PromptOptions options = {});

    CompletionRequest initial_prompt(const std::string& task,
                                     const std::string& declaration) const;
    CompletionRequest fix_prompt(const CodeBundle& bundle, const FeedbackPayload& feedback,
                                 FixTarget target) const;
    CompletionRequest testgen_prompt(const CodeBundle& bundle) const;

    /// Re-prompt after a malformed response; same temperature, same attempt.
    CompletionRequest repair_prompt(const CompletionRequest& failed_request,
                                    const std::string& response_text,
                                    const std::string& parse_error) const;

    const PromptOptions& options() const { return options_; }

private:
    TemplateStore store_;
    PromptOptions options_;
};

/// Sources rendered deterministically (path order), one block per file.
std::string render_bundle_files(const CodeBundle& bundle);

}  // namespace llmloop
