#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "llmloop/core.hpp"

namespace llmloop {

// ---------------------------------------------------------------------------
// Normalized records.

enum class Severity { Error, Warning };

std::string severity_name(Severity severity);

/// line/column are 1-based; 0 means unknown.
struct Diagnostic {
    std::string file;
    int line = 0;
    int column = 0;
    Severity severity = Severity::Error;
    std::string code;
    std::string message;

    bool operator==(const Diagnostic&) const = default;
    json to_json() const;
};

enum class TestStatus { Pass, Fail, Error, Skipped, Timeout };

std::string test_status_name(TestStatus status);

struct TestResult {
    std::string suite_name;
    std::string test_name;
    TestStatus status = TestStatus::Pass;
    std::string failure_message;
    std::string stack_trace;  // non-empty iff status is Fail or Error

    bool failed() const { return status == TestStatus::Fail || status == TestStatus::Error ||
                                 status == TestStatus::Timeout; }
    bool operator==(const TestResult&) const = default;
    json to_json() const;
};

struct Violation {
    std::string rule;
    std::string file;
    int begin_line = 0;
    int end_line = 0;
    int priority = 3;  // 1..5, clamped on parse
    std::string description;

    bool operator==(const Violation&) const = default;
    json to_json() const;
};

// ---------------------------------------------------------------------------
// Configuration.

enum class DiagnosticFormat { JsonLines, RegexProfile };
enum class TestReportFormat { XUnitXml, Tap };
enum class ViolationFormat { PmdXml, JsonLines };

/// Commands are argv templates, not shell strings; placeholders {workdir},
/// {suitePath}, {report}, {minutes}, {depth} are substituted per argument and
/// nothing ever passes through a shell.
struct ToolConfig {
    std::vector<std::string> command_prefix;  // optional, e.g. a container runner
    std::vector<std::string> compile_cmd;     // required
    std::vector<std::string> test_cmd;        // required
    std::vector<std::string> analyze_cmd;
    std::vector<std::string> testgen_cmd;
    std::vector<std::string> coverage_cmd;

    int compile_timeout_s = 120;
    int test_timeout_s = 120;
    int analyze_timeout_s = 120;
    int testgen_timeout_s = 600;

    DiagnosticFormat diagnostic_format = DiagnosticFormat::JsonLines;
    std::string diagnostic_regex;  // named-capture pattern for RegexProfile
    TestReportFormat test_report_format = TestReportFormat::XUnitXml;
    ViolationFormat violation_format = ViolationFormat::PmdXml;

    int dependency_depth = 0;  // forwarded to {depth}; no resolution built in

    void validate() const;  // throws SetupError
    json to_json() const;
    static ToolConfig from_json(const json& value);
};

struct TestSuiteRef {
    std::string id;                  // "given", "llm", "external", ...
    std::filesystem::path dir;       // suite directory, workdir-relative or absolute
    std::vector<std::string> files;  // suite files relative to dir, sorted

    bool empty() const { return files.empty(); }
};

// ---------------------------------------------------------------------------
// Report parsers.  Total over arbitrary input: malformed text degrades to
// synthetic records, never throws.

std::vector<Diagnostic> parse_jsonlines_diagnostics(const std::string& text);
std::vector<Diagnostic> parse_regex_diagnostics(const std::string& text,
                                                const std::string& named_pattern);
std::vector<TestResult> parse_xunit_report(const std::string& text);
std::vector<TestResult> parse_tap_report(const std::string& text);
std::vector<Violation> parse_pmd_violations(const std::string& text);
std::vector<Violation> parse_jsonlines_violations(const std::string& text);

/// One synthetic record wrapping raw tool output (parser fallback).
Diagnostic synthetic_diagnostic(const std::string& raw_output);

// ---------------------------------------------------------------------------
// Adapter interface.

struct CompileOutcome {
    bool ok = false;
    std::vector<Diagnostic> diagnostics;
};

struct ExternalGenOutcome {
    std::optional<TestSuiteRef> suite;  // empty => skipped
    std::string detail;                 // e.g. captured stderr when skipped
};

/// One entry per adapter invocation; the compile-gate invariant is checked
/// against this log.
struct ToolCall {
    std::string step;  // "compile" | "run_tests" | "analyze" | "generate_tests"
    std::size_t call_index = 0;        // per-step, 0-based
    std::string src_fingerprint;       // fingerprint of workdir/src at call time
    std::string suite;                 // suite id for run_tests
    bool ok = true;                    // compile ok / suite green / step succeeded
};

class ToolchainAdapter {
public:
    virtual ~ToolchainAdapter() = default;

    virtual CompileOutcome compile(const std::filesystem::path& workdir) = 0;
    /// timeout_override_s > 0 replaces the configured test timeout (used by
    /// mutation analysis for its per-mutant deadline).
    virtual std::vector<TestResult> run_tests(const std::filesystem::path& workdir,
                                              const TestSuiteRef& suite,
                                              int timeout_override_s = 0) = 0;
    virtual bool analyzer_available() const = 0;
    virtual std::vector<Violation> analyze(const std::filesystem::path& workdir) = 0;
    virtual bool generator_available() const = 0;
    virtual ExternalGenOutcome generate_external_tests(const std::filesystem::path& workdir,
                                                       int minutes) = 0;

    const std::vector<ToolCall>& call_log() const { return call_log_; }

protected:
    void log_call(const std::string& step, const std::filesystem::path& workdir,
                  const std::string& suite, bool ok);

private:
    std::map<std::string, std::size_t> step_counts_;
    std::vector<ToolCall> call_log_;
};

// ---------------------------------------------------------------------------
// Subprocess execution (argv, no shell).

struct ExecResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string stdout_text;
    std::string stderr_text;
};

ExecResult run_command(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                       int timeout_seconds);

/// PATH-aware existence check for argv[0]; used to raise ToolchainUnavailable
/// before attempting execution.
bool command_exists(const std::string& name);

// ---------------------------------------------------------------------------
// Command-backed adapter.

class CommandToolchain final : public ToolchainAdapter {
public:
    explicit CommandToolchain(ToolConfig config);

    CompileOutcome compile(const std::filesystem::path& workdir) override;
    std::vector<TestResult> run_tests(const std::filesystem::path& workdir,
                                      const TestSuiteRef& suite,
                                      int timeout_override_s = 0) override;
    bool analyzer_available() const override { return !config_.analyze_cmd.empty(); }
    std::vector<Violation> analyze(const std::filesystem::path& workdir) override;
    bool generator_available() const override { return !config_.testgen_cmd.empty(); }
    ExternalGenOutcome generate_external_tests(const std::filesystem::path& workdir,
                                               int minutes) override;

    const ToolConfig& config() const { return config_; }

private:
    std::vector<std::string> render(const std::vector<std::string>& cmd,
                                    const std::map<std::string, std::string>& bindings) const;
    ExecResult execute(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                       int timeout_seconds) const;

    ToolConfig config_;
    mutable std::size_t report_counter_ = 0;
};

// ---------------------------------------------------------------------------
// Scripted adapter: step outcomes come from a fixture script, keyed by
// (step, callIndex) with an optional per-step default.  Same script file,
// same outputs, every run.

class ScriptedToolchain final : public ToolchainAdapter {
public:
    explicit ScriptedToolchain(json script);
    static ScriptedToolchain load(const std::filesystem::path& path);

    CompileOutcome compile(const std::filesystem::path& workdir) override;
    std::vector<TestResult> run_tests(const std::filesystem::path& workdir,
                                      const TestSuiteRef& suite,
                                      int timeout_override_s = 0) override;
    bool analyzer_available() const override;
    std::vector<Violation> analyze(const std::filesystem::path& workdir) override;
    bool generator_available() const override;
    ExternalGenOutcome generate_external_tests(const std::filesystem::path& workdir,
                                               int minutes) override;

private:
    const json* entry_for(const std::string& step);

    json script_;
    std::map<std::string, std::size_t> cursors_;
};

}  // namespace llmloop
