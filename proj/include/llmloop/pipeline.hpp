#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "llmloop/llmclient.hpp"
#include "llmloop/mutagen.hpp"
#include "llmloop/promptgen.hpp"
#include "llmloop/toolchain.hpp"

namespace llmloop {

// ---------------------------------------------------------------------------
// Stages.

enum class StageKind {
    Baseline,
    Compile,
    GivenTests,
    StaticAnalysis,
    GeneratedTests,
    MutationAnalysis
};

enum class TestSource { None, LlmGen, ExternalGen };

struct StageId {
    StageKind kind = StageKind::Baseline;
    TestSource source = TestSource::None;

    /// "baseline", "compile", "given_tests", "static_analysis",
    /// "generated_tests:llm", "mutation:external", ...
    std::string name() const;

    bool operator==(const StageId&) const = default;
};

enum class StageStatus { Solved, Improved, Unchanged, BudgetExhausted, Aborted };

std::string stage_status_name(StageStatus status);
StageStatus stage_status_from_name(const std::string& name);  // SetupError if unknown
StageId stage_id_from_name(const std::string& name);          // SetupError if unknown

struct StageOutcome {
    StageId stage;
    StageStatus status = StageStatus::Unchanged;
    int attempts_used = 0;
    std::int64_t duration_ms = 0;
    std::string detail;

    json to_json() const;
    static StageOutcome from_json(const json& value);
};

// ---------------------------------------------------------------------------
// Problems.  The validation suite exists only for final grading; the
// pipeline never reads it and it never appears in a prompt.

struct Problem {
    std::string id;
    std::string prompt;
    std::string declaration;
    TestSuiteRef example_suite;
    TestSuiteRef validation_suite;
};

// ---------------------------------------------------------------------------
// Configuration of one pipeline run.

struct PipelineConfig {
    int budget = 5;              // attempts per loop (flag -n)
    double base_temperature = 0.0;
    bool enable_static_analysis = false;
    bool enable_llm_tests = false;
    bool enable_external_gen = false;
    bool enable_mutation = false;  // applies to each enabled generated suite
    int external_gen_minutes = 2;
    int max_tokens = 4096;
    MutationLimits mutation_limits;
    LanguageProfile mutation_profile;
};

// ---------------------------------------------------------------------------
// RunRecord: everything one (problem, sample) execution produced.

struct RunRecord {
    std::string problem_id;
    int sample_index = 0;
    std::vector<StageOutcome> outcomes;           // stage-graph order
    CodeBundle final_bundle;                      // best-known-good policy
    bool validation_passed = false;               // set by the harness
    std::map<int, CodeBundle> snapshots;          // codeVersion -> bundle
    std::vector<std::pair<std::string, int>> checkpoints;  // grading row -> version
    std::map<std::string, MutationReport> mutation_reports;  // "llm" / "external"

    json to_json() const;
};

/// Mirror the bundle into the workdir: src/ and tests/llm/ are replaced
/// wholesale so the tree equals the bundle exactly.
void materialize_bundle(const std::filesystem::path& workdir, const CodeBundle& bundle);

/// run.json, snapshots/v<N>/..., mutation.json under dir.
void write_run_artifacts(const RunRecord& record, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Orchestrator: sequences Baseline, Compile, GivenTests, StaticAnalysis,
// then a GeneratedTests+Mutation pair per enabled test source.  Strictly
// sequential; one instance per run.

class Orchestrator {
public:
    struct Options {
        PipelineConfig config;
        std::filesystem::path workdir;
        std::optional<CodeBundle> seed_bundle;  // existing-project mode
        std::filesystem::path log_path;         // empty = no log file
        int sample_index = 0;                   // recorded into the RunRecord
    };

    Orchestrator(Options options, LlmProvider& provider, ToolchainAdapter& toolchain,
                 PromptBuilder builder, Clock& clock);

    RunRecord run(const Problem& problem);

    int provider_calls() const { return provider_calls_; }

private:
    struct VersionInfo {
        bool compile_ok = false;
        bool given_green = false;
    };

    // One model attempt: primary call plus at most one repair re-prompt at
    // the same temperature.  Returns the parsed bundle or nothing.
    std::optional<CodeBundle> call_for_bundle(CompletionRequest request, double temperature,
                                              const std::string& stage_label,
                                              std::string& failure_detail);

    void commit_code(const CodeBundle& merged);
    void commit_tests(const CodeBundle& merged);
    bool suite_green(const TestSuiteRef& suite, std::vector<TestResult>* results = nullptr,
                     std::int64_t* elapsed_ms = nullptr);

    // Guarded edit for loops 3-5: accept iff it compiles and the given suite
    // stays green (when it was green at stage entry); reverts otherwise.
    bool try_guarded_code_edit(const CodeBundle& update, const TestSuiteRef& given_suite,
                               bool guard_given, std::string& reject_reason);

    StageOutcome compile_stage(const Problem& problem, int& baseline_version);
    StageOutcome given_tests_stage(const Problem& problem);
    StageOutcome static_analysis_stage(const Problem& problem);
    StageOutcome llm_testgen_stage(const Problem& problem, std::optional<TestSuiteRef>& suite);
    StageOutcome external_testgen_stage(const Problem& problem,
                                        std::optional<TestSuiteRef>& suite);
    StageOutcome mutation_stage(const Problem& problem, TestSource source,
                                const std::optional<TestSuiteRef>& suite);

    TestSuiteRef llm_suite() const;  // tests/llm files of the current bundle

    void restore_best_known_good();
    int best_version() const;  // 0 when no snapshot qualifies

    void log(const std::string& line);

    Options options_;
    LlmProvider* provider_;
    ToolchainAdapter* toolchain_;
    PromptBuilder builder_;
    Clock* clock_;

    CodeBundle bundle_;
    int version_ = 0;          // highest version number ever assigned
    int current_version_ = 0;  // version the live bundle corresponds to
    bool compile_ok_ = false;
    bool given_green_ = false;
    std::map<int, CodeBundle> snapshots_;
    std::map<int, VersionInfo> version_info_;
    std::map<std::string, MutationReport> mutation_reports_;
    int provider_calls_ = 0;
    int call_cap_ = 0;
    std::ofstream log_file_;
};

/// Convenience wrapper matching the stage-machine entry point.
RunRecord orchestrate(const Problem& problem, const PipelineConfig& config,
                      LlmProvider& provider, ToolchainAdapter& toolchain,
                      PromptBuilder builder, Clock& clock,
                      const std::filesystem::path& workdir,
                      std::optional<CodeBundle> seed_bundle = std::nullopt,
                      const std::filesystem::path& log_path = {});

}  // namespace llmloop
