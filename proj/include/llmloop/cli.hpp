#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "llmloop/evalharness.hpp"

namespace llmloop {

// ---------------------------------------------------------------------------
// Run configuration: the short flags mirror the tool's published flag table
// one-to-one; every short flag has a long alias.

struct RunConfig {
    bool enable_external_gen = false;  // -e / --external-gen
    std::string project_path;          // -p / --project (existing project dir)
    bool debug = false;                // -d / --debug (-depth is a different flag)
    bool enable_llm_tests = false;     // -t / --llm-tests (-temp is a different flag)
    bool coverage_report = false;      // -r / --coverage
    int budget = 5;                    // -n / --retries
    bool static_analysis = false;      // -s / --static-analysis
    bool mutation = false;             // -mut / --mutation
    double base_temperature = 0.0;     // -temp / --temperature
    std::string given_suite_path;      // -ts / --test-suite
    int dependency_depth = 0;          // -depth / --dependency-depth
    int external_gen_minutes = 2;      // -m / --external-gen-minutes

    void validate() const;  // UsageError on out-of-range values
    json to_json() const;
    static RunConfig from_json(const json& value);  // unknown key -> UsageError

    bool operator==(const RunConfig&) const = default;
};

/// Maps the flag surface onto the pipeline switches.
PipelineConfig pipeline_config(const RunConfig& config);

// ---------------------------------------------------------------------------
// Parsed command line.

struct CliOptions {
    std::string command = "run";  // run | bench | aggregate | passk | help
    RunConfig run;
    std::filesystem::path config_file;           // --config
    std::filesystem::path out_dir = "results";   // --out
    std::filesystem::path problems_file;         // --problems
    std::string problem_id;                      // --problem (default: first)
    int samples = 1;                             // --samples
    int workers = 1;                             // --workers
    int max_k = 0;                               // --max-k (0 = samples)
    std::filesystem::path toolchain_file;        // --toolchain (command adapter)
    std::filesystem::path scripted_file;         // --scripted (scripted adapter)
    std::string provider_mode = "live";          // --record / --replay
    std::string endpoint;                        // --endpoint (or config file)
    std::string model;                           // --model (or config file)
    std::filesystem::path transcripts_dir;       // --transcripts (replay source)
    std::filesystem::path template_dir;          // --templates
    std::vector<std::filesystem::path> inputs;   // positional result.json paths
};

/// args excludes the program name.  Throws UsageError on malformed input;
/// defaults are applied, then --config contents, then explicit flags.
CliOptions parse_args(const std::vector<std::string>& args);

std::string usage_text();

// ---------------------------------------------------------------------------
// Workspace lifecycle.

struct Workspace {
    std::filesystem::path root;
    std::optional<CodeBundle> seed;  // populated in existing-project mode
    TestSuiteRef given_suite;        // workspace-local copy
    std::filesystem::path log_dir;
};

/// Fresh mode scaffolds src/, tests/, logs/ under dest_root; existing-project
/// mode copies config.project_path into dest_root (the original directory is
/// never touched again).  The -ts suite, when given, is copied into
/// dest_root/tests/given.
Workspace init_workspace(const RunConfig& config, const std::filesystem::path& dest_root);

// ---------------------------------------------------------------------------
// Exit-code contract: 0 iff the run (or at least one benchmark sample)
// reached a compiling, given-test-green state.

inline constexpr int kExitSolved = 0;
inline constexpr int kExitUnsolved = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitError = 3;

bool reached_given_green(const RunRecord& record);

/// Rebuilds a benchmark matrix from a result.json payload (aggregate/passk
/// subcommands operate on completed result files).
BenchmarkRun parse_result_json(const json& value);

/// Full CLI entry point; returns the process exit code and never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace llmloop
