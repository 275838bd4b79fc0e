#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "llmloop/pipeline.hpp"

namespace llmloop {

// ---------------------------------------------------------------------------
// Problem sets.  File format: JSON array of
//   {id, prompt, declaration, example_tests: [texts], validation_tests: [texts]}
// compatible with HumanEval-X style exports.

struct ProblemSpec {
    std::string id;
    std::string prompt;
    std::string declaration;
    std::vector<std::string> example_tests;
    std::vector<std::string> validation_tests;

    json to_json() const;
    static ProblemSpec from_json(const json& value);

    bool operator==(const ProblemSpec&) const = default;
};

/// Throws SetupError naming the problem id (or index) and the missing field.
std::vector<ProblemSpec> load_problem_set(const std::filesystem::path& path);

json serialize_problem_set(const std::vector<ProblemSpec>& problems);

/// Writes the given/validation suites under root/<id>/ and returns the
/// pipeline-facing Problem.  The validation suite is referenced, never read,
/// by the loops; it exists only for final grading.
Problem materialize_problem(const ProblemSpec& spec, const std::filesystem::path& root);

// ---------------------------------------------------------------------------
// pass@k: probability that at least one of k samples drawn from n (with c
// correct) is correct.  Exact product form; 1.0 when n - c < k.
// Throws UsageError when the preconditions (0 <= c <= n, 1 <= k <= n) fail.

double pass_at_k(int n, int c, int k);

// ---------------------------------------------------------------------------
// Benchmark execution.

struct SampleResult {
    RunRecord record;
    std::map<std::string, bool> graded;  // grading row ("baseline", ..., "final")
                                         // -> compiled and validation-green
};

struct BenchmarkRun {
    std::vector<std::string> problem_ids;            // problem-set order
    int samples_per_problem = 1;
    std::vector<std::string> stage_rows;             // grading rows, table order
    std::map<std::string, std::vector<SampleResult>> results;  // id -> samples

    /// results/result.json payload: problemId -> per-sample outcomes + grades.
    json result_json() const;
};

struct BenchmarkConfig {
    PipelineConfig pipeline;
    PromptOptions prompt_options;
    std::filesystem::path template_dir;  // prompt template overrides; empty = built-in
    int samples_per_problem = 1;
    int workers = 1;                     // concurrent (problem, sample) runs
    std::filesystem::path work_root;     // scratch workspaces and suite dirs
    std::filesystem::path results_dir;   // per-run artifacts; empty = none
    std::filesystem::path log_dir;       // framework logs; empty = none
};

/// A provider plus a completion hook (e.g. save the recording transcript).
struct ProviderLease {
    std::unique_ptr<LlmProvider> provider;
    std::function<void()> finalize;
};

using ProviderFactory = std::function<ProviderLease(const std::string& problem_id, int sample)>;
using ToolchainFactory =
    std::function<std::unique_ptr<ToolchainAdapter>(const std::string& problem_id, int sample)>;

/// Runs every (problem, sample) pair, grades each grading-row checkpoint and
/// the final bundle against the validation suite, and collects the matrix.
/// A single aborted run counts as unsolved and does not stop the benchmark.
/// Factories must hand out independent objects when workers > 1.
BenchmarkRun run_benchmark(const std::vector<ProblemSpec>& problems, const BenchmarkConfig& config,
                           const ProviderFactory& provider_factory,
                           const ToolchainFactory& toolchain_factory);

// ---------------------------------------------------------------------------
// Aggregation.

struct StageStat {
    std::string stage;
    double mean = 0.0;     // solved problems, averaged over sample slices
    double std_dev = 0.0;  // population standard deviation
    double percent = 0.0;  // mean / problem count * 100
};

/// Each benchmark run contributes samplesPerProblem slices; slice j counts the
/// problems whose j-th sample passed each grading row.  All runs must share
/// the problem set and stage order (else UsageError).
std::vector<StageStat> aggregate_stages(const std::vector<BenchmarkRun>& runs);

std::string format_stat(double mean, double std_dev);  // "117.50 ± 1.20"
std::string format_percent(double percent);            // "71.65%"

std::string stage_stats_csv(const std::vector<StageStat>& stats);

struct PassKPoint {
    int k = 1;
    double baseline = 0.0;  // first parsed bundle, graded before any loop ran
    double pipeline = 0.0;  // final bundle
};

/// Averages pass_at_k over problems for k = 1..max_k (max_k <= samples,
/// else UsageError; max_k <= 0 means "samples").
std::vector<PassKPoint> pass_k_curve(const BenchmarkRun& run, int max_k);

std::string pass_k_csv(const std::vector<PassKPoint>& points);

/// result.json, stage_stats.csv and pass_k.csv under out_dir.
void write_benchmark_reports(const BenchmarkRun& run, const std::filesystem::path& out_dir);

// ---------------------------------------------------------------------------
// Hidden-test hygiene: no transcript entry (request or response) may contain
// any validation-test source text.

std::vector<std::string> hygiene_violations(const Transcript& transcript,
                                            const ProblemSpec& spec);

}  // namespace llmloop
