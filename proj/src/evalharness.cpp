#include "llmloop/evalharness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

namespace llmloop {

// ---------------------------------------------------------------------------
// Problem sets.

json ProblemSpec::to_json() const {
    return {{"id", id},
            {"prompt", prompt},
            {"declaration", declaration},
            {"example_tests", example_tests},
            {"validation_tests", validation_tests}};
}

namespace {

std::vector<std::string> string_list_field(const json& value, const std::string& id,
                                           const std::string& field) {
    if (!value.contains(field))
        throw SetupError("problem '" + id + "' is missing field '" + field + "'");
    const json& items = value.at(field);
    if (!items.is_array())
        throw SetupError("problem '" + id + "' field '" + field + "' must be an array");
    std::vector<std::string> out;
    for (const auto& item : items) {
        if (!item.is_string())
            throw SetupError("problem '" + id + "' field '" + field +
                             "' must contain only strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

std::string string_field(const json& value, const std::string& id, const std::string& field) {
    if (!value.contains(field))
        throw SetupError("problem '" + id + "' is missing field '" + field + "'");
    if (!value.at(field).is_string())
        throw SetupError("problem '" + id + "' field '" + field + "' must be a string");
    return value.at(field).get<std::string>();
}

}  // namespace

ProblemSpec ProblemSpec::from_json(const json& value) {
    if (!value.is_object()) throw SetupError("problem entries must be JSON objects");
    if (!value.contains("id") || !value.at("id").is_string())
        throw SetupError("problem entry is missing field 'id'");
    ProblemSpec spec;
    spec.id = value.at("id").get<std::string>();
    if (spec.id.empty()) throw SetupError("problem entry has an empty 'id'");
    spec.prompt = string_field(value, spec.id, "prompt");
    spec.declaration = string_field(value, spec.id, "declaration");
    spec.example_tests = string_list_field(value, spec.id, "example_tests");
    spec.validation_tests = string_list_field(value, spec.id, "validation_tests");
    return spec;
}

std::vector<ProblemSpec> load_problem_set(const std::filesystem::path& path) {
    const json parsed = json::parse(read_text_file(path), nullptr, false);
    if (parsed.is_discarded())
        throw SetupError("problem set " + path.string() + " is not valid JSON");
    if (!parsed.is_array())
        throw SetupError("problem set " + path.string() + " must be a JSON array");
    std::vector<ProblemSpec> problems;
    for (const auto& item : parsed) problems.push_back(ProblemSpec::from_json(item));
    return problems;
}

json serialize_problem_set(const std::vector<ProblemSpec>& problems) {
    json arr = json::array();
    for (const auto& p : problems) arr.push_back(p.to_json());
    return arr;
}

namespace {

TestSuiteRef write_suite(const std::filesystem::path& dir, const std::string& suite_id,
                         const std::vector<std::string>& texts) {
    TestSuiteRef suite;
    suite.id = suite_id;
    suite.dir = dir;
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const std::string name = "test_" + std::to_string(i + 1) + ".cpp";
        write_text_file(dir / name, texts[i]);
        suite.files.push_back(name);
    }
    return suite;
}

}  // namespace

Problem materialize_problem(const ProblemSpec& spec, const std::filesystem::path& root) {
    Problem problem;
    problem.id = spec.id;
    problem.prompt = spec.prompt;
    problem.declaration = spec.declaration;
    problem.example_suite = write_suite(root / spec.id / "given", "given", spec.example_tests);
    problem.validation_suite =
        write_suite(root / spec.id / "validation", "validation", spec.validation_tests);
    return problem;
}

// ---------------------------------------------------------------------------
// pass@k.

double pass_at_k(int n, int c, int k) {
    if (n < 0 || c < 0 || c > n) throw UsageError("pass_at_k requires 0 <= c <= n");
    if (k < 1 || k > n) throw UsageError("pass_at_k requires 1 <= k <= n");
    if (n - c < k) return 1.0;
    double miss_all = 1.0;
    for (int i = 0; i < k; ++i)
        miss_all *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
    return 1.0 - miss_all;
}

// ---------------------------------------------------------------------------
// Benchmark execution.

namespace {

std::vector<std::string> grading_rows(const PipelineConfig& config) {
    std::vector<std::string> rows = {"baseline", "compile", "given_tests"};
    if (config.enable_static_analysis) rows.push_back("static_analysis");
    if (config.enable_llm_tests) rows.push_back("llm_tests");
    if (config.enable_external_gen) rows.push_back("external_tests");
    return rows;
}

std::vector<StageId> planned_stage_ids(const PipelineConfig& config) {
    std::vector<StageId> ids = {{StageKind::Compile}, {StageKind::GivenTests}};
    if (config.enable_static_analysis) ids.push_back({StageKind::StaticAnalysis});
    if (config.enable_llm_tests) {
        ids.push_back({StageKind::GeneratedTests, TestSource::LlmGen});
        if (config.enable_mutation) ids.push_back({StageKind::MutationAnalysis, TestSource::LlmGen});
    }
    if (config.enable_external_gen) {
        ids.push_back({StageKind::GeneratedTests, TestSource::ExternalGen});
        if (config.enable_mutation)
            ids.push_back({StageKind::MutationAnalysis, TestSource::ExternalGen});
    }
    return ids;
}

RunRecord make_aborted_record(const std::string& problem_id, int sample,
                              const std::string& reason, const PipelineConfig& config) {
    RunRecord record;
    record.problem_id = problem_id;
    record.sample_index = sample;
    StageOutcome baseline;
    baseline.stage = {StageKind::Baseline};
    baseline.status = StageStatus::Unchanged;
    baseline.detail = "run aborted";
    record.outcomes.push_back(baseline);
    for (const StageId& id : planned_stage_ids(config)) {
        StageOutcome outcome;
        outcome.stage = id;
        outcome.status = StageStatus::Aborted;
        outcome.detail = reason;
        record.outcomes.push_back(outcome);
    }
    for (const std::string& row : grading_rows(config)) record.checkpoints.emplace_back(row, 0);
    return record;
}

class Grader {
public:
    Grader(ToolchainAdapter& toolchain, std::filesystem::path dir, TestSuiteRef validation)
        : toolchain_(&toolchain), dir_(std::move(dir)), validation_(std::move(validation)) {}

    bool grade_bundle(const CodeBundle& bundle) {
        if (!bundle.has_source()) return false;
        try {
            materialize_bundle(dir_, bundle);
            if (!toolchain_->compile(dir_).ok) return false;
            const auto results = toolchain_->run_tests(dir_, validation_);
            for (const auto& r : results)
                if (r.failed()) return false;
            return true;
        } catch (const Error&) {
            return false;
        }
    }

    bool grade_version(const RunRecord& record, int version) {
        if (version <= 0) return false;
        if (const auto cached = cache_.find(version); cached != cache_.end())
            return cached->second;
        const auto snapshot = record.snapshots.find(version);
        const bool passed =
            snapshot != record.snapshots.end() && grade_bundle(snapshot->second);
        cache_[version] = passed;
        return passed;
    }

private:
    ToolchainAdapter* toolchain_;
    std::filesystem::path dir_;
    TestSuiteRef validation_;
    std::map<int, bool> cache_;
};

}  // namespace

BenchmarkRun run_benchmark(const std::vector<ProblemSpec>& problems, const BenchmarkConfig& config,
                           const ProviderFactory& provider_factory,
                           const ToolchainFactory& toolchain_factory) {
    if (config.samples_per_problem < 1)
        throw SetupError("samples per problem must be >= 1");
    if (config.workers < 1) throw SetupError("worker count must be >= 1");
    if (config.work_root.empty()) throw SetupError("benchmark work root must be set");

    BenchmarkRun run;
    run.samples_per_problem = config.samples_per_problem;
    run.stage_rows = grading_rows(config.pipeline);
    for (const auto& p : problems) run.problem_ids.push_back(p.id);

    std::vector<Problem> materialized;
    for (const auto& p : problems)
        materialized.push_back(materialize_problem(p, config.work_root / "problems"));

    struct Task {
        std::size_t problem_index;
        int sample;
    };
    std::vector<Task> tasks;
    for (std::size_t pi = 0; pi < problems.size(); ++pi)
        for (int j = 0; j < config.samples_per_problem; ++j) tasks.push_back({pi, j});

    std::vector<std::vector<SampleResult>> matrix(problems.size());
    for (auto& row : matrix) row.resize(config.samples_per_problem);

    const auto run_one = [&](const Task& task) {
        const ProblemSpec& spec = problems[task.problem_index];
        const Problem& problem = materialized[task.problem_index];
        const auto run_dir =
            config.work_root / "runs" / spec.id / ("s" + std::to_string(task.sample));
        std::filesystem::remove_all(run_dir);
        std::filesystem::create_directories(run_dir);

        ProviderLease lease = provider_factory(spec.id, task.sample);
        if (!lease.provider)
            throw SetupError("provider factory returned no provider for " + spec.id);
        std::unique_ptr<ToolchainAdapter> toolchain = toolchain_factory(spec.id, task.sample);
        if (!toolchain)
            throw SetupError("toolchain factory returned no toolchain for " + spec.id);
        LogicalClock clock;

        Orchestrator::Options options;
        options.config = config.pipeline;
        options.workdir = run_dir / "work";
        options.sample_index = task.sample;
        if (!config.log_dir.empty())
            options.log_path =
                config.log_dir / (spec.id + "_s" + std::to_string(task.sample) + ".log");

        SampleResult sample;
        bool aborted = false;
        std::string abort_reason;
        try {
            TemplateStore store = config.template_dir.empty() ? TemplateStore()
                                                              : TemplateStore(config.template_dir);
            Orchestrator orchestrator(std::move(options), *lease.provider, *toolchain,
                                      PromptBuilder(store, config.prompt_options), clock);
            sample.record = orchestrator.run(problem);
        } catch (const Error& e) {
            aborted = true;
            abort_reason = e.what();
        }
        if (lease.finalize) lease.finalize();
        if (aborted)
            sample.record = make_aborted_record(spec.id, task.sample,
                                                std::string("run aborted: ") + abort_reason,
                                                config.pipeline);

        Grader grader(*toolchain, run_dir / "grade", problem.validation_suite);
        for (const std::string& row : run.stage_rows) sample.graded[row] = false;
        for (const auto& [row, version] : sample.record.checkpoints)
            sample.graded[row] = grader.grade_version(sample.record, version);
        const bool final_passed = grader.grade_bundle(sample.record.final_bundle);
        sample.graded["final"] = final_passed;
        sample.record.validation_passed = final_passed;

        if (!config.results_dir.empty())
            write_run_artifacts(sample.record,
                                config.results_dir / spec.id / std::to_string(task.sample));
        matrix[task.problem_index][task.sample] = std::move(sample);
    };

    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(config.workers), tasks.size());
    if (workers <= 1) {
        for (const Task& task : tasks) run_one(task);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1))
                    run_one(tasks[i]);
            });
        }
        for (auto& t : pool) t.join();
    }

    for (std::size_t pi = 0; pi < problems.size(); ++pi)
        run.results[problems[pi].id] = std::move(matrix[pi]);
    return run;
}

json BenchmarkRun::result_json() const {
    json out = json::object();
    for (const auto& id : problem_ids) {
        json samples = json::array();
        for (const auto& sample : results.at(id)) {
            json graded = json::object();
            for (const auto& [row, passed] : sample.graded) graded[row] = passed;
            json outcomes = json::array();
            for (const auto& o : sample.record.outcomes) outcomes.push_back(o.to_json());
            samples.push_back({{"sampleIndex", sample.record.sample_index},
                               {"outcomes", outcomes},
                               {"graded", graded},
                               {"validationPassed", sample.record.validation_passed}});
        }
        out[id] = samples;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Aggregation.

std::vector<StageStat> aggregate_stages(const std::vector<BenchmarkRun>& runs) {
    if (runs.empty()) throw UsageError("no benchmark runs to aggregate");
    const auto& rows = runs.front().stage_rows;
    const auto& ids = runs.front().problem_ids;
    for (const auto& run : runs) {
        if (run.stage_rows != rows)
            throw UsageError("benchmark runs have different stage orders");
        if (run.problem_ids != ids)
            throw UsageError("benchmark runs cover different problem sets");
    }

    std::map<std::string, std::vector<double>> counts;  // row -> per-slice solved
    for (const auto& run : runs) {
        for (int j = 0; j < run.samples_per_problem; ++j) {
            for (const auto& row : rows) {
                double solved = 0;
                for (const auto& id : ids)
                    if (run.results.at(id).at(j).graded.at(row)) solved += 1;
                counts[row].push_back(solved);
            }
        }
    }

    std::vector<StageStat> stats;
    for (const auto& row : rows) {
        const auto& xs = counts[row];
        double mean = 0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        double variance = 0;
        for (double x : xs) variance += (x - mean) * (x - mean);
        variance /= static_cast<double>(xs.size());
        StageStat stat;
        stat.stage = row;
        stat.mean = mean;
        stat.std_dev = std::sqrt(variance);
        stat.percent = ids.empty() ? 0.0 : mean / static_cast<double>(ids.size()) * 100.0;
        stats.push_back(stat);
    }
    return stats;
}

std::string format_stat(double mean, double std_dev) {
    return format_fixed2(mean) + " ± " + format_fixed2(std_dev);
}

std::string format_percent(double percent) { return format_fixed2(percent) + "%"; }

std::string stage_stats_csv(const std::vector<StageStat>& stats) {
    std::string out = "stage,passed,percent\n";
    for (const auto& s : stats)
        out += s.stage + "," + format_stat(s.mean, s.std_dev) + "," + format_percent(s.percent) +
               "\n";
    return out;
}

std::vector<PassKPoint> pass_k_curve(const BenchmarkRun& run, int max_k) {
    const int n = run.samples_per_problem;
    if (max_k > n) throw UsageError("pass@k curve requires max k <= samples per problem");
    if (max_k <= 0) max_k = n;

    std::vector<PassKPoint> points;
    for (int k = 1; k <= max_k; ++k) {
        PassKPoint point;
        point.k = k;
        if (!run.problem_ids.empty()) {
            double base_sum = 0;
            double pipe_sum = 0;
            for (const auto& id : run.problem_ids) {
                int c_base = 0;
                int c_pipe = 0;
                for (const auto& sample : run.results.at(id)) {
                    if (sample.graded.at("baseline")) ++c_base;
                    if (sample.graded.at("final")) ++c_pipe;
                }
                base_sum += pass_at_k(n, c_base, k);
                pipe_sum += pass_at_k(n, c_pipe, k);
            }
            point.baseline = base_sum / static_cast<double>(run.problem_ids.size());
            point.pipeline = pipe_sum / static_cast<double>(run.problem_ids.size());
        }
        points.push_back(point);
    }
    return points;
}

std::string pass_k_csv(const std::vector<PassKPoint>& points) {
    std::string out = "k,baseline,pipeline\n";
    char buffer[96];
    for (const auto& p : points) {
        std::snprintf(buffer, sizeof(buffer), "%d,%.6f,%.6f\n", p.k, p.baseline, p.pipeline);
        out += buffer;
    }
    return out;
}

void write_benchmark_reports(const BenchmarkRun& run, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir / "result.json", canonical_dump(run.result_json()));
    write_text_file(out_dir / "stage_stats.csv", stage_stats_csv(aggregate_stages({run})));
    write_text_file(out_dir / "pass_k.csv", pass_k_csv(pass_k_curve(run, 0)));
}

// ---------------------------------------------------------------------------
// Hidden-test hygiene.

std::vector<std::string> hygiene_violations(const Transcript& transcript,
                                            const ProblemSpec& spec) {
    std::vector<std::string> violations;
    for (std::size_t t = 0; t < spec.validation_tests.size(); ++t) {
        const std::string needle = trim(spec.validation_tests[t]);
        if (needle.empty()) continue;
        for (std::size_t e = 0; e < transcript.entries.size(); ++e) {
            const TranscriptEntry& entry = transcript.entries[e];
            bool leaked = contains(entry.response_text, needle);
            if (!leaked && entry.request.is_object() && entry.request.contains("messages")) {
                for (const auto& message : entry.request.at("messages")) {
                    if (message.is_object() && message.contains("text") &&
                        message.at("text").is_string() &&
                        contains(message.at("text").get<std::string>(), needle)) {
                        leaked = true;
                        break;
                    }
                }
            }
            if (leaked)
                violations.push_back("validation test " + std::to_string(t + 1) +
                                     " of problem '" + spec.id +
                                     "' appears in transcript entry " + std::to_string(e));
        }
    }
    return violations;
}

}  // namespace llmloop
