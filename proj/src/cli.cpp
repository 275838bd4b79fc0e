#include "llmloop/cli.hpp"

#include <cstdlib>
#include <ostream>

namespace llmloop {

// ---------------------------------------------------------------------------
// RunConfig.

void RunConfig::validate() const {
    if (budget < 1) throw UsageError("budget (-n) must be >= 1");
    if (base_temperature < 0.0 || base_temperature > 2.0)
        throw UsageError("temperature (-temp) must be within [0, 2]");
    if (dependency_depth < 0) throw UsageError("dependency depth (-depth) must be >= 0");
    if (external_gen_minutes < 1)
        throw UsageError("external generator minutes (-m) must be >= 1");
}

json RunConfig::to_json() const {
    return {{"externalGen", enable_external_gen},
            {"projectPath", project_path},
            {"debug", debug},
            {"llmTests", enable_llm_tests},
            {"coverage", coverage_report},
            {"budget", budget},
            {"staticAnalysis", static_analysis},
            {"mutation", mutation},
            {"baseTemperature", base_temperature},
            {"givenSuitePath", given_suite_path},
            {"dependencyDepth", dependency_depth},
            {"externalGenMinutes", external_gen_minutes}};
}

RunConfig RunConfig::from_json(const json& value) {
    if (!value.is_object()) throw UsageError("run config must be a JSON object");
    RunConfig config;
    for (const auto& [key, item] : value.items()) {
        try {
            if (key == "externalGen") config.enable_external_gen = item.get<bool>();
            else if (key == "projectPath") config.project_path = item.get<std::string>();
            else if (key == "debug") config.debug = item.get<bool>();
            else if (key == "llmTests") config.enable_llm_tests = item.get<bool>();
            else if (key == "coverage") config.coverage_report = item.get<bool>();
            else if (key == "budget") config.budget = item.get<int>();
            else if (key == "staticAnalysis") config.static_analysis = item.get<bool>();
            else if (key == "mutation") config.mutation = item.get<bool>();
            else if (key == "baseTemperature") config.base_temperature = item.get<double>();
            else if (key == "givenSuitePath") config.given_suite_path = item.get<std::string>();
            else if (key == "dependencyDepth") config.dependency_depth = item.get<int>();
            else if (key == "externalGenMinutes") config.external_gen_minutes = item.get<int>();
            else throw UsageError("unknown run config key '" + key + "'");
        } catch (const json::exception&) {
            throw UsageError("run config key '" + key + "' has the wrong type");
        }
    }
    config.validate();
    return config;
}

PipelineConfig pipeline_config(const RunConfig& config) {
    PipelineConfig pipeline;
    pipeline.budget = config.budget;
    pipeline.base_temperature = config.base_temperature;
    pipeline.enable_static_analysis = config.static_analysis;
    pipeline.enable_llm_tests = config.enable_llm_tests;
    pipeline.enable_external_gen = config.enable_external_gen;
    pipeline.enable_mutation = config.mutation;
    pipeline.external_gen_minutes = config.external_gen_minutes;
    return pipeline;
}

// ---------------------------------------------------------------------------
// Argument parsing.

namespace {

int parse_int_flag(const std::string& flag, const std::string& text) {
    try {
        std::size_t pos = 0;
        const int value = std::stoi(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw UsageError("flag '" + flag + "' expects an integer, got '" + text + "'");
    }
}

double parse_double_flag(const std::string& flag, const std::string& text) {
    try {
        std::size_t pos = 0;
        const double value = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw UsageError("flag '" + flag + "' expects a number, got '" + text + "'");
    }
}

}  // namespace

CliOptions parse_args(const std::vector<std::string>& args) {
    CliOptions options;
    std::size_t start = 0;
    if (!args.empty() && !args[0].empty() && args[0][0] != '-') {
        const std::string& command = args[0];
        if (command == "run" || command == "bench" || command == "aggregate" ||
            command == "passk" || command == "help") {
            options.command = command;
            start = 1;
        } else {
            throw UsageError("unknown command '" + command + "'");
        }
    }

    // First pass: --config contents provide a base layer under explicit flags.
    for (std::size_t i = start; i < args.size(); ++i) {
        if (args[i] != "--config") continue;
        if (i + 1 >= args.size()) throw UsageError("flag '--config' requires a value");
        options.config_file = args[i + 1];
    }
    if (!options.config_file.empty()) {
        json parsed;
        try {
            parsed = json::parse(read_text_file(options.config_file));
        } catch (const json::exception& e) {
            throw UsageError("config file " + options.config_file.string() +
                             " is not valid JSON: " + e.what());
        }
        if (!parsed.is_object())
            throw UsageError("config file must contain a JSON object");
        for (const auto& [key, item] : parsed.items()) {
            if (key == "run") {
                options.run = RunConfig::from_json(item);
            } else if (key == "provider") {
                if (!item.is_object()) throw UsageError("config key 'provider' must be an object");
                if (item.contains("endpoint")) options.endpoint = item.at("endpoint").get<std::string>();
                if (item.contains("model")) options.model = item.at("model").get<std::string>();
            } else {
                throw UsageError("unknown config key '" + key + "'");
            }
        }
    }

    for (std::size_t i = start; i < args.size(); ++i) {
        const std::string& a = args[i];
        const auto value = [&]() -> const std::string& {
            if (i + 1 >= args.size()) throw UsageError("flag '" + a + "' requires a value");
            return args[++i];
        };

        if (a == "--config") { ++i; continue; }  // consumed in the first pass
        else if (a == "-e" || a == "--external-gen") options.run.enable_external_gen = true;
        else if (a == "-p" || a == "--project") options.run.project_path = value();
        else if (a == "-d" || a == "--debug") options.run.debug = true;
        else if (a == "-t" || a == "--llm-tests") options.run.enable_llm_tests = true;
        else if (a == "-r" || a == "--coverage") options.run.coverage_report = true;
        else if (a == "-n" || a == "--retries") options.run.budget = parse_int_flag(a, value());
        else if (a == "-s" || a == "--static-analysis") options.run.static_analysis = true;
        else if (a == "-mut" || a == "--mutation") options.run.mutation = true;
        else if (a == "-temp" || a == "--temperature")
            options.run.base_temperature = parse_double_flag(a, value());
        else if (a == "-ts" || a == "--test-suite") options.run.given_suite_path = value();
        else if (a == "-depth" || a == "--dependency-depth")
            options.run.dependency_depth = parse_int_flag(a, value());
        else if (a == "-m" || a == "--external-gen-minutes")
            options.run.external_gen_minutes = parse_int_flag(a, value());
        else if (a == "--out") options.out_dir = value();
        else if (a == "--problems") options.problems_file = value();
        else if (a == "--problem") options.problem_id = value();
        else if (a == "--samples") options.samples = parse_int_flag(a, value());
        else if (a == "--workers") options.workers = parse_int_flag(a, value());
        else if (a == "--max-k") options.max_k = parse_int_flag(a, value());
        else if (a == "--toolchain") options.toolchain_file = value();
        else if (a == "--scripted") options.scripted_file = value();
        else if (a == "--record") options.provider_mode = "record";
        else if (a == "--replay") options.provider_mode = "replay";
        else if (a == "--endpoint") options.endpoint = value();
        else if (a == "--model") options.model = value();
        else if (a == "--transcripts") options.transcripts_dir = value();
        else if (a == "--templates") options.template_dir = value();
        else if (a == "-h" || a == "--help") options.command = "help";
        else if (!a.empty() && a[0] == '-') throw UsageError("unknown flag '" + a + "'");
        else if (options.command == "aggregate" || options.command == "passk")
            options.inputs.emplace_back(a);
        else throw UsageError("unexpected argument '" + a + "'");
    }

    options.run.validate();
    if (options.samples < 1) throw UsageError("--samples must be >= 1");
    if (options.workers < 1) throw UsageError("--workers must be >= 1");
    if (options.max_k < 0) throw UsageError("--max-k must be >= 0");
    return options;
}

std::string usage_text() {
    return R"(llmloop - iterative feedback-loop code improvement

usage:
  llmloop [run] [flags]        improve one problem or an existing project
  llmloop bench [flags]        run a problem-set benchmark
  llmloop aggregate FILES...   merge result.json files into stage_stats.csv
  llmloop passk FILE           compute a pass@k curve from a result.json
  llmloop help                 show this text

flags:
  -e,     --external-gen             enable the external test generator
  -p,     --project DIR              start from an existing project (copied, never mutated)
  -d,     --debug                    verbose output (dependency depth is -depth, not -d)
  -t,     --llm-tests                enable model test generation (temperature is -temp, not -t)
  -r,     --coverage                 emit a coverage report if the toolchain defines one
  -n,     --retries N                attempts per feedback loop (default 5)
  -s,     --static-analysis          enable the static-analysis loop
  -mut,   --mutation                 enable mutation analysis of generated suites
  -temp,  --temperature X            base sampling temperature (default 0.0, range [0, 2])
  -ts,    --test-suite DIR           given test suite for -p runs
  -depth, --dependency-depth N       dependency depth forwarded to toolchain commands
  -m,     --external-gen-minutes N   external generator time budget (default 2)

options:
  --config FILE      JSON config: {"run": {...}, "provider": {"endpoint", "model"}}
  --out DIR          output root (default ./results)
  --problems FILE    problem-set JSON: array of {id, prompt, declaration,
                     example_tests, validation_tests}
  --problem ID       select one problem from --problems (default: first)
  --samples N        benchmark samples per problem (default 1)
  --workers N        concurrent runs in bench mode (default 1)
  --max-k N          pass@k curve upper k (default: samples)
  --toolchain FILE   command-based toolchain config (JSON)
  --scripted FILE    scripted toolchain outcomes (JSON, for fixtures)
  --record           record provider traffic under OUT/transcripts/
  --replay           replay recorded traffic without network access
  --transcripts DIR  transcript source for --replay (default OUT/transcripts)
  --endpoint URL     chat-completions endpoint for live runs
  --model NAME       model name for live runs
  --templates DIR    prompt template overrides

environment:
  LLMLOOP_API_KEY    bearer token for the live provider

exit codes:
  0  the run (or at least one benchmark sample) reached a compiling,
     given-test-green state
  1  it did not
  2  usage error
  3  runtime error
)";
}

// ---------------------------------------------------------------------------
// Workspace lifecycle.

Workspace init_workspace(const RunConfig& config, const std::filesystem::path& dest_root) {
    Workspace workspace;
    workspace.root = dest_root;
    workspace.log_dir = dest_root / "logs";
    std::error_code ec;
    std::filesystem::create_directories(dest_root, ec);
    if (ec) throw SetupError("cannot create workspace at " + dest_root.string());

    if (!config.project_path.empty()) {
        const std::filesystem::path source = config.project_path;
        if (!std::filesystem::exists(source) || !std::filesystem::is_directory(source))
            throw SetupError("project path " + source.string() +
                             " does not exist or is not a directory");
        std::filesystem::copy(source, dest_root,
                              std::filesystem::copy_options::recursive |
                                  std::filesystem::copy_options::overwrite_existing);
        CodeBundle seed;
        for (const auto& rel : list_files_recursive(dest_root)) {
            if (rel.starts_with("src/") || rel.starts_with("tests/llm/"))
                seed.files[rel] = read_text_file(dest_root / rel);
        }
        if (!seed.has_source())
            throw SetupError("project " + source.string() + " contains no src/ files");
        workspace.seed = std::move(seed);
    }

    for (const char* sub : {"src", "tests/given", "tests/llm", "tests/ext", "logs"})
        std::filesystem::create_directories(dest_root / sub);

    if (!config.given_suite_path.empty()) {
        const std::filesystem::path suite = config.given_suite_path;
        if (!std::filesystem::exists(suite) || !std::filesystem::is_directory(suite))
            throw SetupError("given suite path " + suite.string() +
                             " does not exist or is not a directory");
        std::filesystem::copy(suite, dest_root / "tests" / "given",
                              std::filesystem::copy_options::recursive |
                                  std::filesystem::copy_options::overwrite_existing);
    }

    workspace.given_suite.id = "given";
    workspace.given_suite.dir = dest_root / "tests" / "given";
    workspace.given_suite.files = list_files_recursive(workspace.given_suite.dir);
    return workspace;
}

// ---------------------------------------------------------------------------
// Exit-code contract and result.json ingestion.

bool reached_given_green(const RunRecord& record) {
    for (const auto& outcome : record.outcomes) {
        if (outcome.stage.kind != StageKind::GivenTests) continue;
        return outcome.status == StageStatus::Solved || outcome.status == StageStatus::Unchanged;
    }
    return false;
}

BenchmarkRun parse_result_json(const json& value) {
    if (!value.is_object()) throw SetupError("result.json must be a JSON object");
    BenchmarkRun run;
    for (const auto& [problem_id, samples] : value.items()) {
        run.problem_ids.push_back(problem_id);
        std::vector<SampleResult> parsed;
        for (const auto& sample : samples) {
            SampleResult result;
            result.record.problem_id = problem_id;
            result.record.sample_index = sample.at("sampleIndex").get<int>();
            result.record.validation_passed = sample.at("validationPassed").get<bool>();
            for (const auto& outcome : sample.at("outcomes"))
                result.record.outcomes.push_back(StageOutcome::from_json(outcome));
            for (const auto& [row, passed] : sample.at("graded").items())
                result.graded[row] = passed.get<bool>();
            parsed.push_back(std::move(result));
        }
        if (parsed.empty())
            throw SetupError("problem '" + problem_id + "' has no samples in result.json");
        if (run.problem_ids.size() == 1)
            run.samples_per_problem = static_cast<int>(parsed.size());
        else if (static_cast<int>(parsed.size()) != run.samples_per_problem)
            throw SetupError("problem '" + problem_id + "' has an inconsistent sample count");
        run.results[problem_id] = std::move(parsed);
    }
    if (run.problem_ids.empty()) throw SetupError("result.json contains no problems");

    // Recover the grading-row order from the first sample's stage sequence.
    const auto& outcomes = run.results.at(run.problem_ids.front()).front().record.outcomes;
    for (const auto& outcome : outcomes) {
        std::string row;
        switch (outcome.stage.kind) {
            case StageKind::Baseline: row = "baseline"; break;
            case StageKind::Compile: row = "compile"; break;
            case StageKind::GivenTests: row = "given_tests"; break;
            case StageKind::StaticAnalysis: row = "static_analysis"; break;
            case StageKind::GeneratedTests:
            case StageKind::MutationAnalysis:
                row = outcome.stage.source == TestSource::ExternalGen ? "external_tests"
                                                                      : "llm_tests";
                break;
        }
        if (std::find(run.stage_rows.begin(), run.stage_rows.end(), row) == run.stage_rows.end())
            run.stage_rows.push_back(row);
    }
    return run;
}

// ---------------------------------------------------------------------------
// Provider and toolchain factories.

namespace {

/// Owns the live transport, the transcript and the recording wrapper so the
/// whole record pipeline lives exactly as long as the lease.
class OwningRecorder final : public LlmProvider {
public:
    explicit OwningRecorder(LiveConfig config)
        : inner_(std::move(config)), recorder_(inner_, transcript_, clock_) {}

    CompletionResponse complete(const CompletionRequest& request) override {
        return recorder_.complete(request);
    }

    const Transcript& transcript() const { return transcript_; }

private:
    LiveProvider inner_;
    Transcript transcript_;
    SystemClock clock_;
    RecordingProvider recorder_;
};

ProviderFactory make_provider_factory(const CliOptions& options) {
    const std::string mode = options.provider_mode;
    const std::filesystem::path replay_dir =
        options.transcripts_dir.empty() ? options.out_dir / "transcripts"
                                        : options.transcripts_dir;
    const std::filesystem::path record_dir = options.out_dir / "transcripts";

    LiveConfig live;
    live.endpoint = options.endpoint;
    live.model = options.model;
    if (const char* key = std::getenv("LLMLOOP_API_KEY")) live.api_key = key;
    if (mode != "replay" && (live.endpoint.empty() || live.model.empty()))
        throw UsageError("live provider requires --endpoint and --model "
                         "(or provider.endpoint/provider.model config keys)");

    return [mode, replay_dir, record_dir, live](const std::string& problem_id,
                                                int sample) -> ProviderLease {
        if (mode == "replay") {
            const auto path = replay_dir / problem_id / (std::to_string(sample) + ".json");
            if (!std::filesystem::exists(path))
                throw SetupError("replay transcript not found: " + path.string());
            return {std::make_unique<ReplayProvider>(Transcript::load(path)), {}};
        }
        if (mode == "record") {
            auto recorder = std::make_unique<OwningRecorder>(live);
            OwningRecorder* raw = recorder.get();
            const auto path = record_dir / problem_id / (std::to_string(sample) + ".json");
            return {std::move(recorder), [raw, path] { raw->transcript().save(path); }};
        }
        return {std::make_unique<LiveProvider>(live), {}};
    };
}

ToolchainFactory make_toolchain_factory(const CliOptions& options) {
    if (!options.scripted_file.empty()) {
        const std::filesystem::path path = options.scripted_file;
        return [path](const std::string&, int) -> std::unique_ptr<ToolchainAdapter> {
            return std::make_unique<ScriptedToolchain>(ScriptedToolchain::load(path));
        };
    }
    if (!options.toolchain_file.empty()) {
        json parsed;
        try {
            parsed = json::parse(read_text_file(options.toolchain_file));
        } catch (const json::exception& e) {
            throw SetupError("toolchain config " + options.toolchain_file.string() +
                             " is not valid JSON: " + e.what());
        }
        ToolConfig config = ToolConfig::from_json(parsed);
        if (options.run.dependency_depth > 0)
            config.dependency_depth = options.run.dependency_depth;
        return [config](const std::string&, int) -> std::unique_ptr<ToolchainAdapter> {
            return std::make_unique<CommandToolchain>(config);
        };
    }
    throw UsageError("no toolchain configured: pass --toolchain FILE or --scripted FILE");
}

BenchmarkConfig make_benchmark_config(const CliOptions& options, int samples, int workers) {
    BenchmarkConfig config;
    config.pipeline = pipeline_config(options.run);
    config.template_dir = options.template_dir;
    config.samples_per_problem = samples;
    config.workers = workers;
    config.work_root = options.out_dir / "work";
    config.results_dir = options.out_dir;
    config.log_dir = options.out_dir / "framework_logs";
    return config;
}

void print_outcomes(const RunRecord& record, std::ostream& out) {
    for (const auto& outcome : record.outcomes) {
        out << "  " << outcome.stage.name() << ": " << stage_status_name(outcome.status);
        if (outcome.attempts_used > 0) out << " (attempts " << outcome.attempts_used << ")";
        if (!outcome.detail.empty()) out << " - " << outcome.detail;
        out << "\n";
    }
}

void maybe_coverage(const CliOptions& options, const std::filesystem::path& workdir,
                    std::ostream& out, std::ostream& err) {
    if (!options.run.coverage_report) return;
    ToolConfig config;
    bool have_command = false;
    if (!options.toolchain_file.empty()) {
        config = ToolConfig::from_json(json::parse(read_text_file(options.toolchain_file)));
        have_command = !config.coverage_cmd.empty();
    }
    if (!have_command) {
        err << "coverage report requested, but the toolchain defines no coverage command; "
               "skipping\n";
        return;
    }
    std::vector<std::string> argv = config.command_prefix;
    for (std::string arg : config.coverage_cmd) {
        const std::string placeholder = "{workdir}";
        for (std::size_t at = arg.find(placeholder); at != std::string::npos;
             at = arg.find(placeholder, at))
            arg.replace(at, placeholder.size(), workdir.string());
        argv.push_back(std::move(arg));
    }
    const ExecResult result = run_command(argv, workdir, config.test_timeout_s);
    const auto report_path = options.out_dir / "coverage_report.txt";
    write_text_file(report_path, result.stdout_text + result.stderr_text);
    out << "coverage report: " << report_path.string() << "\n";
}

int cmd_run(const CliOptions& options, std::ostream& out, std::ostream& err) {
    if (!options.problems_file.empty()) {
        const auto specs = load_problem_set(options.problems_file);
        if (specs.empty()) throw SetupError("problem set is empty");
        ProblemSpec selected = specs.front();
        if (!options.problem_id.empty()) {
            bool found = false;
            for (const auto& spec : specs) {
                if (spec.id == options.problem_id) {
                    selected = spec;
                    found = true;
                    break;
                }
            }
            if (!found)
                throw SetupError("problem '" + options.problem_id + "' not found in " +
                                 options.problems_file.string());
        }

        const BenchmarkConfig config = make_benchmark_config(options, 1, 1);
        const BenchmarkRun bench = run_benchmark({selected}, config,
                                                 make_provider_factory(options),
                                                 make_toolchain_factory(options));
        write_benchmark_reports(bench, options.out_dir);
        const RunRecord& record = bench.results.at(selected.id).front().record;

        out << "run record: " << (options.out_dir / selected.id / "0" / "run.json").string()
            << "\n";
        if (options.provider_mode == "record")
            out << "transcript: "
                << (options.out_dir / "transcripts" / selected.id / "0.json").string() << "\n";
        if (options.run.debug) print_outcomes(record, out);
        maybe_coverage(options, config.work_root / "runs" / selected.id / "s0" / "work", out,
                       err);
        return reached_given_green(record) ? kExitSolved : kExitUnsolved;
    }

    if (!options.run.project_path.empty()) {
        const Workspace workspace = init_workspace(options.run, options.out_dir / "workspace");
        auto toolchain = make_toolchain_factory(options)("project", 0);
        ProviderLease lease = make_provider_factory(options)("project", 0);
        LogicalClock clock;

        Orchestrator::Options orchestrator_options;
        orchestrator_options.config = pipeline_config(options.run);
        orchestrator_options.workdir = workspace.root;
        orchestrator_options.seed_bundle = workspace.seed;
        orchestrator_options.log_path =
            options.out_dir / "framework_logs" / "project_s0.log";

        Problem problem;
        problem.id = "project";
        problem.example_suite = workspace.given_suite;

        TemplateStore store = options.template_dir.empty() ? TemplateStore()
                                                           : TemplateStore(options.template_dir);
        Orchestrator orchestrator(std::move(orchestrator_options), *lease.provider, *toolchain,
                                  PromptBuilder(store, PromptOptions{}), clock);
        RunRecord record;
        try {
            record = orchestrator.run(problem);
        } catch (...) {
            if (lease.finalize) lease.finalize();
            throw;
        }
        if (lease.finalize) lease.finalize();

        write_run_artifacts(record, options.out_dir / "project" / "0");
        out << "run record: " << (options.out_dir / "project" / "0" / "run.json").string()
            << "\n";
        if (options.provider_mode == "record")
            out << "transcript: "
                << (options.out_dir / "transcripts" / "project" / "0.json").string() << "\n";
        if (options.run.debug) print_outcomes(record, out);
        maybe_coverage(options, workspace.root, out, err);
        return reached_given_green(record) ? kExitSolved : kExitUnsolved;
    }

    throw UsageError("run requires --problems FILE or -p/--project DIR");
}

int cmd_bench(const CliOptions& options, std::ostream& out, std::ostream&) {
    if (options.problems_file.empty()) throw UsageError("bench requires --problems FILE");
    const auto specs = load_problem_set(options.problems_file);
    if (specs.empty()) throw SetupError("problem set is empty");

    const BenchmarkConfig config =
        make_benchmark_config(options, options.samples, options.workers);
    const BenchmarkRun bench = run_benchmark(specs, config, make_provider_factory(options),
                                             make_toolchain_factory(options));
    write_benchmark_reports(bench, options.out_dir);

    out << "results: " << (options.out_dir / "result.json").string() << "\n";
    out << "stage stats: " << (options.out_dir / "stage_stats.csv").string() << "\n";
    out << "pass@k: " << (options.out_dir / "pass_k.csv").string() << "\n";
    if (options.run.debug) {
        for (const auto& id : bench.problem_ids)
            for (const auto& sample : bench.results.at(id)) print_outcomes(sample.record, out);
    }

    for (const auto& id : bench.problem_ids)
        for (const auto& sample : bench.results.at(id))
            if (reached_given_green(sample.record)) return kExitSolved;
    return kExitUnsolved;
}

int cmd_aggregate(const CliOptions& options, std::ostream& out, std::ostream&) {
    if (options.inputs.empty())
        throw UsageError("aggregate requires at least one result.json path");
    std::vector<BenchmarkRun> runs;
    for (const auto& path : options.inputs)
        runs.push_back(parse_result_json(json::parse(read_text_file(path))));
    const std::string csv = stage_stats_csv(aggregate_stages(runs));
    out << csv;
    std::filesystem::create_directories(options.out_dir);
    write_text_file(options.out_dir / "stage_stats.csv", csv);
    return kExitSolved;
}

int cmd_passk(const CliOptions& options, std::ostream& out, std::ostream&) {
    if (options.inputs.size() != 1)
        throw UsageError("passk requires exactly one result.json path");
    const BenchmarkRun run = parse_result_json(json::parse(read_text_file(options.inputs[0])));
    const std::string csv = pass_k_csv(pass_k_curve(run, options.max_k));
    out << csv;
    std::filesystem::create_directories(options.out_dir);
    write_text_file(options.out_dir / "pass_k.csv", csv);
    return kExitSolved;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CliOptions options;
    try {
        options = parse_args(args);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n\n" << usage_text();
        return kExitUsage;
    }

    try {
        if (options.command == "help") {
            out << usage_text();
            return kExitSolved;
        }
        if (options.command == "run") return cmd_run(options, out, err);
        if (options.command == "bench") return cmd_bench(options, out, err);
        if (options.command == "aggregate") return cmd_aggregate(options, out, err);
        if (options.command == "passk") return cmd_passk(options, out, err);
        err << "error: unknown command '" << options.command << "'\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

}  // namespace llmloop
