#include "llmloop/pipeline.hpp"

#include <algorithm>
#include <functional>

namespace llmloop {

// ---------------------------------------------------------------------------
// Stage names and statuses.

std::string StageId::name() const {
    std::string base;
    switch (kind) {
        case StageKind::Baseline: return "baseline";
        case StageKind::Compile: return "compile";
        case StageKind::GivenTests: return "given_tests";
        case StageKind::StaticAnalysis: return "static_analysis";
        case StageKind::GeneratedTests: base = "generated_tests"; break;
        case StageKind::MutationAnalysis: base = "mutation"; break;
    }
    switch (source) {
        case TestSource::None: return base;
        case TestSource::LlmGen: return base + ":llm";
        case TestSource::ExternalGen: return base + ":external";
    }
    return base;
}

std::string stage_status_name(StageStatus status) {
    switch (status) {
        case StageStatus::Solved: return "solved";
        case StageStatus::Improved: return "improved";
        case StageStatus::Unchanged: return "unchanged";
        case StageStatus::BudgetExhausted: return "budget_exhausted";
        case StageStatus::Aborted: return "aborted";
    }
    return "unchanged";
}

StageStatus stage_status_from_name(const std::string& name) {
    if (name == "solved") return StageStatus::Solved;
    if (name == "improved") return StageStatus::Improved;
    if (name == "unchanged") return StageStatus::Unchanged;
    if (name == "budget_exhausted") return StageStatus::BudgetExhausted;
    if (name == "aborted") return StageStatus::Aborted;
    throw SetupError("unknown stage status '" + name + "'");
}

StageId stage_id_from_name(const std::string& name) {
    for (StageKind kind : {StageKind::Baseline, StageKind::Compile, StageKind::GivenTests,
                           StageKind::StaticAnalysis, StageKind::GeneratedTests,
                           StageKind::MutationAnalysis}) {
        for (TestSource source : {TestSource::None, TestSource::LlmGen, TestSource::ExternalGen}) {
            const StageId id{kind, source};
            if (id.name() == name) return id;
        }
    }
    throw SetupError("unknown stage name '" + name + "'");
}

StageOutcome StageOutcome::from_json(const json& value) {
    StageOutcome out;
    out.stage = stage_id_from_name(value.at("stage").get<std::string>());
    out.status = stage_status_from_name(value.at("status").get<std::string>());
    out.attempts_used = value.at("attemptsUsed").get<int>();
    out.duration_ms = value.at("durationMs").get<std::int64_t>();
    out.detail = value.at("detail").get<std::string>();
    return out;
}

json StageOutcome::to_json() const {
    return {{"stage", stage.name()},
            {"status", stage_status_name(status)},
            {"attemptsUsed", attempts_used},
            {"durationMs", duration_ms},
            {"detail", detail}};
}

json RunRecord::to_json() const {
    json outcome_list = json::array();
    for (const auto& o : outcomes) outcome_list.push_back(o.to_json());

    json snapshot_map = json::object();
    for (const auto& [version, bundle] : snapshots)
        snapshot_map[std::to_string(version)] = bundle.to_json();

    json checkpoint_list = json::array();
    for (const auto& [name, version] : checkpoints)
        checkpoint_list.push_back(json::array({name, version}));

    json mutation = json::object();
    for (const auto& [source, report] : mutation_reports) mutation[source] = report.to_json();

    return {{"problemId", problem_id},
            {"sampleIndex", sample_index},
            {"outcomes", outcome_list},
            {"finalBundle", final_bundle.to_json()},
            {"validationPassed", validation_passed},
            {"checkpoints", checkpoint_list},
            {"snapshots", snapshot_map},
            {"mutation", mutation}};
}

// ---------------------------------------------------------------------------
// Workspace materialization and artifacts.

void materialize_bundle(const std::filesystem::path& workdir, const CodeBundle& bundle) {
    std::filesystem::remove_all(workdir / "src");
    std::filesystem::remove_all(workdir / "tests" / "llm");
    std::filesystem::create_directories(workdir);
    for (const auto& [path, text] : bundle.files) write_text_file(workdir / path, text);
}

void write_run_artifacts(const RunRecord& record, const std::filesystem::path& dir) {
    write_text_file(dir / "run.json", canonical_dump(record.to_json()));
    for (const auto& [version, bundle] : record.snapshots) {
        const auto snapshot_dir = dir / "snapshots" / ("v" + std::to_string(version));
        for (const auto& [path, text] : bundle.files) write_text_file(snapshot_dir / path, text);
    }
    if (!record.mutation_reports.empty()) {
        json mutation = json::object();
        for (const auto& [source, report] : record.mutation_reports)
            mutation[source] = report.to_json();
        write_text_file(dir / "mutation.json", canonical_dump(mutation));
    }
}

// ---------------------------------------------------------------------------
// Orchestrator.

Orchestrator::Orchestrator(Options options, LlmProvider& provider, ToolchainAdapter& toolchain,
                           PromptBuilder builder, Clock& clock)
    : options_(std::move(options)),
      provider_(&provider),
      toolchain_(&toolchain),
      builder_(std::move(builder)),
      clock_(&clock) {
    if (options_.config.budget < 1) throw SetupError("pipeline budget must be >= 1");
    if (options_.config.base_temperature < 0.0 || options_.config.base_temperature > 2.0)
        throw SetupError("base temperature must be within [0, 2]");
    if (!options_.log_path.empty()) {
        std::filesystem::create_directories(options_.log_path.parent_path());
        log_file_.open(options_.log_path, std::ios::out | std::ios::trunc);
    }
}

void Orchestrator::log(const std::string& line) {
    if (log_file_.is_open()) {
        log_file_ << line << '\n';
        log_file_.flush();
    }
}

std::optional<CodeBundle> Orchestrator::call_for_bundle(CompletionRequest request,
                                                        double temperature,
                                                        const std::string& stage_label,
                                                        std::string& failure_detail) {
    request.temperature = temperature;
    request.max_tokens = options_.config.max_tokens;
    request.tag = stage_label + "/" + request.tag;

    const auto call = [&](const CompletionRequest& r) -> std::optional<CompletionResponse> {
        ++provider_calls_;
        if (call_cap_ > 0 && provider_calls_ > call_cap_)
            throw Error("provider call cap exceeded: " + std::to_string(provider_calls_));
        try {
            return provider_->complete(r);
        } catch (const ProviderError& e) {
            failure_detail = e.what();
            log("[" + stage_label + "] provider error: " + failure_detail);
            return std::nullopt;
        }
    };

    auto response = call(request);
    if (!response) return std::nullopt;
    try {
        return parse_response(response->text);
    } catch (const ResponseParseError& e) {
        log("[" + stage_label + "] malformed response: " + std::string(e.what()));
        const CompletionRequest repair = builder_.repair_prompt(request, response->text, e.what());
        response = call(repair);
        if (!response) return std::nullopt;
        try {
            return parse_response(response->text);
        } catch (const ResponseParseError& e2) {
            failure_detail = std::string("malformed response after repair: ") + e2.what();
            log("[" + stage_label + "] " + failure_detail);
            return std::nullopt;
        }
    }
}

void Orchestrator::commit_code(const CodeBundle& update) {
    bundle_.merge_from(update);
    ++version_;
    current_version_ = version_;
    snapshots_[version_] = bundle_;
    version_info_[version_] = {};
    materialize_bundle(options_.workdir, bundle_);
}

void Orchestrator::commit_tests(const CodeBundle& update) {
    bundle_.merge_from(update);
    if (snapshots_.count(current_version_)) snapshots_[current_version_] = bundle_;
    materialize_bundle(options_.workdir, bundle_);
}

bool Orchestrator::suite_green(const TestSuiteRef& suite, std::vector<TestResult>* results,
                               std::int64_t* elapsed_ms) {
    const std::int64_t t0 = clock_->now_ms();
    auto run = toolchain_->run_tests(options_.workdir, suite);
    const std::int64_t t1 = clock_->now_ms();
    if (elapsed_ms) *elapsed_ms = t1 - t0;
    const bool green = std::none_of(run.begin(), run.end(),
                                    [](const TestResult& r) { return r.failed(); });
    if (results) *results = std::move(run);
    return green;
}

bool Orchestrator::try_guarded_code_edit(const CodeBundle& update, const TestSuiteRef& given_suite,
                                         bool guard_given, std::string& reject_reason) {
    CodeBundle candidate = bundle_;
    candidate.merge_from(update);
    materialize_bundle(options_.workdir, candidate);

    const CompileOutcome compiled = toolchain_->compile(options_.workdir);
    if (!compiled.ok) {
        materialize_bundle(options_.workdir, bundle_);
        reject_reason = "edit broke compilation; reverted";
        return false;
    }
    if (guard_given && !given_suite.empty() && !suite_green(given_suite)) {
        materialize_bundle(options_.workdir, bundle_);
        reject_reason = "edit broke given tests; reverted";
        return false;
    }

    bundle_ = std::move(candidate);
    ++version_;
    current_version_ = version_;
    snapshots_[version_] = bundle_;
    version_info_[version_] = {true, guard_given};
    compile_ok_ = true;
    return true;
}

int Orchestrator::best_version() const {
    int best_green = 0;
    int best_compiled = 0;
    for (const auto& [version, info] : version_info_) {
        if (info.compile_ok && info.given_green) best_green = std::max(best_green, version);
        if (info.compile_ok) best_compiled = std::max(best_compiled, version);
    }
    if (best_green > 0) return best_green;
    if (best_compiled > 0) return best_compiled;
    return snapshots_.empty() ? 0 : snapshots_.rbegin()->first;
}

void Orchestrator::restore_best_known_good() {
    const int best = best_version();
    if (best == 0 || best == current_version_) return;
    bundle_ = snapshots_.at(best);
    current_version_ = best;
    const auto& info = version_info_.at(best);
    compile_ok_ = info.compile_ok;
    given_green_ = info.given_green;
    materialize_bundle(options_.workdir, bundle_);
    log("[pipeline] restored best known good snapshot v" + std::to_string(best));
}

TestSuiteRef Orchestrator::llm_suite() const {
    TestSuiteRef suite;
    suite.id = "llm";
    suite.dir = options_.workdir / "tests" / "llm";
    for (const auto& path : bundle_.paths_under("tests/llm/"))
        suite.files.push_back(path.substr(std::string("tests/llm/").size()));
    return suite;
}

// ---------------------------------------------------------------------------
// Stage: Compile (includes the initial generation attempt).

StageOutcome Orchestrator::compile_stage(const Problem& problem, int& baseline_version) {
    StageOutcome out;
    out.stage = {StageKind::Compile};
    const std::int64_t start = clock_->now_ms();
    const TemperatureSchedule schedule{options_.config.base_temperature};
    const int budget = options_.config.budget;
    int attempts = 0;
    std::string failure_detail;
    baseline_version = 0;

    if (options_.seed_bundle) {
        commit_code(*options_.seed_bundle);
        baseline_version = current_version_;
    } else {
        // The initial generation call is the first attempt of this stage.
        while (attempts < budget && version_ == 0) {
            const double temperature = schedule.value(attempts);
            auto parsed = call_for_bundle(builder_.initial_prompt(problem.prompt,
                                                                  problem.declaration),
                                          temperature, "compile", failure_detail);
            ++attempts;
            if (!parsed) continue;
            if (!parsed->has_source()) {
                failure_detail = "response contained no src/ files";
                log("[compile] " + failure_detail);
                continue;
            }
            commit_code(*parsed);
            baseline_version = current_version_;
        }
        if (version_ == 0) {
            out.status = StageStatus::BudgetExhausted;
            out.attempts_used = attempts;
            out.detail = "no parsable bundle produced: " + failure_detail;
            out.duration_ms = clock_->now_ms() - start;
            compile_ok_ = false;
            return out;
        }
    }

    CompileOutcome compiled = toolchain_->compile(options_.workdir);
    version_info_[current_version_].compile_ok = compiled.ok;
    while (!compiled.ok) {
        if (attempts >= budget) {
            compile_ok_ = false;
            out.status = StageStatus::BudgetExhausted;
            out.attempts_used = attempts;
            out.detail = std::to_string(compiled.diagnostics.size()) + " diagnostics remain";
            out.duration_ms = clock_->now_ms() - start;
            return out;
        }
        const double temperature = schedule.value(attempts);
        const FeedbackPayload feedback =
            compile_feedback(compiled.diagnostics, builder_.options().limits);
        auto parsed = call_for_bundle(builder_.fix_prompt(bundle_, feedback, FixTarget::CodeOnly),
                                      temperature, "compile", failure_detail);
        ++attempts;
        if (!parsed) continue;
        if (const auto violations = scope_violations(*parsed, FixTarget::CodeOnly);
            !violations.empty()) {
            log("[compile] edit rejected: touches test files (" + violations.front() + ")");
            continue;
        }
        commit_code(*parsed);
        compiled = toolchain_->compile(options_.workdir);
        version_info_[current_version_].compile_ok = compiled.ok;
    }

    compile_ok_ = true;
    out.status = options_.seed_bundle && attempts == 0 ? StageStatus::Unchanged
                                                       : StageStatus::Solved;
    out.attempts_used = attempts;
    out.detail = options_.seed_bundle && attempts == 0 ? "seed bundle compiles"
                                                       : "compiled as v" +
                                                             std::to_string(current_version_);
    out.duration_ms = clock_->now_ms() - start;
    return out;
}

// ---------------------------------------------------------------------------
// Stage: GivenTests (code-only fixes; a non-compiling edit is kept and the
// next attempt receives compiler diagnostics, re-entering the compile fix
// cycle inside this stage's budget).

StageOutcome Orchestrator::given_tests_stage(const Problem& problem) {
    StageOutcome out;
    out.stage = {StageKind::GivenTests};
    const std::int64_t start = clock_->now_ms();
    const auto& suite = problem.example_suite;

    if (suite.empty()) {
        given_green_ = true;
        version_info_[current_version_].given_green = true;
        out.status = StageStatus::Unchanged;
        out.detail = "no given tests";
        out.duration_ms = clock_->now_ms() - start;
        return out;
    }

    std::vector<TestResult> results;
    bool green = suite_green(suite, &results);
    version_info_[current_version_].given_green = green;
    if (green) {
        given_green_ = true;
        out.status = StageStatus::Unchanged;
        out.detail = "all given tests pass";
        out.duration_ms = clock_->now_ms() - start;
        return out;
    }

    const TemperatureSchedule schedule{options_.config.base_temperature};
    const int budget = options_.config.budget;
    int attempts = 0;
    std::string failure_detail;
    FeedbackPayload feedback = test_feedback(results, builder_.options().limits);

    while (attempts < budget) {
        const double temperature = schedule.value(attempts);
        auto parsed = call_for_bundle(builder_.fix_prompt(bundle_, feedback, FixTarget::CodeOnly),
                                      temperature, "given_tests", failure_detail);
        ++attempts;
        if (!parsed) continue;
        if (const auto violations = scope_violations(*parsed, FixTarget::CodeOnly);
            !violations.empty()) {
            log("[given_tests] edit rejected: touches test files (" + violations.front() + ")");
            failure_detail = "edit touched test files";
            continue;
        }
        commit_code(*parsed);
        const CompileOutcome compiled = toolchain_->compile(options_.workdir);
        version_info_[current_version_].compile_ok = compiled.ok;
        if (!compiled.ok) {
            compile_ok_ = false;
            feedback = compile_feedback(compiled.diagnostics, builder_.options().limits);
            continue;
        }
        compile_ok_ = true;
        green = suite_green(suite, &results);
        version_info_[current_version_].given_green = green;
        if (green) {
            given_green_ = true;
            out.status = StageStatus::Solved;
            out.attempts_used = attempts;
            out.detail = "given tests pass as v" + std::to_string(current_version_);
            out.duration_ms = clock_->now_ms() - start;
            return out;
        }
        feedback = test_feedback(results, builder_.options().limits);
    }

    given_green_ = false;
    std::size_t failing = 0;
    for (const auto& r : results)
        if (r.failed()) ++failing;
    out.status = StageStatus::BudgetExhausted;
    out.attempts_used = attempts;
    out.detail = compile_ok_ ? std::to_string(failing) + " given tests still failing"
                             : "last edit does not compile";
    restore_best_known_good();
    out.duration_ms = clock_->now_ms() - start;
    return out;
}

// ---------------------------------------------------------------------------
// Stage: StaticAnalysis (code-only fixes behind the regression guard).

StageOutcome Orchestrator::static_analysis_stage(const Problem& problem) {
    StageOutcome out;
    out.stage = {StageKind::StaticAnalysis};
    const std::int64_t start = clock_->now_ms();

    if (!toolchain_->analyzer_available()) {
        out.status = StageStatus::Unchanged;
        out.detail = "analyzer unavailable";
        out.duration_ms = clock_->now_ms() - start;
        return out;
    }

    std::vector<Violation> violations;
    try {
        violations = toolchain_->analyze(options_.workdir);
    } catch (const Error& e) {
        out.status = StageStatus::Unchanged;
        out.detail = "analyzer failed";
        log("[static_analysis] " + std::string(e.what()));
        out.duration_ms = clock_->now_ms() - start;
        return out;
    }
    if (violations.empty()) {
        out.status = StageStatus::Unchanged;
        out.detail = "no violations";
        out.duration_ms = clock_->now_ms() - start;
        return out;
    }

    const TemperatureSchedule schedule{options_.config.base_temperature};
    const int budget = options_.config.budget;
    const bool guard_given = given_green_;
    int attempts = 0;
    std::string failure_detail;

    while (attempts < budget) {
        const FeedbackPayload feedback = violation_feedback(violations, builder_.options().limits);
        const double temperature = schedule.value(attempts);
        auto parsed = call_for_bundle(builder_.fix_prompt(bundle_, feedback, FixTarget::CodeOnly),
                                      temperature, "static_analysis", failure_detail);
        ++attempts;
        if (!parsed) continue;
        if (const auto scope = scope_violations(*parsed, FixTarget::CodeOnly); !scope.empty()) {
            log("[static_analysis] edit rejected: touches test files (" + scope.front() + ")");
            continue;
        }
        std::string reject;
        if (!try_guarded_code_edit(*parsed, problem.example_suite, guard_given, reject)) {
            log("[static_analysis] " + reject);
            continue;
        }
        try {
            violations = toolchain_->analyze(options_.workdir);
        } catch (const Error& e) {
            out.status = StageStatus::Unchanged;
            out.detail = "analyzer failed";
            out.attempts_used = attempts;
            log("[static_analysis] " + std::string(e.what()));
            out.duration_ms = clock_->now_ms() - start;
            return out;
        }
        if (violations.empty()) {
            out.status = StageStatus::Solved;
            out.attempts_used = attempts;
            out.detail = "no violations remain as v" + std::to_string(current_version_);
            out.duration_ms = clock_->now_ms() - start;
            return out;
        }
    }

    out.status = StageStatus::BudgetExhausted;
    out.attempts_used = attempts;
    out.detail = std::to_string(violations.size()) + " violations remain";
    out.duration_ms = clock_->now_ms() - start;
    return out;
}

// ---------------------------------------------------------------------------
// Stage: GeneratedTests via the model (fixes may change code or tests).

StageOutcome Orchestrator::llm_testgen_stage(const Problem& problem,
                                             std::optional<TestSuiteRef>& suite_out) {
    StageOutcome out;
    out.stage = {StageKind::GeneratedTests, TestSource::LlmGen};
    const std::int64_t start = clock_->now_ms();
    const TemperatureSchedule schedule{options_.config.base_temperature};
    const int budget = options_.config.budget;
    int attempts = 0;
    std::string failure_detail;

    bool have_tests = false;
    while (attempts < budget && !have_tests) {
        const double temperature = schedule.value(attempts);
        auto parsed = call_for_bundle(builder_.testgen_prompt(bundle_), temperature,
                                      "generated_tests:llm", failure_detail);
        ++attempts;
        if (!parsed) continue;
        CodeBundle tests_only;
        for (const auto& [path, text] : parsed->files)
            if (path.starts_with("tests/llm/")) tests_only.files[path] = text;
        if (tests_only.files.empty()) {
            failure_detail = "response contained no tests/llm files";
            log("[generated_tests:llm] " + failure_detail);
            continue;
        }
        if (parsed->files.size() != tests_only.files.size())
            log("[generated_tests:llm] non-test files in a generation response were ignored");
        commit_tests(tests_only);
        have_tests = true;
    }
    if (!have_tests) {
        out.status = StageStatus::BudgetExhausted;
        out.attempts_used = attempts;
        out.detail = "no test suite generated: " + failure_detail;
        out.duration_ms = clock_->now_ms() - start;
        return out;
    }

    suite_out = llm_suite();
    std::vector<TestResult> results;
    bool green = suite_green(*suite_out, &results);
    if (green) {
        out.status = StageStatus::Solved;
        out.attempts_used = attempts;
        out.detail = std::to_string(suite_out->files.size()) + " generated tests, all pass";
        out.duration_ms = clock_->now_ms() - start;
        return out;
    }

    while (attempts < budget) {
        const FeedbackPayload feedback = test_feedback(results, builder_.options().limits);
        const double temperature = schedule.value(attempts);
        auto parsed = call_for_bundle(builder_.fix_prompt(bundle_, feedback,
                                                          FixTarget::CodeOrTests),
                                      temperature, "generated_tests:llm", failure_detail);
        ++attempts;
        if (!parsed) continue;

        const bool touches_code = parsed->has_source();
        if (touches_code) {
            std::string reject;
            if (!try_guarded_code_edit(*parsed, problem.example_suite, given_green_, reject)) {
                log("[generated_tests:llm] " + reject);
                continue;
            }
        } else {
            commit_tests(*parsed);  // test-only fix: accepted, no version bump
        }
        suite_out = llm_suite();
        green = suite_green(*suite_out, &results);
        if (green) {
            out.status = StageStatus::Solved;
            out.attempts_used = attempts;
            out.detail = std::to_string(suite_out->files.size()) + " generated tests, all pass";
            out.duration_ms = clock_->now_ms() - start;
            return out;
        }
    }

    std::size_t failing = 0;
    for (const auto& r : results)
        if (r.failed()) ++failing;
    out.status = StageStatus::BudgetExhausted;
    out.attempts_used = attempts;
    out.detail = std::to_string(failing) + " generated tests still failing";
    out.duration_ms = clock_->now_ms() - start;
    return out;
}

// ---------------------------------------------------------------------------
// Stage: GeneratedTests via the external generator.  Its suite runs once as
// a set of regression oracles; failures are recorded, never fed back.

StageOutcome Orchestrator::external_testgen_stage(const Problem&,
                                                  std::optional<TestSuiteRef>& suite_out) {
    StageOutcome out;
    out.stage = {StageKind::GeneratedTests, TestSource::ExternalGen};
    const std::int64_t start = clock_->now_ms();

    if (!toolchain_->generator_available()) {
        out.status = StageStatus::Unchanged;
        out.detail = "external generator unavailable";
        out.duration_ms = clock_->now_ms() - start;
        return out;
    }

    ExternalGenOutcome generated;
    try {
        generated = toolchain_->generate_external_tests(options_.workdir,
                                                        options_.config.external_gen_minutes);
    } catch (const ToolchainUnavailable& e) {
        out.status = StageStatus::Unchanged;
        out.detail = std::string("external generator missing: ") + e.what();
        out.duration_ms = clock_->now_ms() - start;
        return out;
    }
    if (!generated.suite) {
        out.status = StageStatus::Unchanged;
        out.detail = "generator skipped: " + generated.detail;
        out.duration_ms = clock_->now_ms() - start;
        return out;
    }
    if (generated.suite->empty()) {
        out.status = StageStatus::Unchanged;
        out.detail = "generator produced no tests";
        out.duration_ms = clock_->now_ms() - start;
        return out;
    }

    suite_out = generated.suite;
    std::vector<TestResult> results;
    const bool green = suite_green(*suite_out, &results);
    std::size_t failing = 0;
    for (const auto& r : results)
        if (r.failed()) ++failing;
    if (green) {
        out.status = StageStatus::Solved;
        out.detail = std::to_string(suite_out->files.size()) + " external tests, all pass";
    } else {
        out.status = StageStatus::Improved;
        out.detail = std::to_string(suite_out->files.size()) + " external tests, " +
                     std::to_string(failing) + " failing (recorded, not fed back)";
    }
    out.duration_ms = clock_->now_ms() - start;
    return out;
}

// ---------------------------------------------------------------------------
// Stage: MutationAnalysis over one generated suite.

StageOutcome Orchestrator::mutation_stage(const Problem& problem, TestSource source,
                                          const std::optional<TestSuiteRef>& suite) {
    StageOutcome out;
    out.stage = {StageKind::MutationAnalysis, source};
    const std::int64_t start = clock_->now_ms();
    const std::string label = out.stage.name();
    const std::string report_key = source == TestSource::LlmGen ? "llm" : "external";

    if (!suite || suite->empty()) {
        out.status = StageStatus::Unchanged;
        out.detail = "no generated suite";
        out.duration_ms = clock_->now_ms() - start;
        return out;
    }

    std::vector<TestResult> results;
    std::int64_t green_ms = 0;
    if (!suite_green(*suite, &results, &green_ms)) {
        out.status = StageStatus::Unchanged;
        out.detail = "suite not green";
        out.duration_ms = clock_->now_ms() - start;
        return out;
    }

    std::map<std::string, std::string> sources;
    for (const auto& [path, text] : bundle_.files)
        if (path.starts_with("src/")) sources[path] = text;
    std::vector<std::string> warnings;
    std::vector<Mutant> mutants = generate_mutants(sources, options_.config.mutation_profile,
                                                   options_.config.mutation_limits, &warnings);
    for (const auto& w : warnings) log("[" + label + "] " + w);
    if (mutants.empty()) {
        out.status = StageStatus::Unchanged;
        out.detail = "no mutation points";
        out.duration_ms = clock_->now_ms() - start;
        return out;
    }

    const int per_mutant_timeout = default_mutant_timeout_s(green_ms);
    MutationReport report = run_mutation_analysis(options_.workdir, std::move(mutants), *suite,
                                                  *toolchain_, per_mutant_timeout);
    mutation_reports_[report_key] = report;
    const std::size_t initial_survivors = report.survived;

    if (report.survived == 0) {
        out.status = StageStatus::Solved;
        out.detail = "all " + std::to_string(report.mutants.size()) + " mutants addressed";
        out.duration_ms = clock_->now_ms() - start;
        return out;
    }

    const TemperatureSchedule schedule{options_.config.base_temperature};
    const int budget = options_.config.budget;
    int attempts = 0;
    std::string failure_detail;

    while (attempts < budget && report.survived > 0) {
        const FeedbackPayload feedback = survivors_payload(report, builder_.options().limits);
        const double temperature = schedule.value(attempts);
        auto parsed = call_for_bundle(builder_.fix_prompt(bundle_, feedback,
                                                          FixTarget::CodeOrTests),
                                      temperature, label, failure_detail);
        ++attempts;
        if (!parsed) continue;

        if (parsed->has_source()) {
            std::string reject;
            if (!try_guarded_code_edit(*parsed, problem.example_suite, given_green_, reject)) {
                log("[" + label + "] " + reject);
                continue;
            }
        } else {
            // Test-only edit: must keep the suite green on clean code.
            const CodeBundle before = bundle_;
            commit_tests(*parsed);
            if (source == TestSource::LlmGen && !suite_green(llm_suite())) {
                bundle_ = before;
                if (snapshots_.count(current_version_)) snapshots_[current_version_] = bundle_;
                materialize_bundle(options_.workdir, bundle_);
                log("[" + label + "] test edit broke the suite on clean code; reverted");
                continue;
            }
        }

        const TestSuiteRef current_suite = source == TestSource::LlmGen ? llm_suite() : *suite;
        if (!suite_green(current_suite)) {
            out.status = StageStatus::BudgetExhausted;
            out.attempts_used = attempts;
            out.detail = "suite no longer green after an accepted edit";
            out.duration_ms = clock_->now_ms() - start;
            return out;
        }

        sources.clear();
        for (const auto& [path, text] : bundle_.files)
            if (path.starts_with("src/")) sources[path] = text;
        std::vector<Mutant> fresh = generate_mutants(sources, options_.config.mutation_profile,
                                                     options_.config.mutation_limits, nullptr);
        report = run_mutation_analysis(options_.workdir, std::move(fresh), current_suite,
                                       *toolchain_, per_mutant_timeout);
        mutation_reports_[report_key] = report;
    }

    out.attempts_used = attempts;
    out.detail = "survivors: " + std::to_string(initial_survivors) + " initially, " +
                 std::to_string(report.survived) + " remaining";
    out.status = report.survived == 0 ? StageStatus::Solved : StageStatus::BudgetExhausted;
    out.duration_ms = clock_->now_ms() - start;
    return out;
}

// ---------------------------------------------------------------------------
// Orchestration.

RunRecord Orchestrator::run(const Problem& problem) {
    if (!options_.seed_bundle && problem.prompt.empty())
        throw SetupError("problem '" + problem.id + "' has an empty prompt");

    RunRecord record;
    record.problem_id = problem.id;
    record.sample_index = options_.sample_index;
    std::filesystem::create_directories(options_.workdir);
    log("[pipeline] problem " + problem.id + " sample " +
        std::to_string(options_.sample_index));

    const auto& cfg = options_.config;

    // Loop stages that run after Compile, in fixed pipeline order.
    struct Planned {
        StageId id;
        std::function<StageOutcome()> execute;
        std::string checkpoint_after;  // empty = no grading row ends here
    };
    std::optional<TestSuiteRef> llm_suite_ref;
    std::optional<TestSuiteRef> ext_suite_ref;
    std::vector<Planned> plan;
    plan.push_back({{StageKind::GivenTests},
                    [&] { return given_tests_stage(problem); },
                    "given_tests"});
    if (cfg.enable_static_analysis)
        plan.push_back({{StageKind::StaticAnalysis},
                        [&] { return static_analysis_stage(problem); },
                        "static_analysis"});
    if (cfg.enable_llm_tests) {
        plan.push_back({{StageKind::GeneratedTests, TestSource::LlmGen},
                        [&] { return llm_testgen_stage(problem, llm_suite_ref); },
                        cfg.enable_mutation ? "" : "llm_tests"});
        if (cfg.enable_mutation)
            plan.push_back({{StageKind::MutationAnalysis, TestSource::LlmGen},
                            [&] { return mutation_stage(problem, TestSource::LlmGen,
                                                        llm_suite_ref); },
                            "llm_tests"});
    }
    if (cfg.enable_external_gen) {
        plan.push_back({{StageKind::GeneratedTests, TestSource::ExternalGen},
                        [&] { return external_testgen_stage(problem, ext_suite_ref); },
                        cfg.enable_mutation ? "" : "external_tests"});
        if (cfg.enable_mutation)
            plan.push_back({{StageKind::MutationAnalysis, TestSource::ExternalGen},
                            [&] { return mutation_stage(problem, TestSource::ExternalGen,
                                                        ext_suite_ref); },
                            "external_tests"});
    }

    // Provider-call ceiling: one primary plus one repair call per attempt,
    // per loop stage (compile included).
    call_cap_ = static_cast<int>(1 + plan.size()) * cfg.budget * 2;

    int baseline_version = 0;
    StageOutcome compile_out;
    bool fatal = false;
    try {
        compile_out = compile_stage(problem, baseline_version);
    } catch (const ToolchainUnavailable& e) {
        compile_out.stage = {StageKind::Compile};
        compile_out.status = StageStatus::Aborted;
        compile_out.detail = e.what();
        compile_ok_ = false;
        fatal = true;
    }

    StageOutcome baseline_out;
    baseline_out.stage = {StageKind::Baseline};
    baseline_out.status = StageStatus::Unchanged;
    baseline_out.detail = baseline_version > 0
                              ? "initial bundle recorded as v" + std::to_string(baseline_version)
                              : "no bundle parsed";
    record.outcomes.push_back(baseline_out);
    record.checkpoints.emplace_back("baseline", baseline_version);
    record.outcomes.push_back(compile_out);
    record.checkpoints.emplace_back("compile", current_version_);

    bool downstream_aborted = fatal || !compile_ok_;
    std::string abort_reason = fatal ? compile_out.detail : "compilation never succeeded";

    for (const auto& stage : plan) {
        StageOutcome outcome;
        if (downstream_aborted) {
            outcome.stage = stage.id;
            outcome.status = StageStatus::Aborted;
            outcome.detail = abort_reason;
        } else {
            try {
                outcome = stage.execute();
            } catch (const ToolchainUnavailable& e) {
                outcome.stage = stage.id;
                outcome.status = StageStatus::Aborted;
                outcome.detail = e.what();
                downstream_aborted = true;
                abort_reason = std::string("toolchain unavailable: ") + e.what();
            }
        }
        log("[" + stage.id.name() + "] " + stage_status_name(outcome.status) + ": " +
            outcome.detail);
        record.outcomes.push_back(outcome);
        if (!stage.checkpoint_after.empty())
            record.checkpoints.emplace_back(stage.checkpoint_after, current_version_);
    }

    const int best = best_version();
    record.final_bundle = best == current_version_ ? bundle_
                          : best > 0               ? snapshots_.at(best)
                                                   : CodeBundle{};
    record.snapshots = snapshots_;
    record.mutation_reports = mutation_reports_;
    return record;
}

RunRecord orchestrate(const Problem& problem, const PipelineConfig& config,
                      LlmProvider& provider, ToolchainAdapter& toolchain, PromptBuilder builder,
                      Clock& clock, const std::filesystem::path& workdir,
                      std::optional<CodeBundle> seed_bundle,
                      const std::filesystem::path& log_path) {
    Orchestrator::Options options;
    options.config = config;
    options.workdir = workdir;
    options.seed_bundle = std::move(seed_bundle);
    options.log_path = log_path;
    Orchestrator orchestrator(std::move(options), provider, toolchain, std::move(builder), clock);
    return orchestrator.run(problem);
}

}  // namespace llmloop
