#include "llmloop/toolchain.hpp"

#include <algorithm>

namespace llmloop {

// ---------------------------------------------------------------------------
// ToolConfig.

namespace {

std::vector<std::string> string_list(const json& value, const char* key) {
    std::vector<std::string> out;
    if (!value.contains(key)) return out;
    for (const auto& item : value.at(key)) out.push_back(item.get<std::string>());
    return out;
}

DiagnosticFormat diagnostic_format_from(const std::string& name) {
    if (name == "jsonlines") return DiagnosticFormat::JsonLines;
    if (name == "regex") return DiagnosticFormat::RegexProfile;
    throw SetupError("unknown diagnostic format: " + name);
}

TestReportFormat test_report_format_from(const std::string& name) {
    if (name == "xunit") return TestReportFormat::XUnitXml;
    if (name == "tap") return TestReportFormat::Tap;
    throw SetupError("unknown test report format: " + name);
}

ViolationFormat violation_format_from(const std::string& name) {
    if (name == "pmd") return ViolationFormat::PmdXml;
    if (name == "jsonlines") return ViolationFormat::JsonLines;
    throw SetupError("unknown violation format: " + name);
}

std::string diagnostic_format_name(DiagnosticFormat f) {
    return f == DiagnosticFormat::JsonLines ? "jsonlines" : "regex";
}

std::string test_report_format_name(TestReportFormat f) {
    return f == TestReportFormat::XUnitXml ? "xunit" : "tap";
}

std::string violation_format_name(ViolationFormat f) {
    return f == ViolationFormat::PmdXml ? "pmd" : "jsonlines";
}

}  // namespace

void ToolConfig::validate() const {
    if (compile_cmd.empty()) throw SetupError("tool config: compileCmd is required");
    if (test_cmd.empty()) throw SetupError("tool config: testCmd is required");
    if (diagnostic_format == DiagnosticFormat::RegexProfile && diagnostic_regex.empty())
        throw SetupError("tool config: diagnosticRegex is required for the regex format");
    if (compile_timeout_s <= 0 || test_timeout_s <= 0 || analyze_timeout_s <= 0 ||
        testgen_timeout_s <= 0)
        throw SetupError("tool config: timeouts must be positive");
    if (dependency_depth < 0) throw SetupError("tool config: dependencyDepth must be >= 0");
}

json ToolConfig::to_json() const {
    json value;
    value["commandPrefix"] = command_prefix;
    value["compileCmd"] = compile_cmd;
    value["testCmd"] = test_cmd;
    value["analyzeCmd"] = analyze_cmd;
    value["testgenCmd"] = testgen_cmd;
    value["coverageCmd"] = coverage_cmd;
    value["compileTimeoutS"] = compile_timeout_s;
    value["testTimeoutS"] = test_timeout_s;
    value["analyzeTimeoutS"] = analyze_timeout_s;
    value["testgenTimeoutS"] = testgen_timeout_s;
    value["diagnosticFormat"] = diagnostic_format_name(diagnostic_format);
    value["diagnosticRegex"] = diagnostic_regex;
    value["testReportFormat"] = test_report_format_name(test_report_format);
    value["violationFormat"] = violation_format_name(violation_format);
    value["dependencyDepth"] = dependency_depth;
    return value;
}

ToolConfig ToolConfig::from_json(const json& value) {
    ToolConfig config;
    config.command_prefix = string_list(value, "commandPrefix");
    config.compile_cmd = string_list(value, "compileCmd");
    config.test_cmd = string_list(value, "testCmd");
    config.analyze_cmd = string_list(value, "analyzeCmd");
    config.testgen_cmd = string_list(value, "testgenCmd");
    config.coverage_cmd = string_list(value, "coverageCmd");
    config.compile_timeout_s = value.value("compileTimeoutS", config.compile_timeout_s);
    config.test_timeout_s = value.value("testTimeoutS", config.test_timeout_s);
    config.analyze_timeout_s = value.value("analyzeTimeoutS", config.analyze_timeout_s);
    config.testgen_timeout_s = value.value("testgenTimeoutS", config.testgen_timeout_s);
    config.diagnostic_format =
        diagnostic_format_from(value.value("diagnosticFormat", "jsonlines"));
    config.diagnostic_regex = value.value("diagnosticRegex", "");
    config.test_report_format = test_report_format_from(value.value("testReportFormat", "xunit"));
    config.violation_format = violation_format_from(value.value("violationFormat", "pmd"));
    config.dependency_depth = value.value("dependencyDepth", 0);
    config.validate();
    return config;
}

// ---------------------------------------------------------------------------
// CommandToolchain.

CommandToolchain::CommandToolchain(ToolConfig config) : config_(std::move(config)) {
    config_.validate();
}

std::vector<std::string> CommandToolchain::render(
    const std::vector<std::string>& cmd, const std::map<std::string, std::string>& bindings) const {
    std::vector<std::string> argv;
    argv.reserve(config_.command_prefix.size() + cmd.size());
    for (const auto& arg : config_.command_prefix) argv.push_back(arg);
    for (const auto& arg : cmd) {
        std::string rendered = arg;
        for (const auto& [key, value] : bindings) {
            const std::string token = "{" + key + "}";
            std::size_t at = 0;
            while ((at = rendered.find(token, at)) != std::string::npos) {
                rendered.replace(at, token.size(), value);
                at += value.size();
            }
        }
        argv.push_back(std::move(rendered));
    }
    return argv;
}

ExecResult CommandToolchain::execute(const std::vector<std::string>& argv,
                                     const std::filesystem::path& cwd,
                                     int timeout_seconds) const {
    if (!command_exists(argv.front()))
        throw ToolchainUnavailable("command not found: " + argv.front());
    return run_command(argv, cwd, timeout_seconds);
}

CompileOutcome CommandToolchain::compile(const std::filesystem::path& workdir) {
    const std::map<std::string, std::string> bindings = {{"workdir", workdir.string()}};
    const auto argv = render(config_.compile_cmd, bindings);
    const ExecResult exec = execute(argv, workdir, config_.compile_timeout_s);

    CompileOutcome outcome;
    outcome.ok = !exec.timed_out && exec.exit_code == 0;

    const std::string combined = exec.stdout_text + exec.stderr_text;
    if (exec.timed_out) {
        Diagnostic d;
        d.file = "<compiler>";
        d.severity = Severity::Error;
        d.code = "timeout";
        d.message = "compile timed out after " + std::to_string(config_.compile_timeout_s) + "s";
        outcome.diagnostics.push_back(std::move(d));
    } else if (config_.diagnostic_format == DiagnosticFormat::JsonLines) {
        outcome.diagnostics = parse_jsonlines_diagnostics(combined);
    } else {
        outcome.diagnostics = parse_regex_diagnostics(combined, config_.diagnostic_regex);
    }
    if (!outcome.ok && outcome.diagnostics.empty())
        outcome.diagnostics.push_back(synthetic_diagnostic(combined));
    if (outcome.ok) {
        // Error-severity diagnostics imply failure; on a clean exit they are
        // compiler noise and are kept as warnings.
        for (auto& d : outcome.diagnostics)
            if (d.severity == Severity::Error) d.severity = Severity::Warning;
    }

    log_call("compile", workdir, "", outcome.ok);
    return outcome;
}

std::vector<TestResult> CommandToolchain::run_tests(const std::filesystem::path& workdir,
                                                    const TestSuiteRef& suite,
                                                    int timeout_override_s) {
    if (suite.empty()) return {};
    const int timeout_s = timeout_override_s > 0 ? timeout_override_s : config_.test_timeout_s;

    std::map<std::string, std::string> bindings = {{"workdir", workdir.string()},
                                                   {"suitePath", suite.dir.string()}};
    bool uses_report_file = false;
    for (const auto& arg : config_.test_cmd)
        if (contains(arg, "{report}")) uses_report_file = true;

    std::filesystem::path report_path;
    if (uses_report_file) {
        const auto logs = workdir / "logs";
        std::filesystem::create_directories(logs);
        const char* ext = config_.test_report_format == TestReportFormat::XUnitXml ? ".xml" : ".tap";
        report_path = logs / ("test_report_" + std::to_string(report_counter_++) + ext);
        bindings["report"] = report_path.string();
    }

    const auto argv = render(config_.test_cmd, bindings);
    const ExecResult exec = execute(argv, workdir, timeout_s);

    std::vector<TestResult> results;
    if (exec.timed_out) {
        TestResult r;
        r.suite_name = suite.id;
        r.test_name = "<suite>";
        r.status = TestStatus::Timeout;
        r.failure_message = "timeout";
        results.push_back(std::move(r));
        log_call("run_tests", workdir, suite.id, false);
        return results;
    }

    std::string report_text;
    if (uses_report_file && std::filesystem::exists(report_path))
        report_text = read_text_file(report_path);
    if (report_text.empty()) report_text = exec.stdout_text;

    results = config_.test_report_format == TestReportFormat::XUnitXml
                  ? parse_xunit_report(report_text)
                  : parse_tap_report(report_text);

    if (results.empty() && exec.exit_code != 0) {
        // Runner crashed before producing a report; declared test counts are
        // unknown here, so record one suite-level error.
        TestResult r;
        r.suite_name = suite.id;
        r.test_name = "<suite>";
        r.status = TestStatus::Error;
        r.failure_message = "test runner exited with code " + std::to_string(exec.exit_code);
        r.stack_trace = exec.stderr_text.empty() ? exec.stdout_text : exec.stderr_text;
        if (r.stack_trace.empty()) r.stack_trace = r.failure_message;
        results.push_back(std::move(r));
    }

    const bool green = std::none_of(results.begin(), results.end(),
                                    [](const TestResult& r) { return r.failed(); });
    log_call("run_tests", workdir, suite.id, green);
    return results;
}

std::vector<Violation> CommandToolchain::analyze(const std::filesystem::path& workdir) {
    if (!analyzer_available()) throw ToolchainUnavailable("no analyze command configured");

    std::map<std::string, std::string> bindings = {{"workdir", workdir.string()}};
    bool uses_report_file = false;
    for (const auto& arg : config_.analyze_cmd)
        if (contains(arg, "{report}")) uses_report_file = true;

    std::filesystem::path report_path;
    if (uses_report_file) {
        const auto logs = workdir / "logs";
        std::filesystem::create_directories(logs);
        report_path = logs / ("analysis_report_" + std::to_string(report_counter_++) + ".xml");
        bindings["report"] = report_path.string();
    }

    const auto argv = render(config_.analyze_cmd, bindings);
    const ExecResult exec = execute(argv, workdir, config_.analyze_timeout_s);

    std::string report_text;
    if (uses_report_file && std::filesystem::exists(report_path))
        report_text = read_text_file(report_path);
    if (report_text.empty()) report_text = exec.stdout_text;

    if (exec.timed_out)
        throw Error("analyzer timed out after " + std::to_string(config_.analyze_timeout_s) + "s");
    if (exec.exit_code != 0 && trim(report_text).empty()) {
        log_call("analyze", workdir, "", false);
        throw Error("analyzer exited with code " + std::to_string(exec.exit_code) +
                    " without a report");
    }

    auto violations = config_.violation_format == ViolationFormat::PmdXml
                          ? parse_pmd_violations(report_text)
                          : parse_jsonlines_violations(report_text);
    log_call("analyze", workdir, "", true);
    return violations;
}

ExternalGenOutcome CommandToolchain::generate_external_tests(const std::filesystem::path& workdir,
                                                             int minutes) {
    if (!generator_available()) throw ToolchainUnavailable("no test generator configured");

    const auto suite_dir = workdir / "tests" / "ext";
    std::filesystem::create_directories(suite_dir);
    const std::map<std::string, std::string> bindings = {
        {"workdir", workdir.string()},
        {"suitePath", suite_dir.string()},
        {"minutes", std::to_string(minutes)},
        {"depth", std::to_string(config_.dependency_depth)}};

    const auto argv = render(config_.testgen_cmd, bindings);
    const ExecResult exec = execute(argv, workdir, config_.testgen_timeout_s);

    ExternalGenOutcome outcome;
    if (exec.timed_out || exec.exit_code != 0) {
        outcome.detail = exec.timed_out
                             ? "test generator timed out"
                             : trim(exec.stderr_text.empty() ? exec.stdout_text : exec.stderr_text);
        if (outcome.detail.empty())
            outcome.detail = "test generator exited with code " + std::to_string(exec.exit_code);
        log_call("generate_tests", workdir, "external", false);
        return outcome;
    }

    TestSuiteRef suite;
    suite.id = "external";
    suite.dir = suite_dir;
    suite.files = list_files_recursive(suite_dir);
    outcome.suite = std::move(suite);
    log_call("generate_tests", workdir, "external", true);
    return outcome;
}

}  // namespace llmloop
