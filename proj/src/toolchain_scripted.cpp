#include "llmloop/toolchain.hpp"

#include <algorithm>

namespace llmloop {

namespace {

TestStatus status_from_name(const std::string& name) {
    if (name == "pass") return TestStatus::Pass;
    if (name == "fail") return TestStatus::Fail;
    if (name == "error") return TestStatus::Error;
    if (name == "skipped") return TestStatus::Skipped;
    if (name == "timeout") return TestStatus::Timeout;
    throw SetupError("scripted toolchain: unknown test status: " + name);
}

Diagnostic diagnostic_from_json(const json& value) {
    Diagnostic d;
    d.file = value.value("file", "");
    d.line = value.value("line", 0);
    d.column = value.value("column", 0);
    d.severity = value.value("severity", "error") == std::string("warning") ? Severity::Warning
                                                                            : Severity::Error;
    d.code = value.value("code", "");
    d.message = value.value("message", "");
    return d;
}

Violation violation_from_json(const json& value) {
    Violation v;
    v.rule = value.value("rule", "");
    v.file = value.value("file", "");
    v.begin_line = value.value("begin_line", value.value("beginLine", 0));
    v.end_line = value.value("end_line", value.value("endLine", v.begin_line));
    if (v.end_line < v.begin_line) v.end_line = v.begin_line;
    v.priority = std::clamp(value.value("priority", 3), 1, 5);
    v.description = value.value("description", "");
    return v;
}

}  // namespace

ScriptedToolchain::ScriptedToolchain(json script) : script_(std::move(script)) {
    if (!script_.is_object()) throw SetupError("scripted toolchain: script must be a JSON object");
}

ScriptedToolchain ScriptedToolchain::load(const std::filesystem::path& path) {
    json script = json::parse(read_text_file(path), nullptr, /*allow_exceptions=*/false);
    if (script.is_discarded())
        throw SetupError("scripted toolchain: invalid JSON in " + path.string());
    return ScriptedToolchain(std::move(script));
}

const json* ScriptedToolchain::entry_for(const std::string& step) {
    if (!script_.contains(step))
        throw SetupError("scripted toolchain: no script section for step '" + step + "'");
    const json& section = script_.at(step);
    const std::size_t index = cursors_[step]++;
    const std::string key = std::to_string(index);
    if (section.contains("calls") && section.at("calls").contains(key))
        return &section.at("calls").at(key);
    if (section.contains("default")) return &section.at("default");
    throw SetupError("scripted toolchain: no outcome for step '" + step + "' call " + key);
}

CompileOutcome ScriptedToolchain::compile(const std::filesystem::path& workdir) {
    const json& entry = *entry_for("compile");
    if (entry.value("unavailable", false))
        throw ToolchainUnavailable("scripted toolchain: compile unavailable");
    CompileOutcome outcome;
    outcome.ok = entry.value("ok", false);
    if (entry.contains("diagnostics"))
        for (const auto& d : entry.at("diagnostics"))
            outcome.diagnostics.push_back(diagnostic_from_json(d));
    log_call("compile", workdir, "", outcome.ok);
    return outcome;
}

std::vector<TestResult> ScriptedToolchain::run_tests(const std::filesystem::path& workdir,
                                                     const TestSuiteRef& suite,
                                                     int /*timeout_override_s*/) {
    if (suite.empty()) return {};
    const json& entry = *entry_for("run_tests");

    std::vector<TestResult> results;
    if (entry.value("pass_all", false)) {
        for (const auto& file : suite.files) {
            TestResult r;
            r.suite_name = suite.id;
            r.test_name = file;
            r.status = TestStatus::Pass;
            results.push_back(std::move(r));
        }
    } else if (entry.contains("crash")) {
        TestResult r;
        r.suite_name = suite.id;
        r.test_name = "<suite>";
        r.status = TestStatus::Error;
        r.failure_message = "test runner crashed";
        r.stack_trace = entry.at("crash").get<std::string>();
        if (r.stack_trace.empty()) r.stack_trace = r.failure_message;
        results.push_back(std::move(r));
    } else if (entry.contains("results")) {
        for (const auto& item : entry.at("results")) {
            TestResult r;
            r.suite_name = item.value("suite", suite.id);
            r.test_name = item.value("test", "<unnamed>");
            r.status = status_from_name(item.value("status", "pass"));
            r.failure_message = item.value("message", "");
            r.stack_trace = item.value("trace", "");
            if ((r.status == TestStatus::Fail || r.status == TestStatus::Error) &&
                r.stack_trace.empty())
                r.stack_trace =
                    r.failure_message.empty() ? "(no stack trace captured)" : r.failure_message;
            results.push_back(std::move(r));
        }
    } else {
        throw SetupError("scripted toolchain: run_tests entry needs pass_all, crash, or results");
    }

    const bool green = std::none_of(results.begin(), results.end(),
                                    [](const TestResult& r) { return r.failed(); });
    log_call("run_tests", workdir, suite.id, green);
    return results;
}

bool ScriptedToolchain::analyzer_available() const { return script_.contains("analyze"); }

std::vector<Violation> ScriptedToolchain::analyze(const std::filesystem::path& workdir) {
    if (!analyzer_available()) throw ToolchainUnavailable("scripted toolchain: no analyze section");
    const json& entry = *entry_for("analyze");
    if (entry.contains("fail")) {
        log_call("analyze", workdir, "", false);
        throw Error(entry.at("fail").get<std::string>());
    }
    std::vector<Violation> violations;
    if (entry.contains("violations"))
        for (const auto& v : entry.at("violations")) violations.push_back(violation_from_json(v));
    log_call("analyze", workdir, "", true);
    return violations;
}

bool ScriptedToolchain::generator_available() const { return script_.contains("generate_tests"); }

ExternalGenOutcome ScriptedToolchain::generate_external_tests(const std::filesystem::path& workdir,
                                                              int /*minutes*/) {
    if (!generator_available())
        throw ToolchainUnavailable("scripted toolchain: no generate_tests section");
    const json& entry = *entry_for("generate_tests");

    ExternalGenOutcome outcome;
    if (entry.contains("skip")) {
        outcome.detail = entry.at("skip").get<std::string>();
        log_call("generate_tests", workdir, "external", false);
        return outcome;
    }

    const auto suite_dir = workdir / "tests" / "ext";
    std::filesystem::create_directories(suite_dir);
    if (entry.contains("files"))
        for (const auto& [rel, content] : entry.at("files").items())
            write_text_file(suite_dir / rel, content.get<std::string>());

    TestSuiteRef suite;
    suite.id = "external";
    suite.dir = suite_dir;
    suite.files = list_files_recursive(suite_dir);
    outcome.suite = std::move(suite);
    outcome.detail = entry.value("detail", "");
    log_call("generate_tests", workdir, "external", true);
    return outcome;
}

}  // namespace llmloop
