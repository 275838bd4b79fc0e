#include "llmloop/promptgen.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace llmloop {

// ---------------------------------------------------------------------------
// CodeBundle.

bool CodeBundle::has_source() const {
    for (const auto& [path, text] : files)
        if (path.starts_with("src/")) return true;
    return false;
}

bool CodeBundle::has_llm_tests() const {
    for (const auto& [path, text] : files)
        if (path.starts_with("tests/llm/")) return true;
    return false;
}

std::vector<std::string> CodeBundle::paths_under(std::string_view prefix) const {
    std::vector<std::string> paths;
    for (const auto& [path, text] : files)
        if (std::string_view(path).substr(0, prefix.size()) == prefix) paths.push_back(path);
    return paths;
}

void CodeBundle::merge_from(const CodeBundle& update) {
    for (const auto& [path, text] : update.files) files[path] = text;
    if (!update.main_config.empty()) main_config = update.main_config;
    if (!update.dependencies.empty()) dependencies = update.dependencies;
}

json CodeBundle::to_json() const {
    json src = json::object();
    for (const auto& [path, text] : files) src[path] = text;
    return {{"src", src}, {"main", main_config}, {"dependencies", dependencies}};
}

CodeBundle CodeBundle::from_json(const json& value) {
    if (!value.is_object()) throw SchemaViolation("root");
    if (!value.contains("src") || !value.at("src").is_object() || value.at("src").empty())
        throw SchemaViolation("src");

    CodeBundle bundle;
    for (const auto& [path, content] : value.at("src").items()) {
        if (!content.is_string()) throw SchemaViolation("src." + path);
        validate_bundle_path(path);
        bundle.files[path] = content.get<std::string>();
    }
    if (value.contains("main")) {
        if (!value.at("main").is_string()) throw SchemaViolation("main");
        bundle.main_config = value.at("main").get<std::string>();
    }
    if (value.contains("dependencies")) {
        if (!value.at("dependencies").is_array()) throw SchemaViolation("dependencies");
        for (const auto& dep : value.at("dependencies")) {
            if (!dep.is_string()) throw SchemaViolation("dependencies");
            bundle.dependencies.push_back(dep.get<std::string>());
        }
    }
    return bundle;
}

void validate_bundle_path(const std::string& path) {
    if (path.empty() || path.front() == '/' || path.find('\\') != std::string::npos)
        throw UnsafePath(path);
    if (path.size() >= 2 && path[1] == ':') throw UnsafePath(path);  // drive letter

    std::size_t start = 0;
    while (start <= path.size()) {
        const std::size_t end = path.find('/', start);
        const std::string segment =
            path.substr(start, end == std::string::npos ? std::string::npos : end - start);
        if (segment.empty() || segment == "." || segment == "..") throw UnsafePath(path);
        if (end == std::string::npos) break;
        start = end + 1;
    }

    if (!path.starts_with("src/") && !path.starts_with("tests/llm/")) throw UnsafePath(path);
}

std::vector<std::string> scope_violations(const CodeBundle& update, FixTarget target) {
    std::vector<std::string> violations;
    if (target == FixTarget::CodeOrTests) return violations;
    for (const auto& [path, text] : update.files)
        if (path.starts_with("tests/")) violations.push_back(path);
    return violations;
}

// ---------------------------------------------------------------------------
// Response extraction.

namespace {

// Index just past the brace matching text[start] ('{'), or npos.
std::size_t matching_close(std::string_view text, std::size_t start) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return i + 1;
    }
    return std::string_view::npos;
}

struct Candidate {
    std::size_t offset;
    std::string text;
};

void add_candidate(std::vector<Candidate>& candidates, std::set<std::string>& seen,
                   std::size_t offset, std::string text) {
    if (seen.insert(text).second) candidates.push_back({offset, std::move(text)});
}

std::vector<Candidate> bundle_candidates(const std::string& text) {
    std::vector<Candidate> candidates;
    std::set<std::string> seen;

    // Fenced blocks first: models usually wrap the object in one.
    std::size_t pos = 0;
    while ((pos = text.find("```", pos)) != std::string::npos) {
        const std::size_t line_end = text.find('\n', pos);
        if (line_end == std::string::npos) break;
        const std::size_t close = text.find("```", line_end + 1);
        if (close == std::string::npos) break;
        const std::string body = trim(text.substr(line_end + 1, close - line_end - 1));
        if (!body.empty() && body.front() == '{')
            add_candidate(candidates, seen, line_end + 1, body);
        pos = close + 3;
    }

    // Balanced-brace regions anywhere in the text.  Prose braces produce
    // candidates that simply fail to parse.
    int starts = 0;
    for (std::size_t i = 0; i < text.size() && starts < 256; ++i) {
        if (text[i] != '{') continue;
        std::size_t j = i + 1;
        while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j >= text.size() || (text[j] != '"' && text[j] != '}')) continue;
        ++starts;
        const std::size_t end = matching_close(text, i);
        if (end == std::string_view::npos) continue;
        add_candidate(candidates, seen, i, text.substr(i, end - i));
    }

    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                         if (a.text.size() != b.text.size()) return a.text.size() > b.text.size();
                         return a.offset < b.offset;
                     });
    return candidates;
}

}  // namespace

CodeBundle parse_response(const std::string& text) {
    bool saw_object = false;
    for (const auto& candidate : bundle_candidates(text)) {
        json value = json::parse(candidate.text, nullptr, /*allow_exceptions=*/false);
        if (value.is_discarded() || !value.is_object()) continue;
        if (!value.contains("src")) {
            saw_object = true;
            continue;
        }
        return CodeBundle::from_json(value);
    }
    if (saw_object) throw SchemaViolation("src");
    throw NoStructuredObject();
}

// ---------------------------------------------------------------------------
// Feedback payloads.

std::string feedback_kind_name(FeedbackKind kind) {
    switch (kind) {
        case FeedbackKind::CompileErrors: return "compile_errors";
        case FeedbackKind::TestFailures: return "test_failures";
        case FeedbackKind::Violations: return "violations";
        case FeedbackKind::SurvivingMutants: return "surviving_mutants";
    }
    return "unknown";
}

json SurvivorRecord::to_json() const {
    return {{"file", file},         {"line", line},
            {"column", column},     {"original", original},
            {"replacement", replacement}};
}

std::size_t FeedbackPayload::item_count() const {
    switch (kind) {
        case FeedbackKind::CompileErrors: return diagnostics.size();
        case FeedbackKind::TestFailures: return failures.size();
        case FeedbackKind::Violations: return violations.size();
        case FeedbackKind::SurvivingMutants: return survivors.size();
    }
    return 0;
}

namespace {

constexpr std::size_t kItemClip = 16 * 1024;

std::string location(const std::string& file, int line, int column) {
    std::string out = file;
    if (line > 0) {
        out += ":" + std::to_string(line);
        if (column > 0) out += ":" + std::to_string(column);
    }
    return out;
}

std::string render_item(const Diagnostic& d) {
    std::string out = location(d.file, d.line, d.column) + ": " + severity_name(d.severity) + ": " +
                      d.message;
    if (!d.code.empty()) out += " [" + d.code + "]";
    return out;
}

std::string render_item(const TestResult& r) {
    std::string out = "test " + r.suite_name + "." + r.test_name + ": " + test_status_name(r.status);
    if (!r.failure_message.empty()) out += ": " + r.failure_message;
    if (!r.stack_trace.empty()) {
        for (const auto& line : split_lines(r.stack_trace)) out += "\n    " + line;
    }
    return out;
}

std::string render_item(const Violation& v) {
    std::string out = v.file + ":" + std::to_string(v.begin_line);
    if (v.end_line > v.begin_line) out += "-" + std::to_string(v.end_line);
    out += ": [" + v.rule + "] priority " + std::to_string(v.priority) + ": " + v.description;
    return out;
}

std::string render_item(const SurvivorRecord& s) {
    return location(s.file, s.line, s.column) + ": mutant '" + s.original + "' -> '" +
           s.replacement + "' survived the suite";
}

std::string clip_item(std::string text) {
    if (text.size() > kItemClip) {
        text.resize(kItemClip);
        text += "\n(output clipped)";
    }
    return text;
}

/// Keep-first cap shared by all builders: at most limits.max_items items and
/// limits.max_bytes of rendered text (the first item is always kept).
template <typename T>
std::vector<T> apply_caps(const std::vector<T>& items, const FeedbackLimits& limits,
                          bool& truncated) {
    std::vector<T> kept;
    std::size_t bytes = 0;
    for (const auto& item : items) {
        if (kept.size() >= limits.max_items) {
            truncated = true;
            break;
        }
        const std::size_t size = clip_item(render_item(item)).size() + 1;
        if (!kept.empty() && bytes + size > limits.max_bytes) {
            truncated = true;
            break;
        }
        bytes += size;
        kept.push_back(item);
    }
    return kept;
}

}  // namespace

FeedbackPayload compile_feedback(const std::vector<Diagnostic>& diagnostics,
                                 const FeedbackLimits& limits) {
    FeedbackPayload payload;
    payload.kind = FeedbackKind::CompileErrors;
    payload.diagnostics = apply_caps(diagnostics, limits, payload.truncated);
    return payload;
}

FeedbackPayload test_feedback(const std::vector<TestResult>& results,
                              const FeedbackLimits& limits) {
    std::vector<TestResult> failing;
    for (const auto& r : results)
        if (r.failed()) failing.push_back(r);
    FeedbackPayload payload;
    payload.kind = FeedbackKind::TestFailures;
    payload.failures = apply_caps(failing, limits, payload.truncated);
    return payload;
}

FeedbackPayload violation_feedback(const std::vector<Violation>& violations,
                                   const FeedbackLimits& limits) {
    FeedbackPayload payload;
    payload.kind = FeedbackKind::Violations;
    payload.violations = apply_caps(violations, limits, payload.truncated);
    return payload;
}

FeedbackPayload survivor_feedback(const std::vector<SurvivorRecord>& survivors,
                                  const FeedbackLimits& limits) {
    FeedbackPayload payload;
    payload.kind = FeedbackKind::SurvivingMutants;
    payload.survivors = apply_caps(survivors, limits, payload.truncated);
    return payload;
}

std::string render_feedback(const FeedbackPayload& payload) {
    std::vector<std::string> lines;
    switch (payload.kind) {
        case FeedbackKind::CompileErrors:
            for (const auto& d : payload.diagnostics) lines.push_back(clip_item(render_item(d)));
            break;
        case FeedbackKind::TestFailures:
            for (const auto& r : payload.failures) lines.push_back(clip_item(render_item(r)));
            break;
        case FeedbackKind::Violations:
            for (const auto& v : payload.violations) lines.push_back(clip_item(render_item(v)));
            break;
        case FeedbackKind::SurvivingMutants:
            for (const auto& s : payload.survivors) lines.push_back(clip_item(render_item(s)));
            break;
    }
    std::string out;
    for (const auto& line : lines) {
        out += line;
        out += '\n';
    }
    if (payload.truncated)
        out += "(feedback truncated: showing the first " + std::to_string(payload.item_count()) +
               " items)\n";
    if (out.empty()) out = "(none)\n";
    return out;
}

// ---------------------------------------------------------------------------
// Templates.

namespace {

const std::map<std::string, std::string>& embedded_templates() {
    static const std::map<std::string, std::string> templates = {
        {"system",
         "You are a careful software engineer working inside an automated code-repair "
         "loop. Follow the response format instructions exactly: reply with one JSON "
         "object and no other text.\n"},
        {"initial",
         R"TPL(Implement the task below as a complete, self-contained project.

Task:
{task}

{declaration_section}{constraints_section}Respond with one JSON object and nothing else, using this schema:

{schema}

Rules:
- "src" maps relative file paths to complete file contents. Code files live under "src/".
- "main" names the entry point and its arguments, or is an empty string.
- "dependencies" lists required third-party coordinates, or is empty.
- Always return complete files, never diffs or fragments.
)TPL"},
        {"fix_compile",
         R"TPL(The project below fails to compile.

Current files:
{code}

Compiler diagnostics:
{feedback}

{scope}Return the corrected files as one JSON object with the same schema as before ("src", "main", "dependencies"). Include every file you change; unchanged files may be omitted.
)TPL"},
        {"fix_tests",
         R"TPL(The project below compiles, but some tests fail.

Current files:
{code}

Failing tests:
{feedback}

{scope}Return the corrected files as one JSON object with the same schema as before ("src", "main", "dependencies"). Include every file you change; unchanged files may be omitted.
)TPL"},
        {"fix_analysis",
         R"TPL(Static analysis reported violations in the project below.

Current files:
{code}

Violations:
{feedback}

{scope}Fix every violation without changing observable behavior, and keep the existing tests passing.

Return the corrected files as one JSON object with the same schema as before ("src", "main", "dependencies"). Include every file you change; unchanged files may be omitted.
)TPL"},
        {"fix_mutants",
         R"TPL(The test suite below lets some mutants survive. A mutant is the same program with one small operator change; a strong suite fails on every mutant.

Current files:
{code}

Surviving mutants:
{feedback}

{scope}Strengthen the tests under "tests/llm/" so that each surviving mutant is caught. Do not weaken or delete existing assertions.

Return the updated files as one JSON object with the same schema as before ("src", "main", "dependencies"). Include every file you change; unchanged files may be omitted.
)TPL"},
        {"generate_tests",
         R"TPL(Write a thorough test suite for the project below.

Current files:
{code}

Requirements:
- Aim for high coverage of every function and branch.
- Cover both positive and negative scenarios.
- Take into account exceptional cases and boundary values.
{extra}
Place each test file under "tests/llm/" and return one JSON object with the same schema as before ("src", "main", "dependencies"), putting every test file path in the "src" map.
)TPL"}};
    return templates;
}

constexpr const char* kSchemaLiteral =
    R"({
  "src": { "src/<file>": "<complete file text>" },
  "main": "<entry point and arguments>",
  "dependencies": ["<coordinate>"]
})";

bool is_placeholder_name(std::string_view name) {
    if (name.empty()) return false;
    for (char c : name)
        if ((c < 'a' || c > 'z') && c != '_') return false;
    return true;
}

}  // namespace

std::string TemplateStore::text(const std::string& name) const {
    if (!dir_.empty()) {
        const auto path = dir_ / (name + ".txt");
        if (std::filesystem::exists(path)) return read_text_file(path);
    }
    const auto& templates = embedded_templates();
    const auto it = templates.find(name);
    if (it == templates.end()) throw TemplateError("unknown template '" + name + "'");
    return it->second;
}

std::string render_template(const std::string& pattern,
                            const std::map<std::string, std::string>& bindings) {
    std::string out;
    out.reserve(pattern.size());
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        if (pattern[i] != '{') {
            out += pattern[i];
            continue;
        }
        const std::size_t close = pattern.find('}', i + 1);
        if (close == std::string::npos) {
            out += pattern[i];
            continue;
        }
        const std::string name = pattern.substr(i + 1, close - i - 1);
        if (!is_placeholder_name(name)) {
            out += pattern[i];  // literal brace (JSON examples etc.)
            continue;
        }
        const auto it = bindings.find(name);
        if (it == bindings.end())
            throw TemplateError("unbound placeholder '" + name + "'");
        out += it->second;
        i = close;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Prompt builders.

PromptBuilder::PromptBuilder(TemplateStore store, PromptOptions options)
    : store_(std::move(store)), options_(std::move(options)) {}

std::string render_bundle_files(const CodeBundle& bundle) {
    std::string out;
    for (const auto& [path, text] : bundle.files) {
        out += "--- " + path + " ---\n";
        out += text;
        if (text.empty() || text.back() != '\n') out += '\n';
    }
    if (out.empty()) out = "(no files)\n";
    return out;
}

namespace {

std::string scope_text(FixTarget target) {
    if (target == FixTarget::CodeOnly)
        return "The given tests are correct. Do not add, remove, or modify any test file; "
               "fix the code only.\n\n";
    return "You may change the source code, the generated test code, or both.\n\n";
}

CompletionRequest make_request(const TemplateStore& store, const std::string& user_text,
                               const std::string& tag) {
    CompletionRequest request;
    request.messages.push_back({Role::System, store.text("system")});
    request.messages.push_back({Role::User, user_text});
    request.tag = tag;
    return request;
}

}  // namespace

CompletionRequest PromptBuilder::initial_prompt(const std::string& task,
                                                const std::string& declaration) const {
    std::map<std::string, std::string> bindings;
    bindings["task"] = task;
    bindings["declaration_section"] =
        declaration.empty() ? "" : "Start from this declaration:\n\n" + declaration + "\n\n";
    bindings["constraints_section"] =
        options_.language_constraint.empty()
            ? ""
            : "Constraints: the code must be " + options_.language_constraint + ".\n\n";
    bindings["schema"] = kSchemaLiteral;
    return make_request(store_, render_template(store_.text("initial"), bindings), "initial");
}

CompletionRequest PromptBuilder::fix_prompt(const CodeBundle& bundle,
                                            const FeedbackPayload& feedback,
                                            FixTarget target) const {
    std::string template_name;
    switch (feedback.kind) {
        case FeedbackKind::CompileErrors: template_name = "fix_compile"; break;
        case FeedbackKind::TestFailures: template_name = "fix_tests"; break;
        case FeedbackKind::Violations: template_name = "fix_analysis"; break;
        case FeedbackKind::SurvivingMutants: template_name = "fix_mutants"; break;
    }
    std::map<std::string, std::string> bindings;
    bindings["code"] = render_bundle_files(bundle);
    bindings["feedback"] = render_feedback(feedback);
    bindings["scope"] = scope_text(target);
    return make_request(store_, render_template(store_.text(template_name), bindings),
                        "fix:" + feedback_kind_name(feedback.kind));
}

CompletionRequest PromptBuilder::testgen_prompt(const CodeBundle& bundle) const {
    std::map<std::string, std::string> bindings;
    bindings["code"] = render_bundle_files(bundle);
    bindings["extra"] = options_.extra_testgen_instructions.empty()
                            ? ""
                            : "- " + options_.extra_testgen_instructions + "\n";
    return make_request(store_, render_template(store_.text("generate_tests"), bindings),
                        "generate_tests");
}

CompletionRequest PromptBuilder::repair_prompt(const CompletionRequest& failed_request,
                                               const std::string& response_text,
                                               const std::string& parse_error) const {
    CompletionRequest request = failed_request;
    std::string echo = response_text;
    if (echo.size() > 2048) {
        echo.resize(2048);
        echo += "\n(reply clipped)";
    }
    request.messages.push_back({Role::Assistant, echo});
    request.messages.push_back(
        {Role::User, "Your reply could not be used: " + parse_error +
                         ". Reply again with exactly one JSON object matching the schema "
                         "(\"src\", \"main\", \"dependencies\") and no other text.\n"});
    request.tag = failed_request.tag + ":repair";
    return request;
}

}  // namespace llmloop
