#include "llmloop/toolchain.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

namespace llmloop {

std::string severity_name(Severity severity) {
    return severity == Severity::Error ? "error" : "warning";
}

json Diagnostic::to_json() const {
    return {{"file", file},       {"line", line},
            {"column", column},   {"severity", severity_name(severity)},
            {"code", code},       {"message", message}};
}

std::string test_status_name(TestStatus status) {
    switch (status) {
        case TestStatus::Pass: return "pass";
        case TestStatus::Fail: return "fail";
        case TestStatus::Error: return "error";
        case TestStatus::Skipped: return "skipped";
        case TestStatus::Timeout: return "timeout";
    }
    return "error";
}

json TestResult::to_json() const {
    return {{"suite", suite_name},
            {"test", test_name},
            {"status", test_status_name(status)},
            {"message", failure_message},
            {"trace", stack_trace}};
}

json Violation::to_json() const {
    return {{"rule", rule},           {"file", file},
            {"begin_line", begin_line}, {"end_line", end_line},
            {"priority", priority},   {"description", description}};
}

Diagnostic synthetic_diagnostic(const std::string& raw_output) {
    Diagnostic d;
    d.file = "<tool-output>";
    d.severity = Severity::Error;
    d.code = "raw";
    d.message = raw_output;
    return d;
}

// ---------------------------------------------------------------------------
// JSON-lines diagnostics: one object per line; lines that are not JSON
// objects (progress noise, banners) are skipped.

namespace {

Severity severity_from(const std::string& name) {
    std::string lower;
    for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return lower == "warning" || lower == "warn" ? Severity::Warning : Severity::Error;
}

int clamp_priority(long long p) {
    return static_cast<int>(std::clamp(p, 1ll, 5ll));
}

int int_field(const json& obj, const char* key) {
    if (!obj.contains(key)) return 0;
    const auto& v = obj.at(key);
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_string()) {
        try {
            return std::stoi(v.get<std::string>());
        } catch (...) {
            return 0;
        }
    }
    return 0;
}

}  // namespace

std::vector<Diagnostic> parse_jsonlines_diagnostics(const std::string& text) {
    std::vector<Diagnostic> diagnostics;
    for (const auto& line : split_lines(text)) {
        const std::string trimmed = trim(line);
        if (trimmed.empty() || trimmed.front() != '{') continue;
        json obj = json::parse(trimmed, nullptr, /*allow_exceptions=*/false);
        if (obj.is_discarded() || !obj.is_object()) continue;
        Diagnostic d;
        d.file = obj.value("file", "");
        d.line = int_field(obj, "line");
        d.column = int_field(obj, "column");
        d.severity = severity_from(obj.value("severity", "error"));
        d.code = obj.value("code", "");
        d.message = obj.value("message", "");
        if (d.file.empty() && d.message.empty()) continue;
        diagnostics.push_back(std::move(d));
    }
    return diagnostics;
}

// ---------------------------------------------------------------------------
// Regex-profile diagnostics.  The profile is a named-capture pattern with
// groups file/line/column/severity/code/message; std::regex has no named
// captures, so names are stripped and mapped to group indices up front.

namespace {

struct NamedPattern {
    std::regex regex;
    std::map<std::string, int> group_index;
    bool valid = false;
};

NamedPattern compile_named_pattern(const std::string& pattern) {
    NamedPattern result;
    std::string translated;
    translated.reserve(pattern.size());
    int capture_count = 0;
    bool in_class = false;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        const char c = pattern[i];
        if (c == '\\' && i + 1 < pattern.size()) {
            translated += c;
            translated += pattern[++i];
            continue;
        }
        if (in_class) {
            translated += c;
            if (c == ']') in_class = false;
            continue;
        }
        if (c == '[') {
            in_class = true;
            translated += c;
            continue;
        }
        if (c == '(') {
            // (?<name>...) is a named capture unless it is a lookbehind.
            if (pattern.compare(i, 3, "(?<") == 0 && i + 3 < pattern.size() &&
                pattern[i + 3] != '=' && pattern[i + 3] != '!') {
                const std::size_t close = pattern.find('>', i + 3);
                if (close == std::string::npos) return result;  // malformed
                ++capture_count;
                result.group_index[pattern.substr(i + 3, close - i - 3)] = capture_count;
                translated += '(';
                i = close;
                continue;
            }
            if (i + 1 < pattern.size() && pattern[i + 1] == '?') {
                translated += c;  // non-capturing or lookaround
                continue;
            }
            ++capture_count;
        }
        translated += c;
    }
    try {
        result.regex = std::regex(translated, std::regex::ECMAScript);
    } catch (const std::regex_error&) {
        return result;
    }
    result.valid = true;
    return result;
}

std::string group_value(const std::smatch& match, const NamedPattern& pattern,
                        const std::string& name) {
    auto it = pattern.group_index.find(name);
    if (it == pattern.group_index.end()) return "";
    if (it->second >= static_cast<int>(match.size())) return "";
    return match[static_cast<std::size_t>(it->second)].matched
               ? match[static_cast<std::size_t>(it->second)].str()
               : "";
}

int to_int(const std::string& value) {
    try {
        return value.empty() ? 0 : std::stoi(value);
    } catch (...) {
        return 0;
    }
}

}  // namespace

std::vector<Diagnostic> parse_regex_diagnostics(const std::string& text,
                                                const std::string& named_pattern) {
    std::vector<Diagnostic> diagnostics;
    const NamedPattern pattern = compile_named_pattern(named_pattern);
    if (!pattern.valid) return diagnostics;
    for (const auto& line : split_lines(text)) {
        std::smatch match;
        if (!std::regex_search(line, match, pattern.regex)) continue;
        Diagnostic d;
        d.file = group_value(match, pattern, "file");
        d.line = to_int(group_value(match, pattern, "line"));
        d.column = to_int(group_value(match, pattern, "column"));
        const std::string sev = group_value(match, pattern, "severity");
        d.severity = severity_from(sev.empty() ? "error" : sev);
        d.code = group_value(match, pattern, "code");
        d.message = group_value(match, pattern, "message");
        if (d.file.empty() && d.message.empty()) continue;
        diagnostics.push_back(std::move(d));
    }
    return diagnostics;
}

// ---------------------------------------------------------------------------
// Minimal lenient XML reader, enough for xUnit and PMD-style reports.
// Malformed input yields whatever parsed cleanly; nothing throws.

namespace {

struct XmlNode {
    std::string name;
    std::map<std::string, std::string> attrs;
    std::vector<XmlNode> children;
    std::string text;

    const XmlNode* first(const std::string& child_name) const {
        for (const auto& c : children)
            if (c.name == child_name) return &c;
        return nullptr;
    }
};

std::string decode_entities(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '&') {
            out += raw[i];
            continue;
        }
        const std::size_t semi = raw.find(';', i);
        if (semi == std::string_view::npos || semi - i > 8) {
            out += raw[i];
            continue;
        }
        const std::string_view entity = raw.substr(i + 1, semi - i - 1);
        if (entity == "lt") out += '<';
        else if (entity == "gt") out += '>';
        else if (entity == "amp") out += '&';
        else if (entity == "quot") out += '"';
        else if (entity == "apos") out += '\'';
        else if (!entity.empty() && entity[0] == '#') {
            try {
                const int base = entity.size() > 1 && (entity[1] == 'x' || entity[1] == 'X') ? 16 : 10;
                const long code = std::stol(std::string(entity.substr(base == 16 ? 2 : 1)), nullptr, base);
                if (code > 0 && code < 128) out += static_cast<char>(code);
            } catch (...) {
                out += raw[i];
                out.append(entity);
                out += ';';
            }
        } else {
            out += raw[i];
            out.append(entity);
            out += ';';
        }
        i = semi;
    }
    return out;
}

class XmlReader {
public:
    explicit XmlReader(std::string_view text) : text_(text) {}

    std::optional<XmlNode> parse_document() {
        skip_misc();
        return parse_element();
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool starts(std::string_view prefix) const {
        return text_.compare(pos_, prefix.size(), prefix) == 0;
    }

    void skip_until(std::string_view marker) {
        const std::size_t at = text_.find(marker, pos_);
        pos_ = at == std::string_view::npos ? text_.size() : at + marker.size();
    }

    void skip_misc() {
        for (;;) {
            skip_ws();
            if (starts("<?")) skip_until("?>");
            else if (starts("<!--")) skip_until("-->");
            else if (starts("<!")) skip_until(">");
            else return;
        }
    }

    std::string read_name() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' ||
                text_[pos_] == '-' || text_[pos_] == ':' || text_[pos_] == '.'))
            ++pos_;
        return std::string(text_.substr(start, pos_ - start));
    }

    std::optional<XmlNode> parse_element() {
        skip_misc();
        if (pos_ >= text_.size() || text_[pos_] != '<') return std::nullopt;
        ++pos_;
        XmlNode node;
        node.name = read_name();
        if (node.name.empty()) return std::nullopt;

        for (;;) {
            skip_ws();
            if (pos_ >= text_.size()) return node;  // truncated input
            if (starts("/>")) {
                pos_ += 2;
                return node;
            }
            if (text_[pos_] == '>') {
                ++pos_;
                break;
            }
            const std::string attr = read_name();
            if (attr.empty()) {
                ++pos_;  // unexpected byte; keep going
                continue;
            }
            skip_ws();
            if (pos_ < text_.size() && text_[pos_] == '=') {
                ++pos_;
                skip_ws();
                if (pos_ < text_.size() && (text_[pos_] == '"' || text_[pos_] == '\'')) {
                    const char quote = text_[pos_++];
                    const std::size_t end = text_.find(quote, pos_);
                    if (end == std::string_view::npos) return node;  // truncated
                    node.attrs[attr] = decode_entities(text_.substr(pos_, end - pos_));
                    pos_ = end + 1;
                }
            }
        }

        // Content until matching close tag.
        for (;;) {
            if (pos_ >= text_.size()) return node;  // unclosed; keep partial
            if (starts("<![CDATA[")) {
                pos_ += 9;
                const std::size_t end = text_.find("]]>", pos_);
                const std::size_t len =
                    end == std::string_view::npos ? text_.size() - pos_ : end - pos_;
                node.text.append(text_.substr(pos_, len));
                pos_ = end == std::string_view::npos ? text_.size() : end + 3;
                continue;
            }
            if (starts("<!--")) {
                skip_until("-->");
                continue;
            }
            if (starts("</")) {
                skip_until(">");
                return node;
            }
            if (pos_ < text_.size() && text_[pos_] == '<') {
                auto child = parse_element();
                if (!child) return node;
                node.children.push_back(std::move(*child));
                continue;
            }
            const std::size_t next = text_.find('<', pos_);
            const std::size_t len = next == std::string_view::npos ? text_.size() - pos_ : next - pos_;
            node.text += decode_entities(text_.substr(pos_, len));
            pos_ += len;
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

void collect_testcases(const XmlNode& node, const std::string& suite_name,
                       std::vector<TestResult>& out) {
    const std::string own_name =
        node.attrs.count("name") ? node.attrs.at("name") : suite_name;
    for (const auto& child : node.children) {
        if (child.name == "testsuite" || child.name == "testsuites") {
            collect_testcases(child, own_name, out);
            continue;
        }
        if (child.name != "testcase") continue;
        TestResult r;
        r.suite_name = child.attrs.count("classname") ? child.attrs.at("classname") : own_name;
        r.test_name = child.attrs.count("name") ? child.attrs.at("name") : "<unnamed>";
        if (const XmlNode* failure = child.first("failure")) {
            r.status = TestStatus::Fail;
            r.failure_message = failure->attrs.count("message") ? failure->attrs.at("message") : "";
            r.stack_trace = trim(failure->text);
        } else if (const XmlNode* error = child.first("error")) {
            r.status = TestStatus::Error;
            r.failure_message = error->attrs.count("message") ? error->attrs.at("message") : "";
            r.stack_trace = trim(error->text);
        } else if (child.first("skipped") != nullptr) {
            r.status = TestStatus::Skipped;
        } else {
            r.status = TestStatus::Pass;
        }
        if (r.failed() && r.stack_trace.empty())
            r.stack_trace = r.failure_message.empty() ? "(no stack trace captured)" : r.failure_message;
        out.push_back(std::move(r));
    }
}

}  // namespace

std::vector<TestResult> parse_xunit_report(const std::string& text) {
    std::vector<TestResult> results;
    XmlReader reader(text);
    auto root = reader.parse_document();
    if (!root) return results;
    if (root->name == "testcase") {
        XmlNode wrapper;
        wrapper.name = "testsuite";
        wrapper.children.push_back(std::move(*root));
        collect_testcases(wrapper, "", results);
        return results;
    }
    collect_testcases(*root, root->attrs.count("name") ? root->attrs.at("name") : "", results);
    return results;
}

// ---------------------------------------------------------------------------
// TAP (subset of version 14): plan line, "ok"/"not ok" test points, '#'
// diagnostics and indented YAML blocks attached to the preceding failure.

std::vector<TestResult> parse_tap_report(const std::string& text) {
    std::vector<TestResult> results;
    TestResult* last_failure = nullptr;
    bool in_yaml = false;
    for (const auto& raw_line : split_lines(text)) {
        const std::string line = trim(raw_line);
        if (in_yaml) {
            if (line == "...") {
                in_yaml = false;
                continue;
            }
            if (last_failure) {
                if (!last_failure->stack_trace.empty()) last_failure->stack_trace += '\n';
                last_failure->stack_trace += line;
            }
            continue;
        }
        if (line == "---") {
            in_yaml = last_failure != nullptr;
            continue;
        }
        if (line.starts_with("#")) {
            if (last_failure) {
                if (!last_failure->stack_trace.empty()) last_failure->stack_trace += '\n';
                last_failure->stack_trace += trim(line.substr(1));
            }
            continue;
        }

        const bool is_ok = line.starts_with("ok ") || line == "ok";
        const bool is_not_ok = line.starts_with("not ok");
        if (!is_ok && !is_not_ok) {
            last_failure = nullptr;
            continue;
        }
        TestResult r;
        r.suite_name = "tap";
        std::string rest = is_ok ? trim(line.substr(2)) : trim(line.substr(6));
        // Strip the test number, then an optional " - " separator.
        std::size_t i = 0;
        while (i < rest.size() && std::isdigit(static_cast<unsigned char>(rest[i]))) ++i;
        rest = trim(rest.substr(i));
        if (rest.starts_with("-")) rest = trim(rest.substr(1));
        // Directives: "name # SKIP reason" / "# TODO".
        bool skipped = false;
        const std::size_t hash = rest.find('#');
        if (hash != std::string::npos) {
            std::string directive = rest.substr(hash + 1);
            std::string upper;
            for (char c : directive) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
            if (contains(upper, "SKIP") || contains(upper, "TODO")) skipped = true;
            rest = trim(rest.substr(0, hash));
        }
        r.test_name = rest.empty() ? "test " + std::to_string(results.size() + 1) : rest;
        if (skipped) {
            r.status = TestStatus::Skipped;
            last_failure = nullptr;
        } else if (is_ok) {
            r.status = TestStatus::Pass;
            last_failure = nullptr;
        } else {
            r.status = TestStatus::Fail;
            r.failure_message = rest;
            r.stack_trace = rest.empty() ? "(no stack trace captured)" : rest;
        }
        results.push_back(std::move(r));
        if (results.back().status == TestStatus::Fail) last_failure = &results.back();
    }
    return results;
}

// ---------------------------------------------------------------------------
// Violations.

std::vector<Violation> parse_pmd_violations(const std::string& text) {
    std::vector<Violation> violations;
    XmlReader reader(text);
    auto root = reader.parse_document();
    if (!root) return violations;
    for (const auto& file_node : root->children) {
        if (file_node.name != "file") continue;
        const std::string file =
            file_node.attrs.count("name") ? file_node.attrs.at("name") : "";
        for (const auto& v : file_node.children) {
            if (v.name != "violation") continue;
            Violation violation;
            violation.file = file;
            violation.rule = v.attrs.count("rule") ? v.attrs.at("rule") : "";
            violation.begin_line =
                v.attrs.count("beginline") ? to_int(v.attrs.at("beginline")) : 0;
            violation.end_line = v.attrs.count("endline") ? to_int(v.attrs.at("endline"))
                                                          : violation.begin_line;
            if (violation.end_line < violation.begin_line)
                violation.end_line = violation.begin_line;
            violation.priority =
                clamp_priority(v.attrs.count("priority") ? to_int(v.attrs.at("priority")) : 3);
            violation.description = trim(v.text);
            violations.push_back(std::move(violation));
        }
    }
    return violations;
}

std::vector<Violation> parse_jsonlines_violations(const std::string& text) {
    std::vector<Violation> violations;
    for (const auto& line : split_lines(text)) {
        const std::string trimmed = trim(line);
        if (trimmed.empty() || trimmed.front() != '{') continue;
        json obj = json::parse(trimmed, nullptr, /*allow_exceptions=*/false);
        if (obj.is_discarded() || !obj.is_object()) continue;
        Violation v;
        v.rule = obj.value("rule", "");
        v.file = obj.value("file", "");
        v.begin_line = int_field(obj, "beginLine");
        v.end_line = int_field(obj, "endLine");
        if (v.end_line < v.begin_line) v.end_line = v.begin_line;
        v.priority = clamp_priority(obj.contains("priority") ? int_field(obj, "priority") : 3);
        v.description = obj.value("description", "");
        if (v.rule.empty() && v.description.empty()) continue;
        violations.push_back(std::move(v));
    }
    return violations;
}

void ToolchainAdapter::log_call(const std::string& step, const std::filesystem::path& workdir,
                                const std::string& suite, bool ok) {
    ToolCall call;
    call.step = step;
    call.call_index = step_counts_[step]++;
    call.src_fingerprint = fingerprint_tree(workdir / "src");
    call.suite = suite;
    call.ok = ok;
    call_log_.push_back(std::move(call));
}

}  // namespace llmloop
