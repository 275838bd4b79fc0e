#include "llmloop/mutagen.hpp"

#include <algorithm>
#include <cctype>

namespace llmloop {

// ---------------------------------------------------------------------------
// LanguageProfile.

bool LanguageProfile::class_enabled(std::string_view name) const {
    return std::find(operator_classes.begin(), operator_classes.end(), name) !=
           operator_classes.end();
}

json LanguageProfile::to_json() const {
    return {{"lineComment", line_comment},
            {"blockCommentOpen", block_comment_open},
            {"blockCommentClose", block_comment_close},
            {"doubleQuoteStrings", double_quote_strings},
            {"singleQuoteChars", single_quote_chars},
            {"operatorClasses", operator_classes}};
}

LanguageProfile LanguageProfile::from_json(const json& value) {
    LanguageProfile profile;
    profile.line_comment = value.value("lineComment", profile.line_comment);
    profile.block_comment_open = value.value("blockCommentOpen", profile.block_comment_open);
    profile.block_comment_close = value.value("blockCommentClose", profile.block_comment_close);
    profile.double_quote_strings = value.value("doubleQuoteStrings", profile.double_quote_strings);
    profile.single_quote_chars = value.value("singleQuoteChars", profile.single_quote_chars);
    if (value.contains("operatorClasses")) {
        profile.operator_classes.clear();
        for (const auto& c : value.at("operatorClasses"))
            profile.operator_classes.push_back(c.get<std::string>());
    }
    return profile;
}

LanguageProfile LanguageProfile::load(const std::filesystem::path& path) {
    json value = json::parse(read_text_file(path), nullptr, /*allow_exceptions=*/false);
    if (value.is_discarded()) throw SetupError("language profile: invalid JSON in " + path.string());
    return from_json(value);
}

// ---------------------------------------------------------------------------
// Operator table.

namespace {

std::vector<MutationOperator> build_operator_table() {
    std::vector<MutationOperator> table;
    const std::vector<std::string> aor = {"+", "-", "*", "/", "%"};
    for (const auto& token : aor) {
        MutationOperator op{"AOR", token, {}};
        for (const auto& r : aor)
            if (r != token) op.replacements.push_back(r);
        table.push_back(std::move(op));
    }
    const std::vector<std::string> ror = {"<", "<=", ">", ">=", "==", "!="};
    for (const auto& token : ror) {
        MutationOperator op{"ROR", token, {}};
        for (const auto& r : ror)
            if (r != token) op.replacements.push_back(r);
        table.push_back(std::move(op));
    }
    table.push_back({"LOR", "&&", {"||"}});
    table.push_back({"LOR", "||", {"&&"}});
    table.push_back({"BoolFlip", "true", {"false"}});
    table.push_back({"BoolFlip", "false", {"true"}});
    return table;
}

}  // namespace

const std::vector<MutationOperator>& mutation_operator_table() {
    static const std::vector<MutationOperator> table = build_operator_table();
    return table;
}

// ---------------------------------------------------------------------------
// Lexer.  Skips comments and literals per the profile, recognizes compound
// operators so their components are never mutated in place, and reports
// token occurrences with line/column positions.

namespace {

struct Occurrence {
    std::size_t offset;
    std::string token;
    int line;
    int column;
};

// Compound tokens that must be consumed whole and never mutated.
const std::vector<std::string>& skip_tokens() {
    static const std::vector<std::string> tokens = {
        "<<=", ">>=", "<=>", "->*", "++", "--", "->", "<<", ">>", "+=", "-=",
        "*=", "/=", "%=", "&=", "|=", "^=", "::"};
    return tokens;
}

// Mutation candidates, longest first so "<=" wins over "<".
const std::vector<std::string>& candidate_tokens() {
    static const std::vector<std::string> tokens = {"<=", ">=", "==", "!=", "&&", "||",
                                                    "+",  "-",  "*",  "/",  "%",  "<",
                                                    ">"};
    return tokens;
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

/// Returns false on a lexing failure (unterminated literal or block
/// comment); `reason` names it.
bool scan_occurrences(const std::string& text, const LanguageProfile& profile,
                      std::vector<Occurrence>& out, std::string& reason) {
    std::size_t i = 0;
    int line = 1;
    int column = 1;
    const auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n && i < text.size(); ++k, ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
    };
    const auto matches = [&](const std::string& token) {
        return !token.empty() && text.compare(i, token.size(), token) == 0;
    };

    while (i < text.size()) {
        if (matches(profile.line_comment)) {
            while (i < text.size() && text[i] != '\n') advance(1);
            continue;
        }
        if (matches(profile.block_comment_open)) {
            const std::size_t close =
                text.find(profile.block_comment_close, i + profile.block_comment_open.size());
            if (close == std::string::npos) {
                reason = "unterminated block comment";
                return false;
            }
            advance(close + profile.block_comment_close.size() - i);
            continue;
        }
        const char c = text[i];
        if ((c == '"' && profile.double_quote_strings) ||
            (c == '\'' && profile.single_quote_chars)) {
            const char quote = c;
            advance(1);
            bool closed = false;
            while (i < text.size()) {
                if (text[i] == '\\') {
                    advance(2);
                    continue;
                }
                if (text[i] == quote) {
                    advance(1);
                    closed = true;
                    break;
                }
                advance(1);
            }
            if (!closed) {
                reason = quote == '"' ? "unterminated string literal" : "unterminated char literal";
                return false;
            }
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = i;
            const int start_line = line;
            const int start_column = column;
            while (i < text.size() && is_word_char(text[i])) advance(1);
            const std::string word = text.substr(start, i - start);
            if (word == "true" || word == "false")
                out.push_back({start, word, start_line, start_column});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            // Numbers (including hex and floats) never yield mutants.
            while (i < text.size() && (is_word_char(text[i]) || text[i] == '.')) advance(1);
            continue;
        }

        bool consumed = false;
        for (const auto& token : skip_tokens()) {
            if (matches(token)) {
                advance(token.size());
                consumed = true;
                break;
            }
        }
        if (consumed) continue;
        for (const auto& token : candidate_tokens()) {
            if (matches(token)) {
                out.push_back({i, token, line, column});
                advance(token.size());
                consumed = true;
                break;
            }
        }
        if (!consumed) advance(1);
    }
    return true;
}

}  // namespace

std::string mutant_status_name(MutantStatus status) {
    switch (status) {
        case MutantStatus::NotRun: return "not_run";
        case MutantStatus::Killed: return "killed";
        case MutantStatus::Survived: return "survived";
        case MutantStatus::CompileFailed: return "compile_failed";
        case MutantStatus::Timeout: return "timeout";
    }
    return "not_run";
}

json Mutant::to_json() const {
    return {{"id", id},
            {"file", file},
            {"byteOffset", byte_offset},
            {"length", length},
            {"original", original_token},
            {"replacement", replacement_token},
            {"line", line},
            {"column", column},
            {"status", mutant_status_name(status)}};
}

std::vector<Mutant> generate_mutants(const std::map<std::string, std::string>& sources,
                                     const LanguageProfile& profile,
                                     const MutationLimits& limits,
                                     std::vector<std::string>* warnings) {
    std::map<std::string, const MutationOperator*> by_token;
    for (const auto& op : mutation_operator_table()) by_token[op.token] = &op;

    std::vector<Mutant> mutants;
    bool capped = false;
    for (const auto& [path, text] : sources) {
        if (capped) break;
        std::vector<Occurrence> occurrences;
        std::string reason;
        if (!scan_occurrences(text, profile, occurrences, reason)) {
            if (warnings)
                warnings->push_back("mutation lexer skipped " + path + ": " + reason);
            continue;
        }
        for (const auto& occurrence : occurrences) {
            const auto it = by_token.find(occurrence.token);
            if (it == by_token.end() || !profile.class_enabled(it->second->klass)) continue;
            for (const auto& replacement : it->second->replacements) {
                if (mutants.size() >= limits.max_mutants) {
                    capped = true;
                    break;
                }
                Mutant m;
                m.file = path;
                m.byte_offset = occurrence.offset;
                m.length = occurrence.token.size();
                m.original_token = occurrence.token;
                m.replacement_token = replacement;
                m.line = occurrence.line;
                m.column = occurrence.column;
                mutants.push_back(std::move(m));
            }
            if (capped) break;
        }
    }
    for (std::size_t k = 0; k < mutants.size(); ++k) mutants[k].id = static_cast<int>(k) + 1;
    if (capped && warnings)
        warnings->push_back("mutant cap of " + std::to_string(limits.max_mutants) + " reached");
    return mutants;
}

void apply_mutant(const std::filesystem::path& workdir, const Mutant& mutant) {
    const auto path = workdir / mutant.file;
    std::string text = read_text_file(path);
    if (mutant.byte_offset + mutant.length > text.size() ||
        text.compare(mutant.byte_offset, mutant.length, mutant.original_token) != 0)
        throw Error("mutant " + std::to_string(mutant.id) + ": source bytes do not match in " +
                    mutant.file);
    text.replace(mutant.byte_offset, mutant.length, mutant.replacement_token);
    write_text_file(path, text);
}

void revert_mutant(const std::filesystem::path& workdir, const Mutant& mutant) {
    const auto path = workdir / mutant.file;
    std::string text = read_text_file(path);
    const std::size_t replaced = mutant.replacement_token.size();
    if (mutant.byte_offset + replaced > text.size() ||
        text.compare(mutant.byte_offset, replaced, mutant.replacement_token) != 0)
        throw Error("mutant " + std::to_string(mutant.id) + ": revert bytes do not match in " +
                    mutant.file);
    text.replace(mutant.byte_offset, replaced, mutant.original_token);
    write_text_file(path, text);
}

// ---------------------------------------------------------------------------
// Report.

std::optional<double> MutationReport::score() const {
    const std::size_t denominator = killed + survived;
    if (denominator == 0) return std::nullopt;
    return static_cast<double>(killed) / static_cast<double>(denominator);
}

std::vector<const Mutant*> MutationReport::survivors() const {
    std::vector<const Mutant*> out;
    for (const auto& m : mutants)
        if (m.status == MutantStatus::Survived) out.push_back(&m);
    return out;
}

json MutationReport::to_json() const {
    json mutant_list = json::array();
    for (const auto& m : mutants) mutant_list.push_back(m.to_json());
    json value = {{"mutants", mutant_list}, {"killed", killed},   {"survived", survived},
                  {"invalid", invalid},     {"timeout", timeout}};
    const auto s = score();
    value["score"] = s ? json(*s) : json(nullptr);
    return value;
}

MutationReport run_mutation_analysis(const std::filesystem::path& workdir,
                                     std::vector<Mutant> mutants, const TestSuiteRef& suite,
                                     ToolchainAdapter& toolchain, int per_mutant_timeout_s) {
    // Snapshot every mutated file up front: the revert guard compares bytes.
    std::map<std::string, std::string> originals;
    for (const auto& m : mutants)
        if (!originals.count(m.file)) originals[m.file] = read_text_file(workdir / m.file);

    MutationReport report;
    for (auto& m : mutants) {
        apply_mutant(workdir, m);
        const CompileOutcome compiled = toolchain.compile(workdir);
        if (!compiled.ok) {
            m.status = MutantStatus::CompileFailed;
        } else {
            const auto results = toolchain.run_tests(workdir, suite, per_mutant_timeout_s);
            const bool timed_out =
                std::any_of(results.begin(), results.end(),
                            [](const TestResult& r) { return r.status == TestStatus::Timeout; });
            const bool killed = std::any_of(results.begin(), results.end(),
                                            [](const TestResult& r) { return r.failed(); });
            m.status = timed_out ? MutantStatus::Timeout
                                 : killed ? MutantStatus::Killed : MutantStatus::Survived;
        }
        revert_mutant(workdir, m);
        if (read_text_file(workdir / m.file) != originals.at(m.file))
            throw Error("mutation revert left " + m.file + " changed; aborting");

        switch (m.status) {
            case MutantStatus::Killed: ++report.killed; break;
            case MutantStatus::Survived: ++report.survived; break;
            case MutantStatus::CompileFailed: ++report.invalid; break;
            case MutantStatus::Timeout: ++report.timeout; break;
            case MutantStatus::NotRun: break;
        }
    }
    report.mutants = std::move(mutants);
    return report;
}

int default_mutant_timeout_s(std::int64_t green_suite_ms) {
    const std::int64_t doubled_s = (2 * green_suite_ms + 999) / 1000;
    return static_cast<int>(std::max<std::int64_t>(5, doubled_s));
}

FeedbackPayload survivors_payload(const MutationReport& report, const FeedbackLimits& limits) {
    std::vector<SurvivorRecord> records;
    for (const Mutant* m : report.survivors()) {
        SurvivorRecord r;
        r.file = m->file;
        r.line = m->line;
        r.column = m->column;
        r.original = m->original_token;
        r.replacement = m->replacement_token;
        records.push_back(std::move(r));
    }
    return survivor_feedback(records, limits);
}

}  // namespace llmloop
