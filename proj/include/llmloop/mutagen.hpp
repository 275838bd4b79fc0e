#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "llmloop/promptgen.hpp"
#include "llmloop/toolchain.hpp"

namespace llmloop {

// ---------------------------------------------------------------------------
// Language profile: what the lexer must skip (comments, string/char
// literals) and which operator classes are enabled.

struct LanguageProfile {
    std::string line_comment = "//";
    std::string block_comment_open = "/*";
    std::string block_comment_close = "*/";
    bool double_quote_strings = true;
    bool single_quote_chars = true;
    std::vector<std::string> operator_classes = {"AOR", "ROR", "LOR", "BoolFlip"};

    bool class_enabled(std::string_view name) const;

    json to_json() const;
    static LanguageProfile from_json(const json& value);
    static LanguageProfile load(const std::filesystem::path& path);
};

// ---------------------------------------------------------------------------
// Operator table.  Fixed and enumerable; replacement lists never contain the
// original token.

struct MutationOperator {
    std::string klass;    // "AOR" | "ROR" | "LOR" | "BoolFlip"
    std::string token;
    std::vector<std::string> replacements;
};

const std::vector<MutationOperator>& mutation_operator_table();

// ---------------------------------------------------------------------------
// Mutants.

enum class MutantStatus { NotRun, Killed, Survived, CompileFailed, Timeout };

std::string mutant_status_name(MutantStatus status);

struct Mutant {
    int id = 0;  // sequential, 1-based, enumeration order
    std::string file;
    std::size_t byte_offset = 0;
    std::size_t length = 0;
    std::string original_token;
    std::string replacement_token;
    int line = 0;
    int column = 0;
    MutantStatus status = MutantStatus::NotRun;

    json to_json() const;
};

struct MutationLimits {
    std::size_t max_mutants = 500;  // keep-first cap over enumeration order
};

/// Deterministic enumeration: file path ascending, byte offset ascending,
/// operator-table order.  A file the lexer cannot scan (unterminated literal
/// or comment) is skipped with a warning; other files still produce mutants.
std::vector<Mutant> generate_mutants(const std::map<std::string, std::string>& sources,
                                     const LanguageProfile& profile,
                                     const MutationLimits& limits = {},
                                     std::vector<std::string>* warnings = nullptr);

/// Splice one mutant into the file under workdir.  Throws Error if the bytes
/// at the recorded span no longer match the original token.
void apply_mutant(const std::filesystem::path& workdir, const Mutant& mutant);

/// Restore the original token.  Throws Error on mismatch (workspace
/// corruption guard).
void revert_mutant(const std::filesystem::path& workdir, const Mutant& mutant);

// ---------------------------------------------------------------------------
// Report.

struct MutationReport {
    std::vector<Mutant> mutants;
    std::size_t killed = 0;
    std::size_t survived = 0;
    std::size_t invalid = 0;  // CompileFailed, excluded from the score
    std::size_t timeout = 0;  // excluded from the score

    /// killed / (killed + survived); empty when the denominator is zero.
    std::optional<double> score() const;

    std::vector<const Mutant*> survivors() const;  // id order

    json to_json() const;
};

/// Per mutant: apply, compile, run the suite (any failing test kills it),
/// revert.  Sources are byte-identical afterward or the run aborts.
MutationReport run_mutation_analysis(const std::filesystem::path& workdir,
                                     std::vector<Mutant> mutants, const TestSuiteRef& suite,
                                     ToolchainAdapter& toolchain, int per_mutant_timeout_s);

/// Default per-mutant deadline: twice the green-suite runtime, floor 5 s.
int default_mutant_timeout_s(std::int64_t green_suite_ms);

/// Surviving mutants as prompt feedback, ordered by mutant id.
FeedbackPayload survivors_payload(const MutationReport& report,
                                  const FeedbackLimits& limits = {});

}  // namespace llmloop
