// Regenerates the bundled replay benchmark fixture: three problems, one
// shared scripted-toolchain file, and recorded provider transcripts for two
// samples per problem.  Run it after changing prompt templates, the request
// digest, or pipeline call order, then commit the refreshed files:
//
//   ./build/record_replay_fixture tests/fixtures/replay_bench
//
// The tool records the transcripts by executing the benchmark once, then
// replays the fixture twice through the real CLI and fails loudly when the
// flow or the reports drift from what the acceptance suite pins.

#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "llmloop/cli.hpp"
#include "llmloop/evalharness.hpp"
#include "support.hpp"

using namespace llmloop;
using llmloop::testing::ScriptedProvider;
using llmloop::testing::TmpDir;
using llmloop::testing::bundle_response;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Fixture content.  Each good sample walks every loop: the initial bundle
// fails to compile, the given suite fails once, the analyzer flags one
// violation, the generated suite is green, and all four arithmetic mutants
// of the final source are killed.  gamma sample 1 never produces a parsable
// bundle, so every downstream stage aborts and grading touches no tools.

struct Spec {
    std::string id;
    std::string fn;
};

const std::vector<Spec> kSpecs = {{"alpha", "add"}, {"beta", "total"}, {"gamma", "plus2"}};

json make_problems() {
    json problems = json::array();
    for (const auto& spec : kSpecs) {
        const std::string& fn = spec.fn;
        json entry;
        entry["id"] = spec.id;
        entry["prompt"] = "Write int " + fn + "(int a, int b) returning the sum of a and b.";
        entry["declaration"] = "int " + fn + "(int a, int b);";
        entry["example_tests"] =
            json::array({"// example check for " + fn + "\nassert_eq(" + fn + "(1, 2), 3);\n"});
        entry["validation_tests"] =
            json::array({"// holdout check for " + fn + "\nassert_eq(" + fn + "(19, 23), 42);\n"});
        problems.push_back(std::move(entry));
    }
    return problems;
}

json failing_run(const std::string& suite, const std::string& test, const std::string& message) {
    json result;
    result["suite"] = suite;
    result["test"] = test;
    result["status"] = "fail";
    result["message"] = message;
    return json{{"results", json::array({result})}};
}

// Shared per-task ledger (call indices restart for every problem/sample pair):
//   compile   0 fail (initial bundle), default ok (fixes, mutants, grading)
//   run_tests 0 given red, 1-4 green checks, 5-8 mutant kills,
//             9-10 validation red for v1/v2, default green
//   analyze   0 one violation, 1 clean
json make_script() {
    json diag;
    diag["file"] = "src/main.cpp";
    diag["line"] = 1;
    diag["column"] = 34;
    diag["severity"] = "error";
    diag["code"] = "expected_semicolon";
    diag["message"] = "expected ';' before 'return'";

    json script;
    script["compile"]["calls"]["0"] = json{{"ok", false}, {"diagnostics", json::array({diag})}};
    script["compile"]["default"] = json{{"ok", true}};

    json& runs = script["run_tests"]["calls"];
    runs["0"] = failing_run("given", "test_1.cpp", "expected the sum, got something else");
    for (int i = 1; i <= 4; ++i) runs[std::to_string(i)] = json{{"pass_all", true}};
    for (int i = 5; i <= 8; ++i)
        runs[std::to_string(i)] =
            failing_run("llm", "arithmetic probe", "mutated operator detected");
    runs["9"] = failing_run("validation", "test_1.cpp", "initial bundle never compiled cleanly");
    runs["10"] = failing_run("validation", "test_1.cpp", "subtraction instead of addition");
    script["run_tests"]["default"] = json{{"pass_all", true}};

    json violation;
    violation["rule"] = "UnusedLocalVariable";
    violation["file"] = "src/main.cpp";
    violation["begin_line"] = 1;
    violation["end_line"] = 1;
    violation["priority"] = 3;
    violation["description"] = "intermediate value obscures the returned expression";
    script["analyze"]["calls"]["0"] = json{{"violations", json::array({violation})}};
    script["analyze"]["calls"]["1"] = json{{"violations", json::array()}};
    return script;
}

std::vector<std::string> good_responses(const std::string& fn) {
    return {
        // v1: parses, does not compile (missing semicolon narrative).
        bundle_response({{"src/main.cpp",
                          "int " + fn + "(int a, int b) { int sum = a + b return sum; }\n"}},
                        "src/main.cpp"),
        // v2: compiles, wrong arithmetic.
        bundle_response({{"src/main.cpp", "int " + fn + "(int a, int b) { return a - b; }\n"}},
                        "src/main.cpp"),
        // v3: given tests pass.
        bundle_response({{"src/main.cpp", "int " + fn + "(int a, int b) { return a + b; }\n"}},
                        "src/main.cpp"),
        // v4: analyzer appeased; still exactly one mutable '+' token.
        bundle_response({{"src/main.cpp",
                          "int " + fn + "(int a, int b) { int sum = a + b; return sum; }\n"}},
                        "src/main.cpp"),
        // Generated suite: two test files.
        bundle_response({{"tests/llm/test_zero.cpp",
                          "// zero case\nassert_eq(" + fn + "(0, 0), 0);\n"},
                         {"tests/llm/test_small.cpp",
                          "// small case\nassert_eq(" + fn + "(2, 5), 7);\n"}}),
    };
}

std::vector<std::string> refusal_responses() {
    // Five attempts, each a primary call plus one repair call; none parses.
    std::vector<std::string> responses;
    for (int i = 0; i < 10; ++i)
        responses.push_back("The request is unclear to me, so here is prose without any "
                            "structured payload (reply " +
                            std::to_string(i) + ").");
    return responses;
}

struct RecordingScripted final : LlmProvider {
    ScriptedProvider inner;
    Transcript transcript;
    LogicalClock clock;
    RecordingProvider recorder{inner, transcript, clock};

    explicit RecordingScripted(std::vector<std::string> responses)
        : inner(std::move(responses)) {}

    CompletionResponse complete(const CompletionRequest& request) override {
        return recorder.complete(request);
    }
};

RunConfig fixture_run_config() {
    RunConfig run;
    run.static_analysis = true;
    run.enable_llm_tests = true;
    run.mutation = true;
    return run;  // budget 5, base temperature 0.0
}

int fail(const std::string& what) {
    std::cerr << "fixture generation failed: " << what << "\n";
    return 1;
}

const json* find_outcome(const json& sample, const std::string& stage) {
    for (const auto& outcome : sample.at("outcomes"))
        if (outcome.at("stage") == stage) return &outcome;
    return nullptr;
}

bool expect_outcome(const json& sample, const std::string& stage, const std::string& status,
                    const std::string& detail, std::string& error) {
    const json* outcome = find_outcome(sample, stage);
    if (!outcome) {
        error = "no outcome for stage " + stage;
        return false;
    }
    if (outcome->at("status") != status || outcome->at("detail") != detail) {
        error = stage + " recorded " + outcome->at("status").get<std::string>() + " - " +
                outcome->at("detail").get<std::string>() + ", wanted " + status + " - " + detail;
        return false;
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: record_replay_fixture FIXTURE_DIR\n";
        return 2;
    }
    const fs::path fixture_dir = argv[1];
    const fs::path transcripts_dir = fixture_dir / "transcripts";
    fs::create_directories(fixture_dir);
    fs::remove_all(transcripts_dir);

    const json problems_json = make_problems();
    const json script_json = make_script();
    write_text_file(fixture_dir / "problems.json", canonical_dump(problems_json));
    write_text_file(fixture_dir / "scripted.json", canonical_dump(script_json));

    // -----------------------------------------------------------------------
    // Record: run the benchmark once with scripted providers wrapped in
    // recorders, saving one transcript per (problem, sample).

    const auto provider_factory = [&](const std::string& id, int sample) -> ProviderLease {
        const bool refusal = id == "gamma" && sample == 1;
        std::string fn;
        for (const auto& spec : kSpecs)
            if (spec.id == id) fn = spec.fn;
        auto provider = std::make_unique<RecordingScripted>(
            refusal ? refusal_responses() : good_responses(fn));
        RecordingScripted* raw = provider.get();
        const fs::path path = transcripts_dir / id / (std::to_string(sample) + ".json");
        return {std::move(provider), [raw, path] { raw->transcript.save(path); }};
    };
    const fs::path script_path = fixture_dir / "scripted.json";
    const auto toolchain_factory = [&](const std::string&, int) {
        return std::make_unique<ScriptedToolchain>(ScriptedToolchain::load(script_path));
    };

    TmpDir scratch("replay-fixture");
    BenchmarkConfig config;
    config.pipeline = pipeline_config(fixture_run_config());
    config.samples_per_problem = 2;
    config.workers = 1;
    config.work_root = scratch.path() / "record" / "work";

    const auto specs = load_problem_set(fixture_dir / "problems.json");
    run_benchmark(specs, config, provider_factory, toolchain_factory);

    // -----------------------------------------------------------------------
    // Verify: replay through the real CLI twice and pin the recorded flow.

    const auto replay = [&](const fs::path& out_dir) {
        std::ostringstream out, err;
        const int code = run_cli({"bench", "--problems", (fixture_dir / "problems.json").string(),
                                  "--scripted", script_path.string(), "--replay", "--transcripts",
                                  transcripts_dir.string(), "--samples", "2", "-s", "-t", "-mut",
                                  "--out", out_dir.string()},
                                 out, err);
        if (code != 0) {
            std::cerr << out.str() << err.str();
            return false;
        }
        return true;
    };

    const fs::path out1 = scratch.path() / "replay1";
    const fs::path out2 = scratch.path() / "replay2";
    if (!replay(out1) || !replay(out2)) return fail("CLI replay exited nonzero");

    for (const char* name : {"result.json", "stage_stats.csv", "pass_k.csv"}) {
        const std::string first = read_text_file(out1 / name);
        const std::string second = read_text_file(out2 / name);
        if (first != second) return fail(std::string(name) + " differs between replays");
    }

    const json result = json::parse(read_text_file(out1 / "result.json"));
    std::string error;
    const json& alpha0 = result.at("alpha").at(0);
    if (!expect_outcome(alpha0, "baseline", "unchanged", "initial bundle recorded as v1", error) ||
        !expect_outcome(alpha0, "compile", "solved", "compiled as v2", error) ||
        !expect_outcome(alpha0, "given_tests", "solved", "given tests pass as v3", error) ||
        !expect_outcome(alpha0, "static_analysis", "solved", "no violations remain as v4",
                        error) ||
        !expect_outcome(alpha0, "generated_tests:llm", "solved", "2 generated tests, all pass",
                        error) ||
        !expect_outcome(alpha0, "mutation:llm", "solved", "all 4 mutants addressed", error))
        return fail("alpha sample 0: " + error);

    const json& gamma1 = result.at("gamma").at(1);
    const json* gamma_compile = find_outcome(gamma1, "compile");
    if (!gamma_compile || gamma_compile->at("status") != "budget_exhausted")
        return fail("gamma sample 1 should exhaust the compile budget");
    for (const char* stage :
         {"given_tests", "static_analysis", "generated_tests:llm", "mutation:llm"}) {
        const json* outcome = find_outcome(gamma1, stage);
        if (!outcome || outcome->at("status") != "aborted")
            return fail(std::string("gamma sample 1 stage ") + stage + " should abort");
    }
    if (gamma1.at("validationPassed") != false || alpha0.at("validationPassed") != true)
        return fail("validation grades drifted");

    std::cout << "fixture written to " << fixture_dir.string() << "\n\n";
    for (const char* name : {"stage_stats.csv", "pass_k.csv"}) {
        std::cout << "=== " << name << " ===\n" << read_text_file(out1 / name) << "\n";
    }
    std::cout << "replay verified: reports are byte-identical across two runs\n";
    return 0;
}
