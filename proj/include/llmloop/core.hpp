#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace llmloop {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Error hierarchy.  Everything thrown by the framework derives from Error so
// the CLI can catch one type at the top level.

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Transport-level failure talking to the model provider (after retries).
class ProviderError : public Error {
public:
    using Error::Error;
};

/// Replay transcript does not match the request sequence being replayed.
class ReplayDivergence : public Error {
public:
    ReplayDivergence(std::size_t entry_index, const std::string& what)
        : Error(what), entry_index(entry_index) {}
    std::size_t entry_index;
};

/// A configured external command does not exist or cannot be executed.
class ToolchainUnavailable : public Error {
public:
    using Error::Error;
};

/// Bad command-line usage.  Message names the offending flag.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Workspace or configuration setup failure.
class SetupError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Clock.  The pipeline takes a clock so deterministic runs (scripted
// toolchain + replay provider) can use logical time and produce byte-stable
// records.

class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t now_ms() = 0;
};

class SystemClock final : public Clock {
public:
    std::int64_t now_ms() override;
};

/// Monotone counter clock: every reading advances by one millisecond.
class LogicalClock final : public Clock {
public:
    std::int64_t now_ms() override { return ++tick_; }

private:
    std::int64_t tick_ = 0;
};

// ---------------------------------------------------------------------------
// Canonical JSON: sorted keys (nlohmann::json object storage), two-space
// indent, LF endings, trailing newline.  All persisted artifacts go through
// this so byte comparison is meaningful.

std::string canonical_dump(const json& value);

/// Parse + re-dump, for comparing externally produced files.
std::string canonicalize_text(const std::string& text);

// ---------------------------------------------------------------------------
// FNV-1a 64-bit.  Stable across platforms and runs; used for request digests
// and workdir content fingerprints.

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ull);
std::string to_hex(std::uint64_t value);

// ---------------------------------------------------------------------------
// Filesystem helpers.

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// Relative paths of regular files under root, sorted, using '/' separators.
std::vector<std::string> list_files_recursive(const std::filesystem::path& root);

/// Fingerprint of a directory tree: hash over sorted (relative path, bytes).
std::string fingerprint_tree(const std::filesystem::path& root);

// ---------------------------------------------------------------------------
// Small string helpers.

std::vector<std::string> split_lines(std::string_view text);
std::string trim(std::string_view text);
bool contains(std::string_view haystack, std::string_view needle);

/// Fixed two-decimal formatting ("117.50"); used by reports and digests.
std::string format_fixed2(double value);

}  // namespace llmloop
