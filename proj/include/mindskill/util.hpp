#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mindskill {

// --- hashing / deterministic rng ------------------------------------------

// FNV-1a 64-bit, rendered as 16 hex chars. Used for prompt digests and audit
// records; identity checks only.
std::string fnv1a64_hex(std::string_view data);

// Portable seeded generator (splitmix64). std:: distributions are not
// bit-stable across platforms, so all seeded content goes through this.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next();
    // uniform in [0, bound), bound > 0
    uint64_t below(uint64_t bound);
    bool chance_half() { return (next() & 1u) != 0; }

private:
    uint64_t state_;
};

// --- strings ----------------------------------------------------------------

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);
bool contains(std::string_view haystack, std::string_view needle);
std::vector<std::string> split_lines(std::string_view text);
std::vector<std::string> split_csv(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// lowercase alphanumeric runs; basis for lexical retrieval scoring
std::vector<std::string> tokenize_words(std::string_view text);
// whitespace-separated token count; basis for injected-size reporting
size_t count_ws_tokens(std::string_view text);

// --- filesystem --------------------------------------------------------------

std::string read_file(const std::filesystem::path& path);
// whole-file write via temp-then-rename
void atomic_write_file(const std::filesystem::path& path, std::string_view content);
void ensure_dir(const std::filesystem::path& dir);

} // namespace mindskill
