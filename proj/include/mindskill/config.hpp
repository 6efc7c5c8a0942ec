#pragma once

#include "mindskill/provider.hpp"
#include "mindskill/textgrad.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace mindskill {

// Loaded from a JSON config file. Input paths resolve against the config
// file's directory; output paths resolve against the working directory.
// Credentials come from MINDSKILL_API_KEY only, never from this file.
struct AppConfig {
    // provider
    std::string backend = "scripted"; // "scripted" | "http"
    std::string base_url;             // http only; empty defers to MINDSKILL_BASE_URL
    std::optional<std::string> provider_hint;
    std::filesystem::path script; // scripted only
    std::map<std::string, std::string> models;        // per request tag, "default" fallback
    std::map<std::string, double> temperatures;       // per request tag, default 0
    int max_output_tokens = 4096;
    int retry_backoff_ms = 1000; // scripted backend runs with 0

    // run
    int q = 8;
    int max_steps = 15;
    std::string stop_marker = "TASK_COMPLETE";
    bool persist_runs = true;

    // retrieval
    int k = 3;
    std::string retrieval_mode = "model"; // "model" | "lexical"

    // inputs (resolved, absolute after load)
    std::filesystem::path scenario;
    std::filesystem::path prompts_dir;
    std::optional<std::filesystem::path> trajectories_dir;

    // outputs (relative to the working directory)
    std::filesystem::path library_dir = "library";
    std::filesystem::path runs_dir = "runs";
    std::filesystem::path results = "results.rec";

    int parallel = 1;

    CallSettings call_settings(std::string_view tag) const;
};

// Parses and validates; throws ConfigError on anything inconsistent and
// IoError when referenced inputs are missing.
AppConfig load_config(const std::filesystem::path& path);

// The seven prompt files every run needs, loaded from prompts_dir.
struct PromptSet {
    std::string induction_system;
    std::string deduction_system;
    RolePrompts roles; // judge/gradient/optimizer systems + deduction template
};

PromptSet load_prompts(const std::filesystem::path& prompts_dir);

} // namespace mindskill
