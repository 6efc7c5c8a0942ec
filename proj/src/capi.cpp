#include "mindskill.h"

#include "mindskill/engine.hpp"
#include "mindskill/errors.hpp"
#include "mindskill/skilldoc.hpp"
#include "mindskill/util.hpp"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

using namespace mindskill;

struct mindskill_engine {
    Engine impl;
};

namespace {

thread_local std::string g_last_error;

mindskill_status status_for(Errc code) {
    switch (code) {
    case Errc::missing_frontmatter:
    case Errc::missing_field:
    case Errc::empty_body:
    case Errc::malformed_skill:
    case Errc::invalid_skill:
    case Errc::action_parse_error:
    case Errc::bad_template:
        return MINDSKILL_ERR_FORMAT;
    case Errc::execution_failed:
    case Errc::checker_failed:
    case Errc::unknown_env:
    case Errc::unknown_checker:
        return MINDSKILL_ERR_ENVIRONMENT;
    case Errc::provider_exhausted:
    case Errc::transport_error:
    case Errc::validation_exhausted:
    case Errc::script_miss:
        return MINDSKILL_ERR_PROVIDER;
    case Errc::induction_failed:
    case Errc::gradient_failed:
    case Errc::update_rejected:
    case Errc::best_unavailable:
        return MINDSKILL_ERR_OPTIMIZATION;
    case Errc::empty_library:
        return MINDSKILL_ERR_EMPTY_LIBRARY;
    case Errc::unknown_target:
        return MINDSKILL_ERR_UNKNOWN_TARGET;
    case Errc::config_error:
        return MINDSKILL_ERR_CONFIG;
    case Errc::io_error:
        return MINDSKILL_ERR_IO;
    case Errc::precondition:
        return MINDSKILL_ERR_INVALID_ARGUMENT;
    }
    return MINDSKILL_ERR_INTERNAL;
}

mindskill_status set_error(mindskill_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out)
        std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

// runs fn() inside the catch-all boundary; fn returns a status itself
template <typename Fn>
mindskill_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        return set_error(status_for(e.code()), e.what());
    } catch (const std::exception& e) {
        return set_error(MINDSKILL_ERR_INTERNAL, e.what());
    } catch (...) {
        return set_error(MINDSKILL_ERR_INTERNAL, "unknown failure");
    }
}

std::vector<std::string> parse_task_ids(const char* task_ids) {
    if (!task_ids || !*task_ids)
        return {};
    std::vector<std::string> out;
    for (const std::string& piece : split_csv(task_ids)) {
        if (!piece.empty())
            out.push_back(piece);
    }
    return out;
}

mindskill_status deliver(const CommandResult& result, int* exit_code, char** output) {
    char* text = dup_string(result.output);
    if (!text)
        return set_error(MINDSKILL_ERR_INTERNAL, "out of memory");
    *exit_code = result.exit_code;
    *output = text;
    g_last_error.clear();
    return MINDSKILL_OK;
}

} // namespace

extern "C" {

const char* mindskill_version(void) { return "0.1.0"; }

const char* mindskill_last_error(void) { return g_last_error.c_str(); }

mindskill_status mindskill_engine_open(const char* config_path, const char* workdir,
                                       mindskill_engine** out) {
    if (!config_path || !out)
        return set_error(MINDSKILL_ERR_INVALID_ARGUMENT, "config_path and out are required");
    *out = nullptr;
    return guarded([&] {
        AppConfig config = load_config(config_path);
        std::filesystem::path wd =
            workdir && *workdir ? std::filesystem::path(workdir) : std::filesystem::current_path();
        *out = new mindskill_engine{Engine(std::move(config), std::move(wd))};
        g_last_error.clear();
        return MINDSKILL_OK;
    });
}

void mindskill_engine_close(mindskill_engine* engine) { delete engine; }

mindskill_status mindskill_engine_set_option(mindskill_engine* engine, const char* key,
                                             const char* value) {
    if (!engine || !key || !value)
        return set_error(MINDSKILL_ERR_INVALID_ARGUMENT, "engine, key and value are required");
    return guarded([&]() -> mindskill_status {
        std::string k = key;
        std::string v = value;
        AppConfig& config = engine->impl.config();
        if (k == "retrieval_mode") {
            if (v != "model" && v != "lexical")
                return set_error(MINDSKILL_ERR_INVALID_ARGUMENT,
                                 "retrieval_mode must be 'model' or 'lexical'");
            config.retrieval_mode = v;
            g_last_error.clear();
            return MINDSKILL_OK;
        }
        int parsed = 0;
        try {
            size_t used = 0;
            parsed = std::stoi(v, &used);
            if (used != v.size())
                throw std::invalid_argument(v);
        } catch (const std::exception&) {
            return set_error(MINDSKILL_ERR_INVALID_ARGUMENT,
                             "option '" + k + "' needs an integer, got '" + v + "'");
        }
        if (parsed <= 0)
            return set_error(MINDSKILL_ERR_INVALID_ARGUMENT,
                             "option '" + k + "' must be positive");
        if (k == "k")
            config.k = parsed;
        else if (k == "q")
            config.q = parsed;
        else if (k == "parallel")
            config.parallel = parsed;
        else if (k == "max_steps")
            config.max_steps = parsed;
        else
            return set_error(MINDSKILL_ERR_INVALID_ARGUMENT, "unknown option '" + k + "'");
        g_last_error.clear();
        return MINDSKILL_OK;
    });
}

mindskill_status mindskill_engine_mine(mindskill_engine* engine, const char* task_ids,
                                       int* exit_code, char** output) {
    if (!engine || !exit_code || !output)
        return set_error(MINDSKILL_ERR_INVALID_ARGUMENT,
                         "engine, exit_code and output are required");
    return guarded(
        [&] { return deliver(engine->impl.mine(parse_task_ids(task_ids)), exit_code, output); });
}

mindskill_status mindskill_engine_eval(mindskill_engine* engine, const char* task_ids,
                                       int baseline, int* exit_code, char** output) {
    if (!engine || !exit_code || !output)
        return set_error(MINDSKILL_ERR_INVALID_ARGUMENT,
                         "engine, exit_code and output are required");
    return guarded([&] {
        return deliver(engine->impl.eval(parse_task_ids(task_ids), baseline != 0), exit_code,
                       output);
    });
}

mindskill_status mindskill_engine_inspect(mindskill_engine* engine, const char* target,
                                          int* exit_code, char** output) {
    if (!engine || !target || !exit_code || !output)
        return set_error(MINDSKILL_ERR_INVALID_ARGUMENT,
                         "engine, target, exit_code and output are required");
    return guarded(
        [&] { return deliver(engine->impl.inspect(target), exit_code, output); });
}

mindskill_status mindskill_engine_demo(mindskill_engine* engine, int* exit_code, char** output) {
    if (!engine || !exit_code || !output)
        return set_error(MINDSKILL_ERR_INVALID_ARGUMENT,
                         "engine, exit_code and output are required");
    return guarded([&] { return deliver(engine->impl.demo(), exit_code, output); });
}

mindskill_status mindskill_skill_canonicalize(const char* text, char** output) {
    if (!text || !output)
        return set_error(MINDSKILL_ERR_INVALID_ARGUMENT, "text and output are required");
    return guarded([&]() -> mindskill_status {
        std::string canonical = serialize_skill(parse_skill(text));
        char* out = dup_string(canonical);
        if (!out)
            return set_error(MINDSKILL_ERR_INTERNAL, "out of memory");
        *output = out;
        g_last_error.clear();
        return MINDSKILL_OK;
    });
}

mindskill_status mindskill_skill_violations(const char* text, char** output) {
    if (!text || !output)
        return set_error(MINDSKILL_ERR_INVALID_ARGUMENT, "text and output are required");
    return guarded([&]() -> mindskill_status {
        std::vector<SkillViolation> violations = validate_skill_format(text);
        std::string report;
        for (const SkillViolation& v : violations)
            report += render_violation(v) + "\n";
        char* out = dup_string(report);
        if (!out)
            return set_error(MINDSKILL_ERR_INTERNAL, "out of memory");
        *output = out;
        g_last_error.clear();
        return MINDSKILL_OK;
    });
}

void mindskill_string_free(char* s) { std::free(s); }

} // extern "C"
