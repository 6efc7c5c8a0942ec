#include "mindskill/config.hpp"

#include "mindskill/errors.hpp"
#include "mindskill/util.hpp"

#include <json.hpp>

namespace mindskill {

using nlohmann::json;

CallSettings AppConfig::call_settings(std::string_view tag) const {
    CallSettings s;
    std::string key(tag);
    auto model = models.find(key);
    if (model == models.end())
        model = models.find("default");
    s.model_id = model == models.end() ? (backend == "scripted" ? "scripted" : "")
                                       : model->second;
    if (s.model_id.empty())
        fail(Errc::config_error, "no model configured for tag '" + key + "'");
    auto temp = temperatures.find(key);
    s.temperature = temp == temperatures.end() ? 0.0 : temp->second;
    s.max_output_tokens = max_output_tokens;
    s.provider_hint = provider_hint;
    return s;
}

namespace {

std::filesystem::path resolve_input(const std::filesystem::path& base,
                                    const std::filesystem::path& p) {
    return p.is_absolute() ? p : base / p;
}

void require_file(const std::filesystem::path& p, const std::string& what) {
    if (!std::filesystem::is_regular_file(p))
        fail(Errc::io_error, what + " not found: " + p.string());
}

} // namespace

AppConfig load_config(const std::filesystem::path& path) {
    json root;
    try {
        root = json::parse(read_file(path));
    } catch (const json::exception& e) {
        fail(Errc::config_error, "config does not parse: " + path.string() + ": " + e.what());
    }

    AppConfig cfg;
    std::filesystem::path base = std::filesystem::absolute(path).parent_path();
    try {
        if (root.contains("provider")) {
            const json& p = root.at("provider");
            if (p.contains("backend"))
                cfg.backend = p.at("backend").get<std::string>();
            if (p.contains("base_url"))
                cfg.base_url = p.at("base_url").get<std::string>();
            if (p.contains("provider_hint"))
                cfg.provider_hint = p.at("provider_hint").get<std::string>();
            if (p.contains("script"))
                cfg.script = resolve_input(base, p.at("script").get<std::string>());
            if (p.contains("models"))
                for (const auto& [tag, model] : p.at("models").items())
                    cfg.models[tag] = model.get<std::string>();
            if (p.contains("temperatures"))
                for (const auto& [tag, t] : p.at("temperatures").items())
                    cfg.temperatures[tag] = t.get<double>();
            if (p.contains("max_output_tokens"))
                cfg.max_output_tokens = p.at("max_output_tokens").get<int>();
            if (p.contains("retry_backoff_ms"))
                cfg.retry_backoff_ms = p.at("retry_backoff_ms").get<int>();
        }
        if (root.contains("run")) {
            const json& r = root.at("run");
            if (r.contains("q"))
                cfg.q = r.at("q").get<int>();
            if (r.contains("max_steps"))
                cfg.max_steps = r.at("max_steps").get<int>();
            if (r.contains("stop_marker"))
                cfg.stop_marker = r.at("stop_marker").get<std::string>();
            if (r.contains("persist_runs"))
                cfg.persist_runs = r.at("persist_runs").get<bool>();
        }
        if (root.contains("retrieval")) {
            const json& r = root.at("retrieval");
            if (r.contains("k"))
                cfg.k = r.at("k").get<int>();
            if (r.contains("mode"))
                cfg.retrieval_mode = r.at("mode").get<std::string>();
        }
        if (root.contains("paths")) {
            const json& p = root.at("paths");
            if (p.contains("scenario"))
                cfg.scenario = resolve_input(base, p.at("scenario").get<std::string>());
            if (p.contains("prompts_dir"))
                cfg.prompts_dir = resolve_input(base, p.at("prompts_dir").get<std::string>());
            if (p.contains("trajectories_dir"))
                cfg.trajectories_dir =
                    resolve_input(base, p.at("trajectories_dir").get<std::string>());
            if (p.contains("library_dir"))
                cfg.library_dir = p.at("library_dir").get<std::string>();
            if (p.contains("runs_dir"))
                cfg.runs_dir = p.at("runs_dir").get<std::string>();
            if (p.contains("results"))
                cfg.results = p.at("results").get<std::string>();
        }
        if (root.contains("parallel"))
            cfg.parallel = root.at("parallel").get<int>();
    } catch (const json::exception& e) {
        fail(Errc::config_error, "bad config value in " + path.string() + ": " + e.what());
    }

    if (cfg.backend != "scripted" && cfg.backend != "http")
        fail(Errc::config_error, "provider.backend must be 'scripted' or 'http'");
    if (cfg.q < 1)
        fail(Errc::config_error, "run.q must be positive");
    if (cfg.max_steps < 1)
        fail(Errc::config_error, "run.max_steps must be positive");
    if (cfg.k < 1)
        fail(Errc::config_error, "retrieval.k must be positive");
    if (cfg.retrieval_mode != "model" && cfg.retrieval_mode != "lexical")
        fail(Errc::config_error, "retrieval.mode must be 'model' or 'lexical'");
    if (cfg.parallel < 1)
        fail(Errc::config_error, "parallel must be positive");
    if (cfg.max_output_tokens < 1)
        fail(Errc::config_error, "provider.max_output_tokens must be positive");
    if (cfg.retry_backoff_ms < 0)
        fail(Errc::config_error, "provider.retry_backoff_ms cannot be negative");
    if (cfg.stop_marker.empty())
        fail(Errc::config_error, "run.stop_marker cannot be empty");

    if (cfg.scenario.empty())
        fail(Errc::config_error, "paths.scenario is required");
    if (cfg.prompts_dir.empty())
        fail(Errc::config_error, "paths.prompts_dir is required");
    require_file(cfg.scenario, "scenario file");
    if (cfg.backend == "scripted") {
        if (cfg.script.empty())
            fail(Errc::config_error, "scripted backend needs provider.script");
        require_file(cfg.script, "script file");
        cfg.retry_backoff_ms = 0; // scripts never benefit from waiting
    }
    load_prompts(cfg.prompts_dir); // existence check at startup
    return cfg;
}

PromptSet load_prompts(const std::filesystem::path& prompts_dir) {
    auto load = [&](const char* name) {
        std::filesystem::path p = prompts_dir / name;
        require_file(p, std::string("prompt file '") + name + "'");
        std::string text = read_file(p);
        if (trim(text).empty())
            fail(Errc::config_error, "prompt file is empty: " + p.string());
        return text;
    };
    PromptSet prompts;
    prompts.induction_system = load("induction_system.txt");
    prompts.deduction_system = load("deduction_system.txt");
    prompts.roles.deduction_template = load("deduction_template.txt");
    prompts.roles.judge_recon_system = load("judge_recon_system.txt");
    prompts.roles.judge_rubric_system = load("judge_rubric_system.txt");
    prompts.roles.gradient_system = load("gradient_system.txt");
    prompts.roles.optimizer_system = load("optimizer_system.txt");
    return prompts;
}

} // namespace mindskill
