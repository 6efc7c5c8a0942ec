#include "mindskill/environment.hpp"

#include "mindskill/errors.hpp"
#include "mindskill/toyworld.hpp"
#include "mindskill/util.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace mindskill {

using nlohmann::json;

// --- action parsing ---------------------------------------------------------

namespace {

class ActionParser {
public:
    explicit ActionParser(const std::string& text) : text_(text) {}

    ToolCall parse() {
        ws();
        ToolCall call;
        call.api = ident("api name");
        ws();
        expect('(');
        ws();
        if (!peek_is(')')) {
            while (true) {
                std::string name = ident("argument name");
                if (call.args.contains(name))
                    err("duplicate argument '" + name + "'");
                ws();
                expect('=');
                ws();
                call.args[name] = value(true);
                ws();
                if (peek_is(')'))
                    break;
                expect(',');
                ws();
            }
        }
        expect(')');
        ws();
        if (pos_ != text_.size())
            err("trailing characters after call");
        return call;
    }

private:
    [[noreturn]] void err(const std::string& what) {
        fail(Errc::action_parse_error, what + " at offset " + std::to_string(pos_));
    }

    void ws() {
        while (pos_ < text_.size() &&
               std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool peek_is(char c) const { return pos_ < text_.size() && text_[pos_] == c; }

    void expect(char c) {
        if (!peek_is(c))
            err(std::string("expected '") + c + "'");
        ++pos_;
    }

    std::string ident(const std::string& what) {
        size_t begin = pos_;
        auto head = [](char c) {
            return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
        };
        auto tail = [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
        };
        if (pos_ >= text_.size() || !head(text_[pos_]))
            err("expected " + what);
        ++pos_;
        while (pos_ < text_.size() && tail(text_[pos_]))
            ++pos_;
        return text_.substr(begin, pos_ - begin);
    }

    json value(bool allow_list) {
        if (pos_ >= text_.size())
            err("expected a value");
        char c = text_[pos_];
        if (c == '"')
            return string_lit();
        if (c == '[') {
            if (!allow_list)
                err("nested lists are not allowed");
            return list_lit();
        }
        if (c == '-' || std::isdigit(static_cast<unsigned char>(c)))
            return integer_lit();
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::string word = ident("value");
            if (word == "true")
                return true;
            if (word == "false")
                return false;
            err("unknown bare word '" + word + "' (only true/false)");
        }
        err("expected a value");
    }

    json string_lit() {
        expect('"');
        std::string out;
        while (true) {
            if (pos_ >= text_.size())
                err("unterminated string");
            char c = text_[pos_++];
            if (c == '"')
                return out;
            if (c == '\n')
                err("raw newline inside string");
            if (c == '\\') {
                if (pos_ >= text_.size())
                    err("unterminated escape");
                char e = text_[pos_++];
                if (e == '\\')
                    out += '\\';
                else if (e == '"')
                    out += '"';
                else if (e == 'n')
                    out += '\n';
                else
                    err(std::string("unknown escape '\\") + e + "'");
            } else {
                out += c;
            }
        }
    }

    json integer_lit() {
        size_t begin = pos_;
        if (peek_is('-'))
            ++pos_;
        size_t digits = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
            ++digits;
        }
        if (digits == 0)
            err("expected digits");
        if (digits > 18)
            err("integer literal too long");
        return static_cast<int64_t>(std::stoll(text_.substr(begin, pos_ - begin)));
    }

    json list_lit() {
        expect('[');
        ws();
        json out = json::array();
        if (peek_is(']')) {
            ++pos_;
            return out;
        }
        while (true) {
            out.push_back(value(false));
            ws();
            if (peek_is(']')) {
                ++pos_;
                return out;
            }
            expect(',');
            ws();
        }
    }

    const std::string& text_;
    size_t pos_ = 0;
};

std::string render_value(const json& v);

std::string render_string(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '\\')
            out += "\\\\";
        else if (c == '"')
            out += "\\\"";
        else if (c == '\n')
            out += "\\n";
        else
            out += c;
    }
    out += '"';
    return out;
}

std::string render_value(const json& v) {
    if (v.is_string())
        return render_string(v.get<std::string>());
    if (v.is_boolean())
        return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer())
        return std::to_string(v.get<int64_t>());
    if (v.is_array()) {
        std::string out = "[";
        for (size_t i = 0; i < v.size(); ++i) {
            if (i)
                out += ", ";
            const json& e = v[i];
            require(!e.is_array() && !e.is_object(), "action lists must be flat");
            out += render_value(e);
        }
        out += ']';
        return out;
    }
    fail(Errc::precondition, "unrenderable action value: " + v.dump());
}

} // namespace

ToolCall parse_action(const std::string& text) {
    return ActionParser(text).parse();
}

std::string render_action(const ToolCall& call) {
    require(!call.api.empty(), "action api name is empty");
    std::string out = call.api + "(";
    bool first = true;
    for (const auto& [key, value] : call.args.items()) {
        if (!first)
            out += ", ";
        first = false;
        out += key + "=" + render_value(value);
    }
    out += ')';
    return out;
}

// --- results and grades -----------------------------------------------------

ToolResult ToolResult::success(json payload) {
    ToolResult r;
    r.ok = true;
    r.payload = std::move(payload);
    return r;
}

ToolResult ToolResult::failure(std::string message) {
    ToolResult r;
    r.ok = false;
    r.error = std::move(message);
    return r;
}

std::string ToolResult::observation() const {
    if (ok)
        return payload.dump();
    return "ERROR: " + error;
}

OutcomeGrade OutcomeGrade::from_checks(std::vector<CheckResult> checks) {
    require(!checks.empty(), "a grade needs at least one check");
    OutcomeGrade grade;
    size_t passed = static_cast<size_t>(
        std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; }));
    grade.loss = 1.0 - static_cast<double>(passed) / static_cast<double>(checks.size());
    std::string feedback;
    for (const CheckResult& c : checks) {
        if (!c.passed)
            feedback += "[" + c.name + "] " + c.detail + "\n";
    }
    if (feedback.empty()) {
        grade.feedback = "All checks passed.";
    } else {
        feedback.pop_back();
        grade.feedback = "Failed checks:\n" + feedback;
    }
    grade.checks = std::move(checks);
    return grade;
}

std::string OutcomeGrade::summary() const {
    size_t passed = static_cast<size_t>(
        std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; }));
    std::string out =
        std::to_string(passed) + "/" + std::to_string(checks.size()) + " checks passed";
    if (passed != checks.size()) {
        out += "; failing:";
        for (const CheckResult& c : checks)
            if (!c.passed)
                out += " " + c.name;
    }
    return out;
}

// --- registry ----------------------------------------------------------------

void EnvRegistry::register_env(const std::string& env_id, Factory factory) {
    for (auto& [id, f] : factories_) {
        if (id == env_id) {
            f = std::move(factory);
            return;
        }
    }
    factories_.emplace_back(env_id, std::move(factory));
}

std::unique_ptr<EnvSession> EnvRegistry::reset(const std::string& env_id,
                                               uint64_t scenario_seed) {
    for (const auto& [id, factory] : factories_)
        if (id == env_id)
            return factory(env_id, scenario_seed);
    fail(Errc::unknown_env, "no environment registered as '" + env_id + "'");
}

bool EnvRegistry::has(const std::string& env_id) const {
    return std::any_of(factories_.begin(), factories_.end(),
                       [&](const auto& p) { return p.first == env_id; });
}

EnvRegistry& EnvRegistry::builtin() {
    static EnvRegistry registry = [] {
        EnvRegistry r;
        toyworld::register_toyworld(r);
        return r;
    }();
    return registry;
}

// --- scenario files -----------------------------------------------------------

std::vector<TaskSpec> Dataset::split_tasks(const std::string& split) const {
    std::vector<TaskSpec> out;
    for (const DatasetTask& dt : tasks)
        if (dt.split == split)
            out.push_back(dt.task);
    return out;
}

namespace {

void validate_dataset(const Dataset& dataset) {
    std::set<std::string> ids;
    for (const DatasetTask& dt : dataset.tasks) {
        require(!dt.task.task_id.empty(), "dataset task with empty task_id");
        require(ids.insert(dt.task.task_id).second,
                "duplicate task_id in dataset: " + dt.task.task_id);
        require(!dt.task.instruction.empty(), "task " + dt.task.task_id + " has no instruction");
        require(dt.split == "train" || dt.split == "eval",
                "task " + dt.task.task_id + " has unknown split '" + dt.split + "'");
    }
}

json seeded_items(const TaskSpec& task, EnvRegistry& registry) {
    auto session = registry.open(task);
    json state = json::parse(session->serialize_state());
    return state.at("items");
}

} // namespace

void save_scenario(const Dataset& dataset, const std::filesystem::path& path,
                   EnvRegistry& registry) {
    validate_dataset(dataset);
    std::string out;
    json header;
    header["type"] = "dataset";
    header["name"] = dataset.name;
    out += header.dump() + "\n";
    for (const DatasetTask& dt : dataset.tasks) {
        json t;
        t["type"] = "task";
        t["task_id"] = dt.task.task_id;
        t["instruction"] = dt.task.instruction;
        t["env_id"] = dt.task.env_id;
        t["scenario_seed"] = dt.task.scenario_seed;
        t["checker_ref"] = dt.task.checker_ref;
        t["split"] = dt.split;
        out += t.dump() + "\n";
        json items;
        items["type"] = "items";
        items["task_id"] = dt.task.task_id;
        items["items"] = seeded_items(dt.task, registry);
        out += items.dump() + "\n";
    }
    atomic_write_file(path, out);
}

Dataset load_scenario(const std::filesystem::path& path, EnvRegistry& registry) {
    std::vector<std::string> lines = split_lines(read_file(path));
    Dataset dataset;
    bool saw_header = false;
    try {
        for (size_t i = 0; i < lines.size(); ++i) {
            if (trim(lines[i]).empty())
                continue;
            json rec = json::parse(lines[i]);
            std::string type = rec.at("type").get<std::string>();
            if (type == "dataset") {
                require(!saw_header, "scenario file has two dataset headers");
                dataset.name = rec.at("name").get<std::string>();
                saw_header = true;
            } else if (type == "task") {
                DatasetTask dt;
                dt.task.task_id = rec.at("task_id").get<std::string>();
                dt.task.instruction = rec.at("instruction").get<std::string>();
                dt.task.env_id = rec.at("env_id").get<std::string>();
                dt.task.scenario_seed = rec.at("scenario_seed").get<uint64_t>();
                dt.task.checker_ref = rec.at("checker_ref").get<std::string>();
                dt.split = rec.at("split").get<std::string>();
                dataset.tasks.push_back(std::move(dt));
            } else if (type == "items") {
                std::string task_id = rec.at("task_id").get<std::string>();
                auto it = std::find_if(dataset.tasks.begin(), dataset.tasks.end(),
                                       [&](const DatasetTask& dt) {
                                           return dt.task.task_id == task_id;
                                       });
                if (it == dataset.tasks.end())
                    fail(Errc::io_error, "items record before its task: " + task_id);
                json expected = seeded_items(it->task, registry);
                if (rec.at("items") != expected)
                    fail(Errc::io_error,
                         "scenario items for " + task_id +
                             " do not match the seeded environment");
            } else {
                fail(Errc::io_error, "unknown scenario record type: " + type);
            }
        }
    } catch (const json::exception& e) {
        fail(Errc::io_error, "bad scenario file " + path.string() + ": " + e.what());
    }
    require(saw_header, "scenario file missing dataset header");
    validate_dataset(dataset);
    return dataset;
}

} // namespace mindskill
