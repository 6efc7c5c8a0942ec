#include "mindskill/losses.hpp"

#include "mindskill/errors.hpp"
#include "mindskill/util.hpp"

#include <json.hpp>

#include <cmath>
#include <tuple>

namespace mindskill {

using nlohmann::json;

void validate_triple(const LossTriple& t) {
    require(!std::isnan(t.outcome) && !std::isnan(t.recon) && !std::isnan(t.rubric),
            "loss triple contains NaN");
    require(t.outcome >= 0.0 && t.outcome <= 1.0, "outcome loss out of [0,1]");
    require(t.recon >= 0.0 && t.recon <= 10.0, "recon loss out of [0,10]");
    require(t.rubric >= 0.0 && t.rubric <= 10.0, "rubric loss out of [0,10]");
}

bool lex_less(const LossTriple& a, const LossTriple& b) {
    return std::tie(a.outcome, a.recon, a.rubric) < std::tie(b.outcome, b.recon, b.rubric);
}

namespace {

std::string render_number(double v) {
    if (v == static_cast<int64_t>(v))
        return std::to_string(static_cast<int64_t>(v));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

} // namespace

std::string render_triple(const LossTriple& t) {
    return "(" + render_number(t.outcome) + ", " + render_number(t.recon) + ", " +
           render_number(t.rubric) + ")";
}

double rubric_overall(const RubricScores& s) {
    double mean = (s.gt_independence + s.actionability + s.transferability + s.completeness +
                   s.conciseness) /
                  5.0;
    return std::min(static_cast<double>(s.gt_independence), mean);
}

std::optional<std::string> extract_json_block(const std::string& text) {
    size_t begin = text.find('{');
    if (begin == std::string::npos)
        return std::nullopt;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (size_t i = begin; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (escaped)
                escaped = false;
            else if (c == '\\')
                escaped = true;
            else if (c == '"')
                in_string = false;
            continue;
        }
        if (c == '"')
            in_string = true;
        else if (c == '{')
            ++depth;
        else if (c == '}') {
            --depth;
            if (depth == 0)
                return text.substr(begin, i - begin + 1);
        }
    }
    return std::nullopt;
}

namespace {

// shared schema helpers; violations are phrased for the fix instruction

std::optional<json> parse_block(const std::string& content, std::vector<std::string>& out) {
    std::optional<std::string> block = extract_json_block(content);
    if (!block) {
        out.push_back("response must contain a JSON object");
        return std::nullopt;
    }
    try {
        return json::parse(*block);
    } catch (const json::exception& e) {
        out.push_back(std::string("JSON does not parse: ") + e.what());
        return std::nullopt;
    }
}

void check_score(const json& rec, const char* field, std::vector<std::string>& out) {
    if (!rec.contains(field)) {
        out.push_back(std::string("missing field '") + field + "'");
        return;
    }
    const json& v = rec.at(field);
    if (!v.is_number_integer()) {
        out.push_back(std::string("field '") + field + "' must be an integer");
        return;
    }
    int64_t n = v.get<int64_t>();
    if (n < 0 || n > 10)
        out.push_back(std::string("field '") + field + "' must be between 0 and 10");
}

void check_bool(const json& rec, const char* field, std::vector<std::string>& out) {
    if (!rec.contains(field))
        out.push_back(std::string("missing field '") + field + "'");
    else if (!rec.at(field).is_boolean())
        out.push_back(std::string("field '") + field + "' must be true or false");
}

void check_string_list(const json& rec, const char* field, std::vector<std::string>& out) {
    if (!rec.contains(field)) {
        out.push_back(std::string("missing field '") + field + "'");
        return;
    }
    const json& v = rec.at(field);
    if (!v.is_array()) {
        out.push_back(std::string("field '") + field + "' must be a list of strings");
        return;
    }
    for (const json& e : v)
        if (!e.is_string()) {
            out.push_back(std::string("field '") + field + "' must contain only strings");
            return;
        }
}

void check_string(const json& rec, const char* field, std::vector<std::string>& out) {
    if (!rec.contains(field))
        out.push_back(std::string("missing field '") + field + "'");
    else if (!rec.at(field).is_string())
        out.push_back(std::string("field '") + field + "' must be a string");
}

constexpr const char* kRubricFields[5] = {"gt_independence", "actionability", "transferability",
                                          "completeness", "conciseness"};

} // namespace

std::vector<std::string> validate_recon_judgment(const std::string& content) {
    std::vector<std::string> out;
    std::optional<json> rec = parse_block(content, out);
    if (!rec)
        return out;
    check_score(*rec, "alignment_score", out);
    check_bool(*rec, "api_sequence_match", out);
    check_bool(*rec, "control_flow_match", out);
    check_bool(*rec, "final_state_match", out);
    check_string_list(*rec, "mismatches", out);
    return out;
}

std::vector<std::string> validate_rubric_scores(const std::string& content) {
    std::vector<std::string> out;
    std::optional<json> rec = parse_block(content, out);
    if (!rec)
        return out;
    for (const char* field : kRubricFields)
        check_score(*rec, field, out);
    check_string_list(*rec, "leaked_claims", out);
    check_string(*rec, "issues", out);
    return out;
}

ReconJudgment parse_recon_judgment(const std::string& content) {
    require(validate_recon_judgment(content).empty(), "recon judgment did not validate");
    json rec = json::parse(*extract_json_block(content));
    ReconJudgment j;
    j.alignment_score = rec.at("alignment_score").get<int>();
    j.api_sequence_match = rec.at("api_sequence_match").get<bool>();
    j.control_flow_match = rec.at("control_flow_match").get<bool>();
    j.final_state_match = rec.at("final_state_match").get<bool>();
    for (const json& m : rec.at("mismatches"))
        j.mismatches.push_back(m.get<std::string>());
    return j;
}

RubricScores parse_rubric_scores(const std::string& content) {
    require(validate_rubric_scores(content).empty(), "rubric scores did not validate");
    json rec = json::parse(*extract_json_block(content));
    RubricScores s;
    s.gt_independence = rec.at("gt_independence").get<int>();
    s.actionability = rec.at("actionability").get<int>();
    s.transferability = rec.at("transferability").get<int>();
    s.completeness = rec.at("completeness").get<int>();
    s.conciseness = rec.at("conciseness").get<int>();
    for (const json& m : rec.at("leaked_claims"))
        s.leaked_claims.push_back(m.get<std::string>());
    s.issues = rec.at("issues").get<std::string>();
    return s;
}

ReconResult recon_loss(const Trajectory& source, const Trajectory& recon, const TaskSpec& task,
                       ChatClient& client, const CallSettings& settings,
                       const std::string& system_prompt) {
    require(source.origin != TrajOrigin::reconstruction,
            "recon_loss: source must not be a reconstruction");
    require(recon.origin == TrajOrigin::reconstruction,
            "recon_loss: second argument must be the reconstruction");
    require(!system_prompt.empty(), "recon judge needs a system prompt");

    std::string user = "Task instruction:\n" + task.instruction +
                       "\n\nSource trajectory:\n" + render_trajectory(source) +
                       "\n\nReconstructed trajectory:\n" + render_trajectory(recon) +
                       "\n\nOutput the JSON verdict now.";
    ChatRequest req = make_request(kTagJudgeRecon, settings,
                                   {{Role::system, system_prompt}, {Role::user, user}});
    ChatResponse resp;
    try {
        resp = client.complete_validated(std::move(req), validate_recon_judgment);
    } catch (const ValidationError& e) {
        ReconResult r;
        r.loss = 10.0;
        r.feedback = std::string("alignment judge produced no valid verdict: ") + e.what();
        return r;
    }
    ReconJudgment j = parse_recon_judgment(resp.content);
    ReconResult r;
    r.loss = 10.0 - j.alignment_score;
    r.feedback = "alignment score " + std::to_string(j.alignment_score) + "/10";
    if (j.mismatches.empty()) {
        if (j.alignment_score < 10)
            r.feedback += "; no specific mismatches reported";
    } else {
        r.feedback += "; mismatches:";
        for (const std::string& m : j.mismatches)
            r.feedback += "\n- " + m;
    }
    r.detail = std::move(j);
    return r;
}

OutcomeResult outcome_loss(const Trajectory& recon, const TaskSpec& task,
                           EnvSession& terminal_session) {
    require(recon.origin == TrajOrigin::reconstruction,
            "outcome_loss grades a reconstruction");
    OutcomeResult r;
    r.grade = terminal_session.evaluate(task);
    r.loss = r.grade.loss;
    r.feedback = r.grade.feedback;
    return r;
}

RubricResult rubric_loss(const SkillDoc& skill, const TaskSpec& task, ChatClient& client,
                         const CallSettings& settings, const std::string& system_prompt) {
    require(!system_prompt.empty(), "rubric judge needs a system prompt");

    std::string user = "Task instruction:\n" + task.instruction + "\n\nSkill document:\n" +
                       serialize_skill(skill) + "\nOutput the JSON scores now.";
    ChatRequest req = make_request(kTagJudgeRubric, settings,
                                   {{Role::system, system_prompt}, {Role::user, user}});
    ChatResponse resp;
    try {
        resp = client.complete_validated(std::move(req), validate_rubric_scores);
    } catch (const ValidationError& e) {
        RubricResult r;
        r.loss = 10.0;
        r.feedback = std::string("rubric judge produced no valid verdict: ") + e.what();
        return r;
    }
    RubricScores s = parse_rubric_scores(resp.content);
    RubricResult r;
    r.loss = 10.0 - rubric_overall(s);
    r.feedback = "rubric scores: gt_independence " + std::to_string(s.gt_independence) +
                 ", actionability " + std::to_string(s.actionability) + ", transferability " +
                 std::to_string(s.transferability) + ", completeness " +
                 std::to_string(s.completeness) + ", conciseness " +
                 std::to_string(s.conciseness);
    if (!s.issues.empty())
        r.feedback += "\nissues: " + s.issues;
    if (!s.leaked_claims.empty()) {
        r.feedback += "\nleaked ground-truth claims:";
        for (const std::string& claim : s.leaked_claims)
            r.feedback += "\n- " + claim;
    }
    r.detail = std::move(s);
    return r;
}

} // namespace mindskill
