#include "mindskill/errors.hpp"

namespace mindskill {

const char* errc_name(Errc code) {
    switch (code) {
    case Errc::missing_frontmatter: return "MissingFrontmatter";
    case Errc::missing_field: return "MissingField";
    case Errc::empty_body: return "EmptyBody";
    case Errc::malformed_skill: return "MalformedSkill";
    case Errc::invalid_skill: return "InvalidSkill";
    case Errc::execution_failed: return "ExecutionFailed";
    case Errc::checker_failed: return "CheckerFailed";
    case Errc::unknown_env: return "UnknownEnv";
    case Errc::unknown_checker: return "UnknownChecker";
    case Errc::action_parse_error: return "ActionParseError";
    case Errc::provider_exhausted: return "ProviderExhausted";
    case Errc::transport_error: return "TransportError";
    case Errc::validation_exhausted: return "ValidationExhausted";
    case Errc::script_miss: return "ScriptMiss";
    case Errc::induction_failed: return "InductionFailed";
    case Errc::gradient_failed: return "GradientFailed";
    case Errc::update_rejected: return "UpdateRejected";
    case Errc::best_unavailable: return "BestUnavailable";
    case Errc::bad_template: return "BadTemplate";
    case Errc::empty_library: return "EmptyLibrary";
    case Errc::precondition: return "PreconditionViolation";
    case Errc::unknown_target: return "UnknownTarget";
    case Errc::config_error: return "ConfigError";
    case Errc::io_error: return "IoError";
    }
    return "UnknownError";
}

} // namespace mindskill
