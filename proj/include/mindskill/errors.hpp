#pragma once

#include <stdexcept>
#include <string>

namespace mindskill {

enum class Errc {
    // skill document
    missing_frontmatter,
    missing_field,
    empty_body,
    malformed_skill,
    invalid_skill,
    // trajectory / environment
    execution_failed,
    checker_failed,
    unknown_env,
    unknown_checker,
    action_parse_error,
    // provider
    provider_exhausted,
    transport_error,
    validation_exhausted,
    script_miss,
    // optimization loop
    induction_failed,
    gradient_failed,
    update_rejected,
    best_unavailable,
    // library
    bad_template,
    empty_library,
    // general
    precondition,
    unknown_target,
    config_error,
    io_error,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, std::string message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool cond, const std::string& message) {
    if (!cond)
        throw Error(Errc::precondition, message);
}

} // namespace mindskill
