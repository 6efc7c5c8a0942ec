#pragma once

#include "mindskill/errors.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace mindskill {

enum class Role { system, user, assistant };

const char* role_name(Role role);

struct ChatMessage {
    Role role = Role::user;
    std::string content; // non-empty for system/user

    bool operator==(const ChatMessage&) const = default;
};

// Request tags, one per agent role. Tags drive the audit log and let tests
// assert isolation properties per role.
inline constexpr std::string_view kTagInduction = "induction";
inline constexpr std::string_view kTagDeduction = "deduction";
inline constexpr std::string_view kTagJudgeRecon = "judge_recon";
inline constexpr std::string_view kTagJudgeRubric = "judge_rubric";
inline constexpr std::string_view kTagGradient = "gradient";
inline constexpr std::string_view kTagOptimizer = "optimizer";
inline constexpr std::string_view kTagRetrieval = "retrieval";

struct ChatRequest {
    std::vector<ChatMessage> messages;
    std::string model_id;
    std::optional<std::string> provider_hint;
    double temperature = 0.0;
    int max_output_tokens = 4096;
    std::string tag;
};

struct TokenUsage {
    int64_t prompt_tokens = 0;
    int64_t completion_tokens = 0;
};

struct ChatResponse {
    std::string content;
    std::string finish_reason;
    TokenUsage usage;
};

// Per-tag call parameters; the config module fills these from file + flags.
struct CallSettings {
    std::string model_id = "scripted";
    std::optional<std::string> provider_hint;
    double temperature = 0.0;
    int max_output_tokens = 4096;
};

ChatRequest make_request(std::string_view tag, const CallSettings& settings,
                         std::vector<ChatMessage> messages);

// Deterministic full-text rendering of a request; basis for digests and for
// scripted substring matching.
std::string render_request_text(const ChatRequest& req);

// --- audit log ----------------------------------------------------------------

struct AuditEntry {
    uint64_t seq = 0;
    std::string tag;
    std::string request_digest;
    int attempt = 0; // 1-based within one logical complete() call
    std::string response_digest;
    // full copies kept in memory so tests can scan payloads
    ChatRequest request;
    ChatResponse response;
};

class AuditLog {
public:
    void record(const ChatRequest& req, int attempt, const ChatResponse& resp);

    size_t size() const;
    std::vector<AuditEntry> entries() const; // snapshot copy

    // one `{seq, tag, request_digest, attempt, response_digest}` record per line
    std::string render_lines() const;
    void save(const std::filesystem::path& path) const;

private:
    mutable std::mutex mu_;
    std::vector<AuditEntry> entries_;
    uint64_t next_seq_ = 1;
};

// --- backends -------------------------------------------------------------------

class Backend {
public:
    virtual ~Backend() = default;
    // One upstream exchange. Throws TransportError / ScriptMiss; an empty
    // content string is a valid (retryable) result.
    virtual ChatResponse send(const ChatRequest& req) = 0;
};

struct ScriptEntry {
    std::optional<std::string> tag;       // match: request tag equals
    std::optional<std::string> substring; // match: rendered request contains
    std::string response;
};

// Deterministic test double: each send() consumes the first unconsumed entry
// whose matchers accept the request; per-tag FIFO under interleaving.
class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(std::vector<ScriptEntry> entries);

    ChatResponse send(const ChatRequest& req) override;
    size_t remaining() const;

private:
    struct Slot {
        ScriptEntry entry;
        bool consumed = false;
    };
    mutable std::mutex mu_;
    std::vector<Slot> slots_;
};

// Script file: one record per line {tag?, substring?, response | response_file};
// response_file paths resolve relative to the script file.
std::vector<ScriptEntry> load_script(const std::filesystem::path& path);

struct HttpBackendConfig {
    std::string base_url; // "https://host[:port]" — MINDSKILL_BASE_URL fills this when empty
    std::string path = "/v1/chat/completions";
    std::string api_key; // from MINDSKILL_API_KEY, never from config files
    int timeout_sec = 120;
};

// OpenAI-style chat-completions client over HTTP(S).
std::unique_ptr<Backend> make_http_backend(HttpBackendConfig config);

// --- client with the retry discipline -------------------------------------------

struct RetryPolicy {
    int max_attempts = 3;
    int backoff_ms = 1000; // 0 for scripted runs
};

class ValidationError : public Error {
public:
    ValidationError(std::string message, std::vector<std::string> violations)
        : Error(Errc::validation_exhausted, std::move(message)),
          violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const { return violations_; }

private:
    std::vector<std::string> violations_;
};

class ChatClient {
public:
    using Validator = std::function<std::vector<std::string>(const std::string&)>;

    ChatClient(std::shared_ptr<Backend> backend, std::shared_ptr<AuditLog> audit,
               RetryPolicy policy = {});

    // Up to max_attempts sends of the same request until a non-empty response;
    // every exchange lands in the audit log. Throws ProviderExhausted.
    ChatResponse complete(const ChatRequest& req);

    // Up to max_attempts validated attempts; an invalid response is appended as
    // an assistant turn followed by a user fix instruction listing violations.
    // Throws ValidationError carrying the last violations.
    ChatResponse complete_validated(ChatRequest req, const Validator& validator);

    AuditLog& audit() { return *audit_; }
    const std::shared_ptr<AuditLog>& audit_ptr() const { return audit_; }

private:
    std::shared_ptr<Backend> backend_;
    std::shared_ptr<AuditLog> audit_;
    RetryPolicy policy_;
};

// The fix instruction sent after an invalid response; exposed so tests can
// assert the message shape.
std::string render_fix_instruction(const std::vector<std::string>& violations);

} // namespace mindskill
