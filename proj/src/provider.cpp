#include "mindskill/provider.hpp"

#include "mindskill/util.hpp"

#include <json.hpp>

#include <chrono>
#include <thread>

namespace mindskill {

using nlohmann::json;

const char* role_name(Role role) {
    switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    }
    return "user";
}

ChatRequest make_request(std::string_view tag, const CallSettings& settings,
                         std::vector<ChatMessage> messages) {
    require(!messages.empty(), "a request needs at least one message");
    for (const ChatMessage& m : messages)
        if (m.role != Role::assistant)
            require(!m.content.empty(), "system/user messages must be non-empty");
    ChatRequest req;
    req.messages = std::move(messages);
    req.model_id = settings.model_id;
    req.provider_hint = settings.provider_hint;
    req.temperature = settings.temperature;
    req.max_output_tokens = settings.max_output_tokens;
    req.tag = std::string(tag);
    return req;
}

std::string render_request_text(const ChatRequest& req) {
    std::string out = "tag: " + req.tag + "\nmodel: " + req.model_id + "\n";
    for (const ChatMessage& m : req.messages) {
        out += "[";
        out += role_name(m.role);
        out += "]\n";
        out += m.content;
        out += "\n";
    }
    return out;
}

// --- audit log ----------------------------------------------------------------

void AuditLog::record(const ChatRequest& req, int attempt, const ChatResponse& resp) {
    std::lock_guard lock(mu_);
    AuditEntry entry;
    entry.seq = next_seq_++;
    entry.tag = req.tag;
    entry.request_digest = fnv1a64_hex(render_request_text(req));
    entry.attempt = attempt;
    entry.response_digest = fnv1a64_hex(resp.content);
    entry.request = req;
    entry.response = resp;
    entries_.push_back(std::move(entry));
}

size_t AuditLog::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

std::vector<AuditEntry> AuditLog::entries() const {
    std::lock_guard lock(mu_);
    return entries_;
}

std::string AuditLog::render_lines() const {
    std::lock_guard lock(mu_);
    std::string out;
    for (const AuditEntry& e : entries_) {
        json rec;
        rec["seq"] = e.seq;
        rec["tag"] = e.tag;
        rec["request_digest"] = e.request_digest;
        rec["attempt"] = e.attempt;
        rec["response_digest"] = e.response_digest;
        out += rec.dump() + "\n";
    }
    return out;
}

void AuditLog::save(const std::filesystem::path& path) const {
    atomic_write_file(path, render_lines());
}

// --- scripted backend ------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> entries) {
    slots_.reserve(entries.size());
    for (ScriptEntry& e : entries)
        slots_.push_back({std::move(e), false});
}

ChatResponse ScriptedBackend::send(const ChatRequest& req) {
    std::lock_guard lock(mu_);
    std::string rendered; // lazily built, substring matchers only
    bool have_rendered = false;
    for (Slot& slot : slots_) {
        if (slot.consumed)
            continue;
        const ScriptEntry& e = slot.entry;
        if (e.tag && *e.tag != req.tag)
            continue;
        if (e.substring) {
            if (!have_rendered) {
                rendered = render_request_text(req);
                have_rendered = true;
            }
            if (!contains(rendered, *e.substring))
                continue;
        }
        slot.consumed = true;
        ChatResponse resp;
        resp.content = e.response;
        resp.finish_reason = "stop";
        return resp;
    }
    fail(Errc::script_miss,
         "no script entry matches request tag '" + req.tag + "' (request digest " +
             fnv1a64_hex(render_request_text(req)) + ")");
}

size_t ScriptedBackend::remaining() const {
    std::lock_guard lock(mu_);
    size_t n = 0;
    for (const Slot& slot : slots_)
        if (!slot.consumed)
            ++n;
    return n;
}

std::vector<ScriptEntry> load_script(const std::filesystem::path& path) {
    std::vector<std::string> lines = split_lines(read_file(path));
    std::vector<ScriptEntry> entries;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty())
            continue;
        try {
            json rec = json::parse(lines[i]);
            ScriptEntry e;
            if (rec.contains("tag"))
                e.tag = rec.at("tag").get<std::string>();
            if (rec.contains("substring"))
                e.substring = rec.at("substring").get<std::string>();
            if (rec.contains("response_file")) {
                std::filesystem::path rel = rec.at("response_file").get<std::string>();
                e.response = read_file(path.parent_path() / rel);
            } else {
                e.response = rec.at("response").get<std::string>();
            }
            entries.push_back(std::move(e));
        } catch (const json::exception& ex) {
            fail(Errc::io_error, "bad script record at " + path.string() + ":" +
                                     std::to_string(i + 1) + ": " + ex.what());
        }
    }
    return entries;
}

// --- client ------------------------------------------------------------------------

ChatClient::ChatClient(std::shared_ptr<Backend> backend, std::shared_ptr<AuditLog> audit,
                       RetryPolicy policy)
    : backend_(std::move(backend)), audit_(std::move(audit)), policy_(policy) {
    require(backend_ != nullptr, "client needs a backend");
    require(audit_ != nullptr, "client needs an audit log");
    require(policy_.max_attempts >= 1, "retry policy needs at least one attempt");
}

ChatResponse ChatClient::complete(const ChatRequest& req) {
    for (int attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
        ChatResponse resp = backend_->send(req);
        audit_->record(req, attempt, resp);
        if (!trim(resp.content).empty())
            return resp;
        if (attempt < policy_.max_attempts && policy_.backoff_ms > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(policy_.backoff_ms));
    }
    fail(Errc::provider_exhausted,
         "no non-empty response after " + std::to_string(policy_.max_attempts) +
             " attempts (tag " + req.tag + ")");
}

std::string render_fix_instruction(const std::vector<std::string>& violations) {
    std::string out = "Your previous response was invalid:\n";
    for (const std::string& v : violations)
        out += "- " + v + "\n";
    out += "Respond again and fix every listed problem. "
           "Output only the corrected response, nothing else.";
    return out;
}

ChatResponse ChatClient::complete_validated(ChatRequest req, const Validator& validator) {
    require(static_cast<bool>(validator), "complete_validated needs a validator");
    std::vector<std::string> last;
    for (int attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
        ChatResponse resp = complete(req);
        last = validator(resp.content);
        if (last.empty())
            return resp;
        if (attempt < policy_.max_attempts) {
            req.messages.push_back({Role::assistant, resp.content});
            req.messages.push_back({Role::user, render_fix_instruction(last)});
        }
    }
    throw ValidationError("response still invalid after " +
                              std::to_string(policy_.max_attempts) + " attempts (tag " +
                              req.tag + "): " + join(last, "; "),
                          last);
}

} // namespace mindskill
