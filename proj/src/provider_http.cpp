// HTTP backend, isolated here so httplib is compiled exactly once.

#ifdef MINDSKILL_WITH_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "mindskill/provider.hpp"
#include "mindskill/util.hpp"

#include <json.hpp>

#include <cstdlib>

namespace mindskill {

using nlohmann::json;

namespace {

class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
        if (config_.base_url.empty()) {
            if (const char* env = std::getenv("MINDSKILL_BASE_URL"))
                config_.base_url = env;
        }
        if (config_.api_key.empty()) {
            if (const char* env = std::getenv("MINDSKILL_API_KEY"))
                config_.api_key = env;
        }
        if (config_.base_url.empty())
            fail(Errc::config_error,
                 "no base URL: set provider.base_url or MINDSKILL_BASE_URL");
        if (config_.api_key.empty())
            fail(Errc::config_error, "no API key: set MINDSKILL_API_KEY");
#ifndef MINDSKILL_WITH_TLS
        if (starts_with(config_.base_url, "https://"))
            fail(Errc::config_error,
                 "this build has no TLS support; use an http:// base URL");
#endif
    }

    ChatResponse send(const ChatRequest& req) override {
        json body;
        body["model"] = req.model_id;
        json messages = json::array();
        for (const ChatMessage& m : req.messages) {
            json msg;
            msg["role"] = role_name(m.role);
            msg["content"] = m.content;
            messages.push_back(std::move(msg));
        }
        body["messages"] = std::move(messages);
        body["temperature"] = req.temperature;
        body["max_tokens"] = req.max_output_tokens;
        if (req.provider_hint) {
            json routing;
            routing["order"] = json::array({*req.provider_hint});
            body["provider"] = std::move(routing);
        }

        httplib::Client client(config_.base_url);
        client.set_connection_timeout(config_.timeout_sec, 0);
        client.set_read_timeout(config_.timeout_sec, 0);
        httplib::Headers headers = {
            {"Authorization", "Bearer " + config_.api_key},
        };

        auto result = client.Post(config_.path, headers, body.dump(), "application/json");
        if (!result)
            fail(Errc::transport_error,
                 "request failed: " + httplib::to_string(result.error()));
        if (result->status < 200 || result->status >= 300)
            fail(Errc::transport_error, "upstream status " + std::to_string(result->status) +
                                            ": " + result->body.substr(0, 500));

        try {
            json payload = json::parse(result->body);
            const json& choice = payload.at("choices").at(0);
            ChatResponse resp;
            const json& message = choice.at("message");
            if (message.contains("content") && message.at("content").is_string())
                resp.content = message.at("content").get<std::string>();
            if (choice.contains("finish_reason") && choice.at("finish_reason").is_string())
                resp.finish_reason = choice.at("finish_reason").get<std::string>();
            if (payload.contains("usage")) {
                const json& usage = payload.at("usage");
                if (usage.contains("prompt_tokens"))
                    resp.usage.prompt_tokens = usage.at("prompt_tokens").get<int64_t>();
                if (usage.contains("completion_tokens"))
                    resp.usage.completion_tokens =
                        usage.at("completion_tokens").get<int64_t>();
            }
            return resp;
        } catch (const json::exception& e) {
            fail(Errc::transport_error,
                 std::string("unparseable upstream response: ") + e.what());
        }
    }

private:
    HttpBackendConfig config_;
};

} // namespace

std::unique_ptr<Backend> make_http_backend(HttpBackendConfig config) {
    return std::make_unique<HttpBackend>(std::move(config));
}

} // namespace mindskill
