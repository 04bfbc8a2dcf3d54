#pragma once

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lemmahead/chat.hpp"
#include "lemmahead/embedding.hpp"
#include "lemmahead/errors.hpp"
#include "lemmahead/text.hpp"

namespace lemmahead {

namespace detail {

// Splits "https://host:port/path" into origin + path for httplib.
inline std::pair<std::string, std::string> split_url(const std::string& url) {
    size_t scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
    size_t path_start = url.find('/', scheme + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

inline nlohmann::json http_post_json(const std::string& url, const std::string& api_key,
                                     const nlohmann::ordered_json& body, long timeout_s) {
    auto [origin, path] = split_url(url);
    httplib::Client client(origin);
    client.set_connection_timeout(timeout_s, 0);
    client.set_read_timeout(timeout_s, 0);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) throw TransportError("request to " + origin + " failed: " +
                                   httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500)
        throw TransportError("endpoint returned status " + std::to_string(res->status));
    if (res->status != 200)
        throw GatewayError("endpoint returned status " + std::to_string(res->status) + ": " +
                           res->body.substr(0, 400));
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw GatewayError(std::string("endpoint returned unparseable JSON: ") + e.what());
    }
}

}  // namespace detail

inline ChatResult HttpChatClient::complete(const std::vector<ChatMessage>& messages,
                                           const DecodingParams& params) {
    nlohmann::ordered_json msgs = nlohmann::ordered_json::array();
    for (const auto& m : messages) {
        if (m.image_png.empty()) {
            msgs.push_back({{"role", m.role}, {"content", m.content}});
        } else {
            nlohmann::ordered_json parts = nlohmann::ordered_json::array();
            parts.push_back({{"type", "text"}, {"text", m.content}});
            parts.push_back(
                {{"type", "image_url"},
                 {"image_url",
                  {{"url", "data:image/png;base64," + base64_encode(m.image_png)}}}});
            msgs.push_back({{"role", m.role}, {"content", std::move(parts)}});
        }
    }
    nlohmann::ordered_json body{{"model", params.model},
                                {"messages", std::move(msgs)},
                                {"temperature", params.temperature},
                                {"max_tokens", params.max_tokens}};
    nlohmann::json reply = detail::http_post_json(url_, api_key_, body, timeout_s_);

    ChatResult result;
    try {
        result.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw GatewayError("chat response missing choices[0].message.content");
    }
    if (reply.contains("usage")) {
        result.usage.prompt = reply["usage"].value("prompt_tokens", 0);
        result.usage.completion = reply["usage"].value("completion_tokens", 0);
    }
    return result;
}

// Embeddings endpoint: {model, input: [text...]} -> data[i].embedding.
class HttpEmbedClient : public EmbedClient {
public:
    HttpEmbedClient(std::string url, std::string model, std::string api_key,
                    long timeout_s = 120)
        : url_(std::move(url)), model_(std::move(model)), api_key_(std::move(api_key)),
          timeout_s_(timeout_s) {}

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        nlohmann::ordered_json body{{"model", model_}, {"input", texts}};
        nlohmann::json reply = detail::http_post_json(url_, api_key_, body, timeout_s_);
        std::vector<EmbeddingVector> out;
        try {
            for (const auto& item : reply.at("data"))
                out.push_back(item.at("embedding").get<EmbeddingVector>());
        } catch (const nlohmann::json::exception&) {
            throw GatewayError("embedding response missing data[i].embedding");
        }
        if (out.size() != texts.size())
            throw GatewayError("embedding response count mismatch");
        return out;
    }

private:
    std::string url_;
    std::string model_;
    std::string api_key_;
    long timeout_s_;
};

}  // namespace lemmahead
