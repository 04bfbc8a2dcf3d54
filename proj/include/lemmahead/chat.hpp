#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "lemmahead/errors.hpp"
#include "lemmahead/prompt.hpp"
#include "lemmahead/text.hpp"

namespace lemmahead {

struct ChatMessage {
    std::string role;
    std::string content;
    std::string image_png;  // optional; attached as a data URL when non-empty

    static ChatMessage from(const TemplateMessage& m) { return {m.role, m.text, {}}; }
};

struct DecodingParams {
    std::string model = "gpt-4";
    double temperature = 0.0;
    int max_tokens = 2048;
};

struct TokenUsage {
    int prompt = 0;
    int completion = 0;
};

struct ChatResult {
    std::string text;
    TokenUsage usage;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual ChatResult complete(const std::vector<ChatMessage>& messages,
                                const DecodingParams& params) = 0;
};

inline nlohmann::ordered_json messages_to_json(const std::vector<ChatMessage>& messages) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& m : messages) {
        nlohmann::ordered_json j{{"role", m.role}, {"content", m.content}};
        if (!m.image_png.empty()) j["has_image"] = true;
        arr.push_back(std::move(j));
    }
    return arr;
}

// Append-only record of every model interaction in a run. Retrieval events
// are logged through the same channel so a transcript tells the full story.
class TranscriptLog {
public:
    struct Entry {
        size_t seq = 0;
        std::string template_id;
        int attempt = 1;
        std::string status;  // ok | transport_error | empty | retrieval
        nlohmann::ordered_json request;
        std::string response;
        std::string error;
        long latency_ms = 0;
        TokenUsage tokens;

        nlohmann::ordered_json to_json() const {
            return nlohmann::ordered_json{
                {"seq", seq},
                {"template_id", template_id},
                {"attempt", attempt},
                {"status", status},
                {"request", request},
                {"response", response},
                {"error", error},
                {"latency_ms", latency_ms},
                {"tokens", {{"prompt", tokens.prompt}, {"completion", tokens.completion}}}};
        }
    };

    TranscriptLog() = default;

    void open_sink(const std::string& path) {
        std::lock_guard lock(mu_);
        sink_.open(path, std::ios::binary | std::ios::app);
        if (!sink_) throw Error("cannot open transcript log: " + path);
    }

    void append(Entry e) {
        std::lock_guard lock(mu_);
        e.seq = next_seq_++;
        if (sink_.is_open()) {
            sink_ << e.to_json().dump() << '\n';
            sink_.flush();
        }
        entries_.push_back(std::move(e));
    }

    std::vector<Entry> snapshot() const {
        std::lock_guard lock(mu_);
        return entries_;
    }

    size_t count(const std::string& template_id, const std::string& status = "ok") const {
        std::lock_guard lock(mu_);
        size_t n = 0;
        for (const auto& e : entries_)
            if (e.template_id == template_id && e.status == status) ++n;
        return n;
    }

    size_t total() const {
        std::lock_guard lock(mu_);
        return entries_.size();
    }

private:
    mutable std::mutex mu_;
    std::vector<Entry> entries_;
    std::ofstream sink_;
    size_t next_seq_ = 0;
};

struct RetryPolicy {
    int max_retries = 3;  // total attempts
    long backoff_base_ms = 1000;
};

// One scripted reply. With a matcher the entry only answers requests whose
// text contains it; fail_times injects transport failures before the reply
// is delivered.
struct ScriptEntry {
    std::string match;
    std::string response;
    int fail_times = 0;
};

// Deterministic chat stand-in for tests and offline runs. Entries are
// consumed in order, never reused; consuming past the end is an error.
// Consumption must be serialized (guarded by an internal mutex).
class ScriptedChatClient : public ChatClient {
public:
    ScriptedChatClient() = default;
    explicit ScriptedChatClient(std::vector<ScriptEntry> script) : script_(std::move(script)) {}
    explicit ScriptedChatClient(const std::vector<std::string>& responses) {
        for (const auto& r : responses) script_.push_back({"", r, 0});
    }

    ChatResult complete(const std::vector<ChatMessage>& messages,
                        const DecodingParams&) override {
        std::lock_guard lock(mu_);
        std::string request_text;
        for (const auto& m : messages) {
            request_text += m.content;
            request_text += '\n';
        }
        for (size_t i = 0; i < script_.size(); ++i) {
            if (consumed_[i]) continue;
            if (!script_[i].match.empty() &&
                request_text.find(script_[i].match) == std::string::npos)
                continue;
            if (script_[i].fail_times > 0) {
                --script_[i].fail_times;
                throw TransportError("scripted transport failure");
            }
            consumed_[i] = true;
            ++consumed_count_;
            return {script_[i].response, {}};
        }
        throw ScriptExhaustedError(consumed_count_);
    }

    size_t consumed() const {
        std::lock_guard lock(mu_);
        return consumed_count_;
    }

private:
    std::vector<ScriptEntry> script_;
    std::map<size_t, bool> consumed_;
    size_t consumed_count_ = 0;
    mutable std::mutex mu_;
};

// Chat-completions HTTP client (the {model, messages, temperature,
// max_tokens} wire shape). Declared here, defined in http_clients.hpp to keep
// httplib out of translation units that never talk to the network.
class HttpChatClient : public ChatClient {
public:
    HttpChatClient(std::string url, std::string api_key, long timeout_s = 120)
        : url_(std::move(url)), api_key_(std::move(api_key)), timeout_s_(timeout_s) {}

    ChatResult complete(const std::vector<ChatMessage>& messages,
                        const DecodingParams& params) override;

private:
    std::string url_;
    std::string api_key_;
    long timeout_s_;
};

// Retry + transcript wrapper around a ChatClient, holding the prompt
// templates and per-stage decoding parameters.
class LlmSession {
public:
    LlmSession(ChatClient& client, TranscriptLog& log, RetryPolicy retry = {})
        : client_(client), log_(log), retry_(retry) {
        for (const char* id :
             {"transcription", "segmentation", "keywords", "informal_proof", "formalization"})
            templates_.emplace(id, builtin_template(id));
    }

    void set_template(PromptTemplate t) {
        t.check();
        templates_.insert_or_assign(t.template_id, std::move(t));
    }
    const PromptTemplate& get_template(const std::string& id) const {
        auto it = templates_.find(id);
        if (it == templates_.end()) throw TemplateError("no such template: " + id);
        return it->second;
    }

    void set_params(const std::string& template_id, DecodingParams p) {
        params_.insert_or_assign(template_id, p);
    }

    // Off = zero latencies in the transcript, making scripted runs
    // bit-reproducible.
    void set_record_latency(bool on) { record_latency_ = on; }
    DecodingParams params_for(const std::string& template_id) const {
        auto it = params_.find(template_id);
        return it == params_.end() ? default_params_ : it->second;
    }
    void set_default_params(DecodingParams p) { default_params_ = p; }

    // Renders a template and runs the exchange with retry; every attempt is
    // transcribed. Throws GatewayError once transport retries are exhausted
    // and EmptyResponseError on a blank reply.
    std::string complete(const std::string& template_id,
                         const std::map<std::string, std::string>& bindings,
                         const std::string& image_png = {}) {
        auto rendered = get_template(template_id).render(bindings);
        std::vector<ChatMessage> messages;
        messages.reserve(rendered.size());
        for (const auto& m : rendered) messages.push_back(ChatMessage::from(m));
        if (!image_png.empty() && !messages.empty()) messages.back().image_png = image_png;
        return complete_messages(template_id, messages);
    }

    std::string complete_messages(const std::string& template_id,
                                  const std::vector<ChatMessage>& messages) {
        DecodingParams params = params_for(template_id);
        for (int attempt = 1;; ++attempt) {
            TranscriptLog::Entry entry;
            entry.template_id = template_id;
            entry.attempt = attempt;
            entry.request =
                nlohmann::ordered_json{{"model", params.model},
                                       {"messages", messages_to_json(messages)},
                                       {"temperature", params.temperature},
                                       {"max_tokens", params.max_tokens}};
            auto start = std::chrono::steady_clock::now();
            try {
                ChatResult result = client_.complete(messages, params);
                entry.latency_ms = record_latency_ ? elapsed_ms(start) : 0;
                entry.tokens = result.usage;
                if (trim(result.text).empty()) {
                    entry.status = "empty";
                    log_.append(std::move(entry));
                    throw EmptyResponseError();
                }
                entry.status = "ok";
                entry.response = result.text;
                log_.append(std::move(entry));
                return result.text;
            } catch (const TransportError& e) {
                entry.latency_ms = record_latency_ ? elapsed_ms(start) : 0;
                entry.status = "transport_error";
                entry.error = e.what();
                log_.append(std::move(entry));
                if (attempt >= retry_.max_retries)
                    throw GatewayError("transport retries exhausted after " +
                                       std::to_string(attempt) + " attempts: " + e.what());
                long delay = retry_.backoff_base_ms << (attempt - 1);
                if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
            }
        }
    }

    void log_retrieval(const std::string& query, size_t k, const std::vector<std::string>& ids,
                       long latency_ms) {
        TranscriptLog::Entry entry;
        entry.template_id = "retrieval";
        entry.status = "retrieval";
        entry.request = nlohmann::ordered_json{{"query", query}, {"k", k}};
        nlohmann::ordered_json resp = nlohmann::ordered_json::array();
        for (const auto& id : ids) resp.push_back(id);
        entry.response = resp.dump();
        entry.latency_ms = record_latency_ ? latency_ms : 0;
        log_.append(std::move(entry));
    }

    TranscriptLog& transcript() { return log_; }
    const TranscriptLog& transcript() const { return log_; }

private:
    static long elapsed_ms(std::chrono::steady_clock::time_point start) {
        return static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                     std::chrono::steady_clock::now() - start)
                                     .count());
    }

    ChatClient& client_;
    TranscriptLog& log_;
    RetryPolicy retry_;
    std::map<std::string, PromptTemplate> templates_;
    std::map<std::string, DecodingParams> params_;
    DecodingParams default_params_;
    bool record_latency_ = true;
};

}  // namespace lemmahead
