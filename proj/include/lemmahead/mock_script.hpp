#pragma once

#include <nlohmann/json.hpp>

#include <memory>
#include <string>
#include <vector>

#include "lemmahead/chat.hpp"
#include "lemmahead/embedding.hpp"
#include "lemmahead/errors.hpp"
#include "lemmahead/lean.hpp"
#include "lemmahead/text.hpp"

namespace lemmahead {

// Offline stand-ins for all three external services, loaded from one JSON
// file (--mock-script):
//   {
//     "chat": [{"match": "...", "response": "...", "fail_times": 0}, ...],
//     "embed": {"mode": "hash", "dim": 32}
//            | {"mode": "scripted", "vectors": [[...], ...]},
//     "verifier": ["verified", {"status": "failed", "diagnostics": [...]}, ...]
//   }
// Chat entries may be bare strings. A missing "embed" defaults to hash mode;
// a missing "verifier" leaves the real verifier in place.
struct MockBundle {
    std::unique_ptr<ChatClient> chat;
    std::unique_ptr<EmbedClient> embed;
    std::unique_ptr<Verifier> verifier;  // may stay null
};

inline Verdict verdict_from_script_entry(const nlohmann::json& item) {
    if (item.is_string()) {
        Verdict v;
        v.status = verdict_status_from_string(item.get<std::string>());
        return v;
    }
    return Verdict::from_json(item);
}

inline MockBundle parse_mock_script(const nlohmann::json& j) {
    MockBundle bundle;

    std::vector<ScriptEntry> chat_script;
    for (const auto& item : j.value("chat", nlohmann::json::array())) {
        ScriptEntry e;
        if (item.is_string()) {
            e.response = item.get<std::string>();
        } else {
            e.match = item.value("match", "");
            e.response = item.value("response", "");
            e.fail_times = item.value("fail_times", 0);
        }
        chat_script.push_back(std::move(e));
    }
    bundle.chat = std::make_unique<ScriptedChatClient>(std::move(chat_script));

    if (j.contains("embed") && j["embed"].value("mode", "hash") == "scripted") {
        std::vector<EmbeddingVector> vecs;
        for (const auto& v : j["embed"].at("vectors"))
            vecs.push_back(v.get<EmbeddingVector>());
        bundle.embed = std::make_unique<ScriptedEmbedClient>(std::move(vecs));
    } else {
        size_t dim = 64;
        if (j.contains("embed")) dim = j["embed"].value("dim", size_t{64});
        bundle.embed = std::make_unique<HashEmbedClient>(dim);
    }

    if (j.contains("verifier")) {
        std::vector<Verdict> verdicts;
        for (const auto& item : j["verifier"]) verdicts.push_back(verdict_from_script_entry(item));
        bundle.verifier = std::make_unique<ScriptedVerifier>(std::move(verdicts));
    }
    return bundle;
}

inline MockBundle load_mock_script(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("mock script " + path + " unparseable: " + e.what());
    }
    return parse_mock_script(j);
}

}  // namespace lemmahead
