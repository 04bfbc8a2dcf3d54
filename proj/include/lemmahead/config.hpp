#pragma once

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>

#include "lemmahead/errors.hpp"
#include "lemmahead/text.hpp"

namespace lemmahead {

// Resolved application configuration. Precedence when assembling: CLI flag >
// environment > config file > built-in default; apply_file / apply_env /
// explicit setters are called in that order by the CLI.
struct AppConfig {
    std::string chat_url;
    std::string chat_model = "gpt-4";
    std::string embed_url;
    std::string embed_model = "text-embedding-3-small";
    std::string api_key;

    std::string store_path = "lemmahead.lhkb";
    std::string runs_dir = "runs";
    std::string mock_script;

    size_t retrieval_k = 5;
    int sigma = 5;
    std::string variant = "eqg";
    int parallelism = 1;
    bool include_verifier_feedback = true;
    bool early_exit = false;
    bool eqg_multi_query = false;

    double temperature = 0.0;
    int max_tokens = 2048;
    int max_retries = 3;
    long backoff_ms = 1000;

    std::string lean_cmd = "lean";
    std::string lean_project_dir;
    double verify_timeout_s = 300.0;

    size_t min_chunk_chars = 200;
    size_t max_chunk_chars = 4000;
    std::string rasterizer_cmd;

    std::string transcription_prompt_path;
    std::string segmentation_prompt_path;
    std::string keywords_prompt_path;
    std::string informal_proof_prompt_path;
    std::string formalization_prompt_path;

    void apply(const std::string& key, const std::string& value) {
        auto as_bool = [&] {
            if (value == "true" || value == "1" || value == "yes") return true;
            if (value == "false" || value == "0" || value == "no") return false;
            throw ConfigError("key '" + key + "': expected a boolean, got '" + value + "'");
        };
        auto as_long = [&]() -> long {
            try {
                size_t used = 0;
                long v = std::stol(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
                return v;
            } catch (const std::exception&) {
                throw ConfigError("key '" + key + "': expected an integer, got '" + value + "'");
            }
        };
        auto as_double = [&]() -> double {
            try {
                size_t used = 0;
                double v = std::stod(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
                return v;
            } catch (const std::exception&) {
                throw ConfigError("key '" + key + "': expected a number, got '" + value + "'");
            }
        };

        if (key == "chat_url") chat_url = value;
        else if (key == "chat_model") chat_model = value;
        else if (key == "embed_url") embed_url = value;
        else if (key == "embed_model") embed_model = value;
        else if (key == "api_key") api_key = value;
        else if (key == "store") store_path = value;
        else if (key == "runs_dir") runs_dir = value;
        else if (key == "mock_script") mock_script = value;
        else if (key == "retrieval_k") retrieval_k = static_cast<size_t>(as_long());
        else if (key == "sigma") sigma = static_cast<int>(as_long());
        else if (key == "variant") variant = value;
        else if (key == "parallelism") parallelism = static_cast<int>(as_long());
        else if (key == "include_verifier_feedback") include_verifier_feedback = as_bool();
        else if (key == "early_exit") early_exit = as_bool();
        else if (key == "eqg_multi_query") eqg_multi_query = as_bool();
        else if (key == "temperature") temperature = as_double();
        else if (key == "max_tokens") max_tokens = static_cast<int>(as_long());
        else if (key == "max_retries") max_retries = static_cast<int>(as_long());
        else if (key == "backoff_ms") backoff_ms = as_long();
        else if (key == "lean_cmd") lean_cmd = value;
        else if (key == "lean_project_dir") lean_project_dir = value;
        else if (key == "verify_timeout_s") verify_timeout_s = as_double();
        else if (key == "min_chunk_chars") min_chunk_chars = static_cast<size_t>(as_long());
        else if (key == "max_chunk_chars") max_chunk_chars = static_cast<size_t>(as_long());
        else if (key == "rasterizer_cmd") rasterizer_cmd = value;
        else if (key == "transcription_prompt_path") transcription_prompt_path = value;
        else if (key == "segmentation_prompt_path") segmentation_prompt_path = value;
        else if (key == "keywords_prompt_path") keywords_prompt_path = value;
        else if (key == "informal_proof_prompt_path") informal_proof_prompt_path = value;
        else if (key == "formalization_prompt_path") formalization_prompt_path = value;
        else throw ConfigError("unknown config key: " + key);
    }

    // TOML-style flat key/value file: `key = value`, # comments, quoted or
    // bare values.
    void apply_file(const std::string& path) {
        std::string text = read_file(path);
        size_t line_no = 0;
        for (const auto& raw : split_lines(text)) {
            ++line_no;
            std::string line = trim(raw);
            if (line.empty() || line[0] == '#') continue;
            if (line[0] == '[')
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": sections are not supported; use flat keys");
            size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
                std::string unq;
                for (size_t i = 1; i + 1 < value.size(); ++i) {
                    if (value[i] == '\\' && i + 2 < value.size()) ++i;
                    unq.push_back(value[i]);
                }
                value = unq;
            }
            try {
                apply(key, value);
            } catch (const ConfigError& e) {
                throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
    }

    void apply_env() {
        auto env = [](const char* name) -> std::string {
            const char* v = std::getenv(name);
            return v ? v : "";
        };
        if (auto v = env("LEMMAHEAD_API_KEY"); !v.empty()) api_key = v;
        if (auto v = env("LEMMAHEAD_CHAT_URL"); !v.empty()) chat_url = v;
        if (auto v = env("LEMMAHEAD_CHAT_MODEL"); !v.empty()) chat_model = v;
        if (auto v = env("LEMMAHEAD_EMBED_URL"); !v.empty()) embed_url = v;
        if (auto v = env("LEMMAHEAD_EMBED_MODEL"); !v.empty()) embed_model = v;
    }

    // For --verbose dumps; the API key is never echoed.
    std::string describe() const {
        std::string s;
        s += "chat_url=" + chat_url + " chat_model=" + chat_model + "\n";
        s += "embed_url=" + embed_url + " embed_model=" + embed_model + "\n";
        s += std::string("api_key=") + (api_key.empty() ? "(unset)" : "(set, hidden)") + "\n";
        s += "store=" + store_path + " runs_dir=" + runs_dir + "\n";
        s += "variant=" + variant + " retrieval_k=" + std::to_string(retrieval_k) +
             " sigma=" + std::to_string(sigma) + "\n";
        s += "lean_cmd=" + lean_cmd + " lean_project_dir=" + lean_project_dir + "\n";
        return s;
    }
};

}  // namespace lemmahead
