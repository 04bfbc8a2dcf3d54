#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lemmahead/errors.hpp"
#include "lemmahead/process.hpp"
#include "lemmahead/text.hpp"

namespace lemmahead {

enum class VerdictStatus { verified, failed, incomplete, timeout, environment_error };

inline std::string to_string(VerdictStatus s) {
    switch (s) {
        case VerdictStatus::verified: return "verified";
        case VerdictStatus::failed: return "failed";
        case VerdictStatus::incomplete: return "incomplete";
        case VerdictStatus::timeout: return "timeout";
        case VerdictStatus::environment_error: return "environment_error";
    }
    return "failed";
}

inline VerdictStatus verdict_status_from_string(const std::string& s) {
    if (s == "verified") return VerdictStatus::verified;
    if (s == "failed") return VerdictStatus::failed;
    if (s == "incomplete") return VerdictStatus::incomplete;
    if (s == "timeout") return VerdictStatus::timeout;
    if (s == "environment_error") return VerdictStatus::environment_error;
    throw ValidationError("unknown verdict status: " + s);
}

struct Diagnostic {
    int line = 0;
    int column = 0;
    std::string message;
    std::string severity = "error";
};

struct Verdict {
    VerdictStatus status = VerdictStatus::failed;
    std::vector<Diagnostic> diagnostics;
    long elapsed_ms = 0;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json diags = nlohmann::ordered_json::array();
        for (const auto& d : diagnostics)
            diags.push_back({{"line", d.line},
                             {"column", d.column},
                             {"severity", d.severity},
                             {"message", d.message}});
        return {{"status", to_string(status)},
                {"diagnostics", std::move(diags)},
                {"elapsed_ms", elapsed_ms}};
    }

    static Verdict from_json(const nlohmann::json& j) {
        Verdict v;
        v.status = verdict_status_from_string(j.at("status").get<std::string>());
        v.elapsed_ms = j.value("elapsed_ms", 0L);
        for (const auto& d : j.value("diagnostics", nlohmann::json::array())) {
            Diagnostic diag;
            diag.line = d.value("line", 0);
            diag.column = d.value("column", 0);
            diag.message = d.value("message", "");
            diag.severity = d.value("severity", "error");
            v.diagnostics.push_back(std::move(diag));
        }
        return v;
    }

    std::string diagnostics_text() const {
        std::string out;
        for (const auto& d : diagnostics) {
            out += "line " + std::to_string(d.line) + ", col " + std::to_string(d.column) +
                   ": " + d.severity + ": " + d.message + "\n";
        }
        return out;
    }
};

// True iff `sorry` or `admit` occurs as a standalone token outside comments
// and string literals. Lean line comments are `--`, block comments `/- -/`
// (nesting), strings use double quotes with backslash escapes; identifiers
// may contain letters, digits, _ and '.
inline bool detect_incomplete(std::string_view src) {
    auto is_ident_char = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
    };
    size_t i = 0;
    const size_t n = src.size();
    while (i < n) {
        char c = src[i];
        if (c == '-' && i + 1 < n && src[i + 1] == '-') {
            while (i < n && src[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && src[i + 1] == '-') {
            int depth = 1;
            i += 2;
            while (i < n && depth > 0) {
                if (src[i] == '/' && i + 1 < n && src[i + 1] == '-') {
                    ++depth;
                    i += 2;
                } else if (src[i] == '-' && i + 1 < n && src[i + 1] == '/') {
                    --depth;
                    i += 2;
                } else {
                    ++i;
                }
            }
            continue;
        }
        if (c == '"') {
            ++i;
            while (i < n && src[i] != '"') {
                if (src[i] == '\\' && i + 1 < n) ++i;
                ++i;
            }
            ++i;
            continue;
        }
        if (is_ident_char(c)) {
            size_t start = i;
            while (i < n && is_ident_char(src[i])) ++i;
            std::string_view word = src.substr(start, i - start);
            if (word == "sorry" || word == "admit") return true;
            continue;
        }
        ++i;
    }
    return false;
}

// Common front door: whatever the backend says, an incomplete proof can never
// come out verified, and a verified verdict carries no diagnostics.
class Verifier {
public:
    virtual ~Verifier() = default;

    Verdict verify(const std::string& lean_source, const std::string& problem_name,
                   int iteration = 1) {
        Verdict v = do_verify(lean_source, problem_name, iteration);
        if (detect_incomplete(lean_source) && v.status == VerdictStatus::verified)
            v.status = VerdictStatus::incomplete;
        if (v.status == VerdictStatus::verified) v.diagnostics.clear();
        return v;
    }

    virtual std::string version_string() const { return "unknown"; }

protected:
    virtual Verdict do_verify(const std::string& lean_source, const std::string& problem_name,
                              int iteration) = 0;
};

// Plays back a fixed verdict sequence; exhaustion is an error, never reuse.
class ScriptedVerifier : public Verifier {
public:
    explicit ScriptedVerifier(std::vector<Verdict> script) : script_(std::move(script)) {}

    static ScriptedVerifier from_statuses(const std::vector<VerdictStatus>& statuses) {
        std::vector<Verdict> vs;
        for (auto s : statuses) vs.push_back({s, {}, 0});
        return ScriptedVerifier(std::move(vs));
    }

    std::string version_string() const override { return "scripted-mock"; }

    size_t consumed() const {
        std::lock_guard lock(mu_);
        return next_;
    }

protected:
    Verdict do_verify(const std::string&, const std::string&, int) override {
        std::lock_guard lock(mu_);
        if (next_ >= script_.size()) throw ScriptExhaustedError(next_);
        return script_[next_++];
    }

private:
    std::vector<Verdict> script_;
    size_t next_ = 0;
    mutable std::mutex mu_;
};

struct LeanConfig {
    std::string lean_cmd = "lean";         // checker invocation prefix
    std::string project_dir;               // prepared project with mathlib
    double timeout_s = 300.0;
    std::string run_id = "run";
};

namespace detail {

// `file:line:col: severity: message` lines.
inline std::optional<Diagnostic> parse_text_diag_line(const std::string& line) {
    size_t p1 = line.find(".lean:");
    size_t colon1;
    if (p1 != std::string::npos) {
        colon1 = p1 + 5;
    } else {
        return std::nullopt;
    }
    size_t colon2 = line.find(':', colon1 + 1);
    if (colon2 == std::string::npos) return std::nullopt;
    size_t colon3 = line.find(':', colon2 + 1);
    if (colon3 == std::string::npos) return std::nullopt;
    Diagnostic d;
    try {
        d.line = std::stoi(line.substr(colon1 + 1, colon2 - colon1 - 1));
        d.column = std::stoi(line.substr(colon2 + 1, colon3 - colon2 - 1));
    } catch (const std::exception&) {
        return std::nullopt;
    }
    std::string rest = trim(line.substr(colon3 + 1));
    size_t colon4 = rest.find(':');
    if (colon4 != std::string::npos) {
        std::string sev = trim(rest.substr(0, colon4));
        if (sev == "error" || sev == "warning" || sev == "info") {
            d.severity = sev;
            d.message = trim(rest.substr(colon4 + 1));
            return d;
        }
    }
    d.severity = "error";
    d.message = rest;
    return d;
}

// Lean's --json mode emits one JSON object per message.
inline std::optional<Diagnostic> parse_json_diag_line(const std::string& line) {
    if (line.empty() || line[0] != '{') return std::nullopt;
    try {
        auto j = nlohmann::json::parse(line);
        if (!j.contains("severity")) return std::nullopt;
        Diagnostic d;
        d.severity = j.value("severity", "error");
        d.line = j.value("pos_line", 0);
        d.column = j.value("pos_col", 0);
        d.message = j.value("text", j.value("message", ""));
        return d;
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
}

inline std::vector<Diagnostic> parse_diagnostics(const std::string& output) {
    std::vector<Diagnostic> diags;
    for (const auto& line : split_lines(output)) {
        if (auto d = parse_json_diag_line(line)) {
            diags.push_back(std::move(*d));
        } else if (auto t = parse_text_diag_line(line)) {
            diags.push_back(std::move(*t));
        }
    }
    return diags;
}

}  // namespace detail

// Invokes a real Lean toolchain on a temp file inside the configured project.
// Verification owns its temp file and touches nothing else in the project.
class LeanToolchainVerifier : public Verifier {
public:
    explicit LeanToolchainVerifier(LeanConfig config) : config_(std::move(config)) {}

    std::string version_string() const override {
        auto res = run_process(config_.lean_cmd + " --version", 30.0);
        if (res.spawn_failed || res.exit_code != 0) return "unavailable";
        return trim(res.out.empty() ? res.err : res.out);
    }

protected:
    Verdict do_verify(const std::string& lean_source, const std::string& problem_name,
                      int iteration) override {
        namespace fs = std::filesystem;
        Verdict v;
        if (config_.project_dir.empty() || !fs::is_directory(config_.project_dir)) {
            v.status = VerdictStatus::environment_error;
            v.diagnostics.push_back(
                {0, 0, "lean project directory not available: " + config_.project_dir, "error"});
            return v;
        }
        std::string sane = sanitize(problem_name);
        fs::path tmp = fs::path(config_.project_dir) /
                       ("attempt_" + config_.run_id + "_" + sane + "_" +
                        std::to_string(iteration) + ".lean");
        write_file(tmp.string(), lean_source);
        struct Cleanup {
            fs::path p;
            ~Cleanup() {
                std::error_code ec;
                fs::remove(p, ec);
            }
        } cleanup{tmp};

        std::string cmd = config_.lean_cmd + " " + shell_quote(tmp.string());
        ProcessResult res = run_process(cmd, config_.timeout_s);
        v.elapsed_ms = res.elapsed_ms;
        v.diagnostics = detail::parse_diagnostics(res.out + "\n" + res.err);
        if (res.timed_out) {
            v.status = VerdictStatus::timeout;
            return v;
        }
        if (res.spawn_failed) {
            v.status = VerdictStatus::environment_error;
            v.diagnostics.push_back({0, 0, "cannot run checker: " + config_.lean_cmd, "error"});
            return v;
        }
        bool has_error = false;
        for (const auto& d : v.diagnostics) has_error = has_error || d.severity == "error";
        if (res.exit_code == 0 && !has_error) {
            v.status = detect_incomplete(lean_source) ? VerdictStatus::incomplete
                                                      : VerdictStatus::verified;
        } else {
            v.status = VerdictStatus::failed;
        }
        return v;
    }

private:
    static std::string sanitize(const std::string& name) {
        std::string out;
        for (char c : name)
            out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
        return out.empty() ? "anonymous" : out;
    }

    static std::string shell_quote(const std::string& s) {
        std::string out = "'";
        for (char c : s) {
            if (c == '\'') out += "'\\''";
            else out.push_back(c);
        }
        out += "'";
        return out;
    }

    LeanConfig config_;
};

}  // namespace lemmahead
