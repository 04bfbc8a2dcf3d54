#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "lemmahead/errors.hpp"
#include "lemmahead/text.hpp"

namespace lemmahead {

struct PageImage {
    std::string document_id;
    int page_number = 1;  // 1-based
    std::string image_png;

    void check() const {
        if (page_number < 1) throw ValidationError("page_number must be >= 1");
        if (image_png.empty()) throw ValidationError("image_bytes empty");
    }
};

enum class DocOrigin { transcribed, native };

struct LatexDocument {
    std::string document_id;
    std::string latex;
    DocOrigin origin = DocOrigin::native;
};

enum class ChunkKind { problem_solution, theory, worked_example };

inline std::string to_string(ChunkKind k) {
    switch (k) {
        case ChunkKind::problem_solution: return "problem_solution";
        case ChunkKind::theory: return "theory";
        case ChunkKind::worked_example: return "worked_example";
    }
    return "theory";
}

inline ChunkKind chunk_kind_from_string(const std::string& s) {
    if (s == "problem_solution") return ChunkKind::problem_solution;
    if (s == "theory") return ChunkKind::theory;
    if (s == "worked_example") return ChunkKind::worked_example;
    throw ValidationError("unknown chunk kind: " + s);
}

struct ChunkSource {
    std::string document_id;
    int page_begin = 0;  // 0 = unknown/not page-derived
    int page_end = 0;
};

struct Chunk {
    std::string chunk_id;
    ChunkSource source;
    ChunkKind kind = ChunkKind::theory;
    std::string latex;
    std::string title;  // optional, empty when absent

    void check() const {
        if (chunk_id.empty()) throw ValidationError("chunk_id empty");
        if (latex.empty()) throw ValidationError("chunk latex empty");
    }
};

inline nlohmann::ordered_json to_json(const Chunk& c) {
    return nlohmann::ordered_json{
        {"chunk_id", c.chunk_id},
        {"source", {{"document_id", c.source.document_id},
                    {"page_begin", c.source.page_begin},
                    {"page_end", c.source.page_end}}},
        {"kind", to_string(c.kind)},
        {"title", c.title},
        {"latex", c.latex}};
}

inline Chunk chunk_from_json(const nlohmann::json& j) {
    Chunk c;
    c.chunk_id = j.at("chunk_id").get<std::string>();
    const auto& s = j.at("source");
    c.source.document_id = s.at("document_id").get<std::string>();
    c.source.page_begin = s.at("page_begin").get<int>();
    c.source.page_end = s.at("page_end").get<int>();
    c.kind = chunk_kind_from_string(j.at("kind").get<std::string>());
    c.title = j.value("title", "");
    c.latex = j.at("latex").get<std::string>();
    c.check();
    return c;
}

namespace latex {

struct EnvToken {
    bool is_begin = false;
    std::string name;
    std::size_t pos = 0;        // offset of the backslash
    std::size_t end = 0;        // one past the closing brace
};

// Scans \begin{...}/\end{...} tokens, skipping LaTeX comments (% to EOL,
// unless the % is escaped).
inline std::vector<EnvToken> scan_environments(std::string_view s) {
    std::vector<EnvToken> toks;
    for (size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '\\' && i + 1 < s.size() && (s[i + 1] == '%' || s[i + 1] == '\\')) {
            ++i;
            continue;
        }
        if (c == '%') {
            while (i < s.size() && s[i] != '\n') ++i;
            continue;
        }
        if (c != '\\') continue;
        bool is_begin = false;
        size_t kw_len = 0;
        if (s.substr(i).substr(0, 7) == "\\begin{") {
            is_begin = true;
            kw_len = 7;
        } else if (s.substr(i).substr(0, 5) == "\\end{") {
            kw_len = 5;
        } else {
            continue;
        }
        size_t close = s.find('}', i + kw_len);
        if (close == std::string_view::npos) continue;
        EnvToken t;
        t.is_begin = is_begin;
        t.name = std::string(s.substr(i + kw_len, close - (i + kw_len)));
        t.pos = i;
        t.end = close + 1;
        toks.push_back(std::move(t));
        i = close;
    }
    return toks;
}

// Verifies every \begin{X} has a matching \end{X}; throws naming the first
// unmatched environment.
inline void validate_balanced(std::string_view s) {
    std::vector<EnvToken> stack;
    for (auto& t : scan_environments(s)) {
        if (t.is_begin) {
            stack.push_back(t);
        } else {
            if (stack.empty() || stack.back().name != t.name) {
                if (!stack.empty()) throw LatexBalanceError(stack.back().name, stack.back().pos);
                throw LatexBalanceError(t.name, t.pos);
            }
            stack.pop_back();
        }
    }
    if (!stack.empty()) throw LatexBalanceError(stack.front().name, stack.front().pos);
}

}  // namespace latex

inline void validate_document(const LatexDocument& doc) {
    if (doc.latex.empty()) throw ValidationError("document latex empty: " + doc.document_id);
    latex::validate_balanced(doc.latex);
}

}  // namespace lemmahead
