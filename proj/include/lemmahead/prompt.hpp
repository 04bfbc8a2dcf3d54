#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lemmahead/errors.hpp"
#include "lemmahead/text.hpp"

namespace lemmahead {

struct TemplateMessage {
    std::string role;  // "system" or "user"
    std::string text;
};

// A prompt template with an explicit placeholder set. Only declared names are
// substituted, so LaTeX braces in the template body pass through untouched.
struct PromptTemplate {
    std::string template_id;
    std::set<std::string> placeholders;
    std::vector<TemplateMessage> messages;

    // Single-pass substitution: {name} for each declared placeholder, values
    // inserted verbatim and never re-scanned.
    std::vector<TemplateMessage> render(const std::map<std::string, std::string>& bindings) const {
        for (const auto& name : placeholders)
            if (!bindings.count(name)) throw RenderError(name);
        std::vector<TemplateMessage> out;
        out.reserve(messages.size());
        for (const auto& msg : messages) {
            std::string text;
            text.reserve(msg.text.size());
            size_t i = 0;
            while (i < msg.text.size()) {
                char c = msg.text[i];
                if (c == '{') {
                    size_t close = msg.text.find('}', i + 1);
                    if (close != std::string::npos) {
                        std::string name = msg.text.substr(i + 1, close - i - 1);
                        if (placeholders.count(name)) {
                            text += bindings.at(name);
                            i = close + 1;
                            continue;
                        }
                    }
                }
                text.push_back(c);
                ++i;
            }
            out.push_back({msg.role, std::move(text)});
        }
        return out;
    }

    void check() const {
        if (messages.empty()) throw TemplateError(template_id + ": no messages");
        for (const auto& name : placeholders) {
            bool seen = false;
            std::string token = "{" + name + "}";
            for (const auto& msg : messages)
                if (msg.text.find(token) != std::string::npos) seen = true;
            if (!seen)
                throw TemplateError(template_id + ": declared placeholder '" + name +
                                    "' never referenced");
        }
    }
};

// Template file format:
//   placeholders: a, b
//   [system]
//   ...
//   [user]
//   ... {a} ...
inline PromptTemplate parse_template(const std::string& template_id, std::string_view text) {
    PromptTemplate t;
    t.template_id = template_id;
    std::string cur_role;
    std::string cur_text;
    auto flush = [&] {
        if (!cur_role.empty()) t.messages.push_back({cur_role, trim(cur_text)});
        cur_text.clear();
    };
    for (const auto& line : split_lines(text)) {
        std::string stripped = trim(line);
        if (cur_role.empty() && starts_with(stripped, "placeholders:")) {
            std::string names = stripped.substr(13);
            size_t start = 0;
            while (start <= names.size()) {
                size_t comma = names.find(',', start);
                std::string name = trim(names.substr(start, comma - start));
                if (!name.empty()) t.placeholders.insert(name);
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            continue;
        }
        if (stripped == "[system]" || stripped == "[user]") {
            flush();
            cur_role = stripped.substr(1, stripped.size() - 2);
            continue;
        }
        if (cur_role.empty()) {
            if (!stripped.empty() && stripped[0] != '#')
                throw TemplateError(template_id + ": text before first role header");
            continue;
        }
        cur_text += line;
        cur_text += '\n';
    }
    flush();
    t.check();
    return t;
}

inline PromptTemplate load_template(const std::string& template_id, const std::string& path) {
    return parse_template(template_id, read_file(path));
}

// The five templates the system needs, shipped as editable assets under
// assets/prompts/ and mirrored here so a bare checkout works with no config.
namespace builtin_prompts {

inline constexpr const char* kTranscription = R"(placeholders: page_number
[system]
You transcribe scanned mathematics pages into LaTeX source.
Output only the LaTeX for the page, with no commentary and no code fences.
Reproduce every formula exactly. Use the environments theorem, lemma,
proposition, example, problem, proof and solution where the layout shows them.
[user]
Transcribe page {page_number} of the attached image into LaTeX.
)";

inline constexpr const char* kSegmentation = R"(placeholders: document
[system]
You split LaTeX study material into self-contained chunks. Reply with a JSON
array only. Each element is an object with fields:
  "start": the first characters of the chunk, copied verbatim from the source,
  "kind": one of "problem_solution", "theory", "worked_example",
  "title": a short label.
Chunks must appear in document order and jointly cover the whole document.
Keep each problem together with its solution, and each theorem with its proof,
inside a single chunk.
[user]
Split this document:

{document}
)";

inline constexpr const char* kKeywords = R"(placeholders: statement, prior_proof
[system]
You name the mathematical concepts, theorems, lemmas, and propositions needed
to solve the given problem. Reply with a comma-separated list of keywords only.
[user]
Problem statement:
{statement}

Previous proof attempt:
{prior_proof}
)";

inline constexpr const char* kInformalProof = R"(placeholders: statement, context, feedback
[system]
You write rigorous informal mathematical proofs in LaTeX. Ground every step;
use the reference material when it is relevant. Output only the proof.
[user]
Reference material:
{context}

Problem statement:
{statement}

Feedback on the previous attempt:
{feedback}
)";

inline constexpr const char* kFormalization = R"(placeholders: formal_statement, informal_proof
[system]
You convert informal mathematical proofs into complete Lean proofs. Output
only Lean source code proving exactly the given theorem statement. The proof
must compile on its own: include the imports it needs and never use sorry or
admit.
[user]
Theorem statement:
{formal_statement}

Informal proof:
{informal_proof}
)";

}  // namespace builtin_prompts

inline PromptTemplate builtin_template(const std::string& template_id) {
    using namespace builtin_prompts;
    if (template_id == "transcription") return parse_template(template_id, kTranscription);
    if (template_id == "segmentation") return parse_template(template_id, kSegmentation);
    if (template_id == "keywords") return parse_template(template_id, kKeywords);
    if (template_id == "informal_proof") return parse_template(template_id, kInformalProof);
    if (template_id == "formalization") return parse_template(template_id, kFormalization);
    throw TemplateError("unknown builtin template: " + template_id);
}

}  // namespace lemmahead
