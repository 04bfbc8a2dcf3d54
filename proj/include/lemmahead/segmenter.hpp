#pragma once

#include <nlohmann/json.hpp>

#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lemmahead/corpus.hpp"
#include "lemmahead/errors.hpp"
#include "lemmahead/text.hpp"

namespace lemmahead {

struct SegmentOptions {
    std::size_t min_chunk_chars = 200;
    std::size_t max_chunk_chars = 4000;
};

namespace detail {

inline bool is_unit_env(const std::string& name) {
    return name == "theorem" || name == "lemma" || name == "proposition" ||
           name == "example" || name == "problem";
}

inline bool is_attach_env(const std::string& name) {
    return name == "proof" || name == "solution";
}

inline ChunkKind kind_for_env(const std::string& name) {
    if (name == "problem") return ChunkKind::problem_solution;
    if (name == "example") return ChunkKind::worked_example;
    return ChunkKind::theory;
}

struct SectionMarker {
    std::size_t pos = 0;
    std::size_t header_end = 0;
    std::string title;
};

// \section{...} and \subsection{...} occurrences outside environments and
// comments. Starred forms count too.
inline std::vector<SectionMarker> find_section_markers(std::string_view s) {
    auto toks = latex::scan_environments(s);
    std::vector<SectionMarker> out;
    size_t tok_i = 0;
    int depth = 0;
    for (size_t i = 0; i < s.size(); ++i) {
        while (tok_i < toks.size() && toks[tok_i].pos <= i) {
            depth += toks[tok_i].is_begin ? 1 : -1;
            ++tok_i;
        }
        char c = s[i];
        if (c == '\\' && i + 1 < s.size() && (s[i + 1] == '%' || s[i + 1] == '\\')) {
            ++i;
            continue;
        }
        if (c == '%') {
            while (i < s.size() && s[i] != '\n') ++i;
            continue;
        }
        if (c != '\\' || depth > 0) continue;
        std::string_view rest = s.substr(i);
        size_t kw = 0;
        if (starts_with(rest, "\\subsection")) kw = 11;
        else if (starts_with(rest, "\\section")) kw = 8;
        else continue;
        size_t j = i + kw;
        if (j < s.size() && s[j] == '*') ++j;
        if (j >= s.size() || s[j] != '{') continue;
        // balanced-brace title scan
        int braces = 1;
        size_t k = j + 1;
        while (k < s.size() && braces > 0) {
            if (s[k] == '{') ++braces;
            else if (s[k] == '}') --braces;
            ++k;
        }
        SectionMarker m;
        m.pos = i;
        m.header_end = k;
        m.title = trim(s.substr(j + 1, k - j - 2));
        out.push_back(std::move(m));
        i = k - 1;
    }
    return out;
}

struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
    ChunkKind kind = ChunkKind::theory;
    bool env_atom = false;  // holds a unit env (+ attached proof); never split
    std::string title;
};

// Splits one section region into env-unit spans and residual theory spans.
// Spans partition [begin, end) exactly.
inline void region_spans(std::string_view doc, std::size_t begin, std::size_t end,
                         const std::string& title, std::size_t header_end,
                         std::vector<Span>& out) {
    auto toks = latex::scan_environments(doc.substr(begin, end - begin));
    for (auto& t : toks) {
        t.pos += begin;
        t.end += begin;
    }

    std::vector<Span> spans;
    std::size_t cursor = begin;
    size_t i = 0;
    while (i < toks.size()) {
        if (!(toks[i].is_begin && is_unit_env(toks[i].name))) {
            // skip over nested content of non-unit envs
            if (toks[i].is_begin) {
                int depth = 1;
                ++i;
                while (i < toks.size() && depth > 0) {
                    depth += toks[i].is_begin ? 1 : -1;
                    ++i;
                }
            } else {
                ++i;
            }
            continue;
        }
        std::size_t unit_begin = toks[i].pos;
        // matching \end of this unit env
        int depth = 1;
        size_t j = i + 1;
        while (j < toks.size() && depth > 0) {
            depth += toks[j].is_begin ? 1 : -1;
            ++j;
        }
        std::size_t unit_end = toks[j - 1].end;
        ChunkKind kind = kind_for_env(toks[i].name);
        // attach immediately following proof/solution environments
        size_t k = j;
        while (k < toks.size() && toks[k].is_begin && is_attach_env(toks[k].name) &&
               trim(doc.substr(unit_end, toks[k].pos - unit_end)).empty()) {
            int d2 = 1;
            size_t m = k + 1;
            while (m < toks.size() && d2 > 0) {
                d2 += toks[m].is_begin ? 1 : -1;
                ++m;
            }
            unit_end = toks[m - 1].end;
            k = m;
        }
        if (unit_begin > cursor)
            spans.push_back({cursor, unit_begin, ChunkKind::theory, false, title});
        spans.push_back({unit_begin, unit_end, kind, true, title});
        cursor = unit_end;
        i = k;
    }
    if (cursor < end) spans.push_back({cursor, end, ChunkKind::theory, false, title});

    // Residual spans that carry no content (whitespace, or just the section
    // header) attach to a neighbour instead of standing alone.
    std::vector<Span> kept;
    for (size_t s_i = 0; s_i < spans.size(); ++s_i) {
        Span sp = spans[s_i];
        bool only_header =
            !sp.env_atom && header_end > sp.begin && header_end <= sp.end &&
            trim(doc.substr(header_end, sp.end - header_end)).empty();
        bool blank = !sp.env_atom && trim(doc.substr(sp.begin, sp.end - sp.begin)).empty();
        if ((blank || only_header) && s_i + 1 < spans.size()) {
            spans[s_i + 1].begin = sp.begin;  // fold into the next span
        } else if (blank && !kept.empty()) {
            kept.back().end = sp.end;
        } else {
            kept.push_back(sp);
        }
    }
    for (auto& sp : kept) out.push_back(sp);
}

inline std::vector<Span> merge_small(std::string_view doc, std::vector<Span> spans,
                                     std::size_t min_chars) {
    if (min_chars == 0 || spans.size() < 2) return spans;
    std::vector<Span> out;
    for (auto& sp : spans) {
        std::size_t content = collapse_ws(doc.substr(sp.begin, sp.end - sp.begin)).size();
        if (content < min_chars && !out.empty()) {
            out.back().end = sp.end;
            out.back().env_atom = out.back().env_atom || sp.env_atom;
        } else {
            out.push_back(sp);
        }
    }
    // a short leading span folds forward
    if (out.size() >= 2) {
        std::size_t content =
            collapse_ws(doc.substr(out[0].begin, out[0].end - out[0].begin)).size();
        if (content < min_chars) {
            out[1].begin = out[0].begin;
            out[1].env_atom = out[1].env_atom || out[0].env_atom;
            out.erase(out.begin());
        }
    }
    return out;
}

// Paragraph-break positions (start of a "\n\n" run) at environment depth 0.
inline std::vector<std::size_t> paragraph_breaks(std::string_view text) {
    auto toks = latex::scan_environments(text);
    std::vector<std::size_t> breaks;
    size_t tok_i = 0;
    int depth = 0;
    for (size_t i = 0; i + 1 < text.size(); ++i) {
        while (tok_i < toks.size() && toks[tok_i].pos <= i) {
            depth += toks[tok_i].is_begin ? 1 : -1;
            ++tok_i;
        }
        if (depth == 0 && text[i] == '\n' && text[i + 1] == '\n') {
            breaks.push_back(i);
            while (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        }
    }
    return breaks;
}

inline std::vector<Span> split_large(std::string_view doc, std::vector<Span> spans,
                                     std::size_t max_chars) {
    if (max_chars == 0) return spans;
    std::vector<Span> out;
    for (auto& sp : spans) {
        std::size_t len = sp.end - sp.begin;
        if (sp.env_atom || len <= max_chars) {
            out.push_back(sp);
            continue;
        }
        auto breaks = paragraph_breaks(doc.substr(sp.begin, len));
        std::size_t piece_begin = sp.begin;
        while (sp.end - piece_begin > max_chars) {
            std::size_t limit = piece_begin + max_chars;
            std::size_t cut = 0;
            for (std::size_t b : breaks) {
                std::size_t abs = sp.begin + b;
                if (abs > piece_begin && abs <= limit) cut = abs;
            }
            if (cut == 0) {
                // no paragraph break in range: last newline, else hard cut
                // backed up to a UTF-8 codepoint boundary
                std::size_t nl = doc.rfind('\n', limit);
                if (nl != std::string_view::npos && nl > piece_begin) {
                    cut = nl;
                } else {
                    cut = limit;
                    while (cut > piece_begin + 1 &&
                           (static_cast<unsigned char>(doc[cut]) & 0xC0) == 0x80)
                        --cut;
                }
            }
            out.push_back({piece_begin, cut, sp.kind, false, sp.title});
            piece_begin = cut;
        }
        out.push_back({piece_begin, sp.end, sp.kind, false, sp.title});
    }
    return out;
}

inline std::vector<Chunk> spans_to_chunks(const LatexDocument& doc,
                                          const std::vector<Span>& spans) {
    std::vector<Chunk> chunks;
    chunks.reserve(spans.size());
    int idx = 0;
    for (const auto& sp : spans) {
        Chunk c;
        char buf[16];
        std::snprintf(buf, sizeof buf, ":%04d", idx++);
        c.chunk_id = doc.document_id + buf;
        c.source.document_id = doc.document_id;
        c.kind = sp.kind;
        c.title = sp.title;
        c.latex = doc.latex.substr(sp.begin, sp.end - sp.begin);
        chunks.push_back(std::move(c));
    }
    return chunks;
}

inline std::vector<Span> rule_based_spans(const LatexDocument& doc,
                                          const SegmentOptions& opts) {
    std::string_view text = doc.latex;
    auto markers = find_section_markers(text);

    std::vector<Span> spans;
    std::size_t pos = 0;
    for (size_t m = 0; m <= markers.size(); ++m) {
        std::size_t region_end = (m < markers.size()) ? markers[m].pos : text.size();
        if (region_end > pos) {
            std::string title = (m == 0) ? "" : markers[m - 1].title;
            std::size_t header_end = (m == 0) ? 0 : markers[m - 1].header_end;
            region_spans(text, pos, region_end, title, header_end, spans);
        }
        pos = region_end;
    }
    if (spans.empty() && !text.empty())
        spans.push_back({0, text.size(), ChunkKind::theory, false, ""});

    spans = merge_small(text, std::move(spans), opts.min_chunk_chars);
    spans = split_large(text, std::move(spans), opts.max_chunk_chars);
    return spans;
}

}  // namespace detail

// Deterministic structural segmentation: sections first, then unit
// environments with their following proof/solution attached, residual text
// as theory chunks. Chunks are exact substrings partitioning the document.
inline std::vector<Chunk> segment_rule_based(const LatexDocument& doc,
                                             const SegmentOptions& opts = {}) {
    validate_document(doc);
    return detail::spans_to_chunks(doc, detail::rule_based_spans(doc, opts));
}

// Client contract for LLM-driven segmentation: given the document text,
// return a JSON array of {"start": "<verbatim opening snippet>",
// "kind": "theory|problem_solution|worked_example", "title": "..."}.
using SegmentProposalFn = std::function<std::string(const std::string& doc_latex)>;

namespace detail {

// Whitespace-tolerant substring location. Returns the offset in `hay` where
// `needle` begins, ignoring whitespace-run differences.
inline std::optional<std::size_t> locate_fuzzy(std::string_view hay,
                                               std::string_view needle,
                                               std::size_t from = 0) {
    std::string coll_needle = collapse_ws(needle);
    if (coll_needle.empty()) return std::nullopt;
    std::string coll;
    std::vector<std::size_t> map;  // collapsed index -> original index
    coll.reserve(hay.size());
    map.reserve(hay.size());
    bool in_ws = true;
    for (std::size_t i = 0; i < hay.size(); ++i) {
        if (std::isspace(static_cast<unsigned char>(hay[i]))) {
            in_ws = true;
        } else {
            if (in_ws && !coll.empty()) {
                coll.push_back(' ');
                map.push_back(i);
            }
            in_ws = false;
            coll.push_back(hay[i]);
            map.push_back(i);
        }
    }
    // translate `from` into collapsed space
    std::size_t cfrom = 0;
    while (cfrom < map.size() && map[cfrom] < from) ++cfrom;
    std::size_t found = coll.find(coll_needle, cfrom);
    if (found == std::string::npos && cfrom > 0) found = coll.find(coll_needle);
    if (found == std::string::npos) return std::nullopt;
    return map[found];
}

struct Proposal {
    std::optional<std::size_t> offset;
    ChunkKind kind = ChunkKind::theory;
    std::string title;
};

inline std::vector<Proposal> parse_proposals(const std::string& response,
                                             std::string_view doc_text) {
    auto payload = strip_code_fences(response);
    nlohmann::json j = nlohmann::json::parse(payload);
    if (!j.is_array() || j.empty()) throw ValidationError("segmentation response is not a JSON array");
    std::vector<Proposal> props;
    std::size_t search_from = 0;
    for (const auto& item : j) {
        Proposal p;
        std::string start = item.at("start").get<std::string>();
        p.offset = locate_fuzzy(doc_text, start, search_from);
        if (p.offset) search_from = *p.offset + 1;
        if (item.contains("kind")) {
            try {
                p.kind = chunk_kind_from_string(item["kind"].get<std::string>());
            } catch (const ValidationError&) {
                p.kind = ChunkKind::theory;
            }
        }
        p.title = item.value("title", "");
        props.push_back(std::move(p));
    }
    return props;
}

// Last meaningful env ending a span / first env opening a span, for the
// pair-preservation fixup.
inline std::optional<std::string> trailing_env(std::string_view text) {
    auto toks = latex::scan_environments(text);
    if (toks.empty()) return std::nullopt;
    const auto& last = toks.back();
    if (last.is_begin) return std::nullopt;
    if (!trim(text.substr(last.end)).empty()) return std::nullopt;
    return last.name;
}

inline std::optional<std::string> leading_env(std::string_view text) {
    auto toks = latex::scan_environments(text);
    if (toks.empty()) return std::nullopt;
    const auto& first = toks.front();
    if (!first.is_begin) return std::nullopt;
    if (!trim(text.substr(0, first.pos)).empty()) return std::nullopt;
    return first.name;
}

}  // namespace detail

// LLM-proposed segmentation. Boundaries come from the client; text is always
// mapped back to the source document, so rewritten content can never leak in.
// Unlocatable boundaries degrade the affected region to rule-based
// segmentation; a failing client degrades the whole document.
inline std::vector<Chunk> segment_latex(const LatexDocument& doc,
                                        const SegmentProposalFn& propose,
                                        const SegmentOptions& opts = {}) {
    validate_document(doc);
    std::string_view text = doc.latex;

    std::vector<detail::Proposal> props;
    try {
        props = detail::parse_proposals(propose(doc.latex), text);
    } catch (const std::exception&) {
        return segment_rule_based(doc, opts);
    }

    bool any_located = false;
    for (const auto& p : props) any_located = any_located || p.offset.has_value();
    if (!any_located) return segment_rule_based(doc, opts);

    // Build spans between located boundaries; a region that swallowed one or
    // more discarded proposals is re-segmented by rules.
    struct Region {
        std::size_t begin, end;
        bool fallback;
        ChunkKind kind;
        std::string title;
    };
    std::vector<Region> regions;
    std::size_t cursor = 0;
    bool pending_fallback = false;
    ChunkKind cur_kind = ChunkKind::theory;
    std::string cur_title;
    bool have_open = false;
    for (const auto& p : props) {
        if (!p.offset) {
            pending_fallback = true;
            continue;
        }
        std::size_t off = *p.offset;
        if (!have_open) {
            if (off > cursor && !trim(text.substr(cursor, off - cursor)).empty())
                regions.push_back({cursor, off, true, ChunkKind::theory, ""});
            else if (off > cursor)
                off = cursor;  // fold leading whitespace into the first span
        } else {
            if (off < cursor) {  // out-of-order boundary: discard it
                pending_fallback = true;
                continue;
            }
            if (off > cursor)
                regions.push_back({cursor, off, pending_fallback, cur_kind, cur_title});
        }
        cursor = off;
        cur_kind = p.kind;
        cur_title = p.title;
        have_open = true;
        pending_fallback = false;
    }
    if (cursor < text.size())
        regions.push_back({cursor, text.size(), pending_fallback, cur_kind, cur_title});

    std::vector<detail::Span> spans;
    for (const auto& r : regions) {
        if (r.fallback) {
            LatexDocument sub{doc.document_id, std::string(text.substr(r.begin, r.end - r.begin)),
                              doc.origin};
            for (auto sp : detail::rule_based_spans(sub, opts)) {
                sp.begin += r.begin;
                sp.end += r.begin;
                spans.push_back(sp);
            }
        } else {
            spans.push_back({r.begin, r.end, r.kind, true, r.title});
        }
    }

    // Pair preservation: never leave \begin{proof|solution} opening the chunk
    // after one that closes with a unit environment.
    for (size_t i = 0; i + 1 < spans.size();) {
        auto tail = detail::trailing_env(text.substr(spans[i].begin, spans[i].end - spans[i].begin));
        auto head = detail::leading_env(text.substr(spans[i + 1].begin, spans[i + 1].end - spans[i + 1].begin));
        if (tail && head && detail::is_unit_env(*tail) && detail::is_attach_env(*head)) {
            spans[i].end = spans[i + 1].end;
            spans[i].env_atom = true;
            spans.erase(spans.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        } else {
            ++i;
        }
    }

    spans = detail::split_large(text, std::move(spans), opts.max_chunk_chars);
    return detail::spans_to_chunks(doc, spans);
}

}  // namespace lemmahead
