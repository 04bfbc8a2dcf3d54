#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "lemmahead/problem.hpp"

#include "lemmahead/corpus.hpp"
#include "lemmahead/embedding.hpp"
#include "lemmahead/store.hpp"

namespace testutil {

namespace fs = std::filesystem;

// Scratch directory removed on scope exit.
struct TempDir {
    fs::path path;

    TempDir() {
        static std::atomic<uint64_t> counter{0};
        auto stamp = std::to_string(
            std::chrono::steady_clock::now().time_since_epoch().count() % 100000000);
        path = fs::temp_directory_path() /
               ("lemmahead_test_" + stamp + "_" + std::to_string(counter.fetch_add(1)));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

// ---------------------------------------------------------------------------
// Independent retrieval oracle: plain scalar dot product and a stable sort
// over (score desc, chunk_id asc). Deliberately shares no code with
// KnowledgeBase::top_k.
// ---------------------------------------------------------------------------

inline double oracle_dot(const lemmahead::EmbeddingVector& a,
                         const lemmahead::EmbeddingVector& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

struct OracleHit {
    std::string chunk_id;
    double score;
};

inline std::vector<OracleHit> oracle_top_k(const lemmahead::KnowledgeBase& kb,
                                           const lemmahead::EmbeddingVector& query, size_t k) {
    std::vector<OracleHit> hits;
    for (const auto& rec : kb.records())
        hits.push_back({rec.chunk.chunk_id, oracle_dot(query, rec.embedding)});
    std::stable_sort(hits.begin(), hits.end(), [](const OracleHit& x, const OracleHit& y) {
        if (x.score != y.score) return x.score > y.score;
        return x.chunk_id < y.chunk_id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

// ---------------------------------------------------------------------------
// Random store construction
// ---------------------------------------------------------------------------

inline lemmahead::EmbeddingVector random_unit_vector(std::mt19937_64& rng, size_t dim) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    lemmahead::EmbeddingVector v(dim);
    for (auto& x : v) x = gauss(rng);
    return lemmahead::normalize_embedding(v);
}

inline lemmahead::Chunk make_chunk(const std::string& id, const std::string& latex = "x") {
    lemmahead::Chunk c;
    c.chunk_id = id;
    c.source.document_id = "doc";
    c.kind = lemmahead::ChunkKind::theory;
    c.latex = latex;
    return c;
}

// `dup_every` > 0 inserts exact duplicate embeddings to force score ties.
inline lemmahead::KnowledgeBase random_store(std::mt19937_64& rng, size_t n, size_t dim,
                                             size_t dup_every = 0) {
    lemmahead::KnowledgeBase kb;
    lemmahead::EmbeddingVector last;
    for (size_t i = 0; i < n; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "c%05zu", i);
        lemmahead::EmbeddingVector v;
        if (dup_every > 0 && i % dup_every == dup_every - 1 && !last.empty()) v = last;
        else v = random_unit_vector(rng, dim);
        last = v;
        kb.insert({make_chunk(id, "chunk " + std::to_string(i)), std::move(v)});
    }
    return kb;
}

// ---------------------------------------------------------------------------
// Random LaTeX corpus generation for segmentation properties
// ---------------------------------------------------------------------------

inline std::string random_words(std::mt19937_64& rng, int n) {
    static const char* pool[] = {"let",      "x",        "be",    "an",      "integer",
                                 "such",     "that",     "the",   "sum",     "$x^2+y^2$",
                                 "inequality", "holds",  "for",   "all",     "positive",
                                 "reals",    "therefore", "by",   "induction", "we",
                                 "conclude", "bounded",  "series", "converges", "absolutely"};
    std::uniform_int_distribution<size_t> pick(0, std::size(pool) - 1);
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += pool[pick(rng)];
    }
    return out;
}

// Sections containing random interleavings of theory paragraphs,
// theorem/proof pairs, problem/solution pairs, bare theorems and examples.
inline lemmahead::LatexDocument random_latex_doc(std::mt19937_64& rng, int id_tag,
                                                 int max_sections = 3) {
    std::uniform_int_distribution<int> nsec(1, max_sections);
    std::uniform_int_distribution<int> nblocks(1, 6);
    std::uniform_int_distribution<int> block_kind(0, 5);
    std::uniform_int_distribution<int> words(6, 40);
    std::string text;
    int sections = nsec(rng);
    for (int s = 0; s < sections; ++s) {
        text += "\\section{Topic " + std::to_string(s) + "}\n";
        int blocks = nblocks(rng);
        for (int b = 0; b < blocks; ++b) {
            switch (block_kind(rng)) {
                case 0:
                case 1:
                    text += random_words(rng, words(rng)) + "\n\n";
                    break;
                case 2:
                    text += "\\begin{theorem}\n" + random_words(rng, words(rng)) +
                            "\n\\end{theorem}\n\\begin{proof}\n" + random_words(rng, words(rng)) +
                            "\n\\end{proof}\n\n";
                    break;
                case 3:
                    text += "\\begin{problem}\n" + random_words(rng, words(rng)) +
                            "\n\\end{problem}\n\\begin{solution}\n" +
                            random_words(rng, words(rng)) + "\n\\end{solution}\n\n";
                    break;
                case 4:
                    text += "\\begin{theorem}\n" + random_words(rng, words(rng)) +
                            "\n\\end{theorem}\n\n";
                    break;
                default:
                    text += "\\begin{example}\n" + random_words(rng, words(rng)) +
                            "\n\\end{example}\n\n";
                    break;
            }
        }
    }
    return {"gen" + std::to_string(id_tag), text, lemmahead::DocOrigin::native};
}

// Pair-preservation check shared by unit tests and the acceptance suite:
// every unit environment immediately followed by a proof/solution must land
// in the same chunk. Chunks are exact substrings partitioning the document,
// so chunk boundaries can be recovered by walking lengths.
inline bool pairs_preserved(const lemmahead::LatexDocument& doc,
                            const std::vector<lemmahead::Chunk>& chunks) {
    std::vector<std::pair<size_t, size_t>> chunk_spans;
    size_t off = 0;
    for (const auto& c : chunks) {
        chunk_spans.push_back({off, off + c.latex.size()});
        off += c.latex.size();
    }
    if (off != doc.latex.size()) return false;

    auto toks = lemmahead::latex::scan_environments(doc.latex);
    auto is_unit = [](const std::string& n) {
        return n == "theorem" || n == "lemma" || n == "proposition" || n == "example" ||
               n == "problem";
    };
    auto is_attach = [](const std::string& n) { return n == "proof" || n == "solution"; };
    for (size_t i = 0; i + 1 < toks.size(); ++i) {
        if (toks[i].is_begin || !is_unit(toks[i].name)) continue;
        // find the next begin token after this unit's end
        size_t j = i + 1;
        while (j < toks.size() && !toks[j].is_begin) ++j;
        if (j >= toks.size() || !is_attach(toks[j].name)) continue;
        std::string between = doc.latex.substr(toks[i].end, toks[j].pos - toks[i].end);
        if (!lemmahead::trim(between).empty()) continue;
        // the pair spans [toks[i].pos-ish, matching end of attach env); it is
        // enough that the unit's end and the attach's begin share a chunk
        size_t unit_end = toks[i].end - 1;
        size_t attach_begin = toks[j].pos;
        for (const auto& [lo, hi] : chunk_spans) {
            bool has_end = unit_end >= lo && unit_end < hi;
            bool has_begin = attach_begin >= lo && attach_begin < hi;
            if (has_end != has_begin) return false;
            if (has_end && has_begin) break;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Appendix fixture: the mathd_algebra_419 five-attempt trace.
// ---------------------------------------------------------------------------

inline const char* kAppendixStatement =
    "What is the value of $-a-b^2+3ab$ if $a=-1$ and $b=5$? Show that it is -39.";

inline const char* kAppendixFormalHeader =
    "theorem mathd_algebra_419\n"
    "  (a b : ℝ)\n"
    "  (h₀ : a = -1)\n"
    "  (h₁ : b = 5) :\n"
    "  -a - b^2 + 3 * (a * b) = -39 :=";

inline const char* kAppendixInformal1 =
    "Proof:\n"
    "Given $a=-1$ and $b=5$, substitute into $-a-b^2+3ab$:\n"
    "$-(-1)-5^2+3(-1)(5)=1-25-15=-39.$\n"
    "Thus, the value is -39.";

inline const char* kAppendixLean1 =
    "import tactic\n"
    "theorem mathd_algebra_419\n"
    "  (a b : ℝ)\n"
    "  (h₀ : a = -1)\n"
    "  (h₁ : b = 5) :\n"
    "  -a - b^2 + 3 * (a * b) = -39 :=\n"
    "begin\n"
    "  rw [h₀, h₁],\n"
    "  norm_num,\n"
    "end";

inline const char* kAppendixLean5 =
    "import data.real.basic\n"
    "import tactic\n"
    "theorem mathd_algebra_419\n"
    "  (a b : ℝ)\n"
    "  (h₀ : a = -1)\n"
    "  (h₁ : b = 5) :\n"
    "  -a - b^2 + 3 * (a * b) = -39 :=\n"
    "begin\n"
    "  rw [h₀, h₁],\n"
    "  norm_num,\n"
    "end";

inline lemmahead::Problem appendix_problem() {
    lemmahead::Problem p;
    p.name = "mathd_algebra_419";
    p.split = lemmahead::Split::validation;
    p.informal_statement = kAppendixStatement;
    p.formal_statement = kAppendixFormalHeader;
    return p;
}

// Chat script for a five-iteration IPA replay of the Appendix trace:
// keywords, informal proof, Lean proof per iteration.
inline std::vector<std::string> appendix_chat_script() {
    std::vector<std::string> script;
    for (int i = 1; i <= 5; ++i) {
        script.push_back("substitution, arithmetic evaluation, distributive property");
        if (i == 1) script.push_back(kAppendixInformal1);
        else
            script.push_back(std::string(kAppendixInformal1) +
                             "\nAll previous errors have been resolved (attempt " +
                             std::to_string(i) + ").");
        script.push_back(i < 5 ? kAppendixLean1 : kAppendixLean5);
    }
    return script;
}

}  // namespace testutil
