#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lemmahead/chat.hpp"
#include "lemmahead/embedding.hpp"
#include "lemmahead/errors.hpp"
#include "lemmahead/lean.hpp"
#include "lemmahead/problem.hpp"
#include "lemmahead/store.hpp"
#include "lemmahead/text.hpp"

namespace lemmahead {

enum class Variant { basic, eqg, ipa };

inline std::string to_string(Variant v) {
    switch (v) {
        case Variant::basic: return "basic";
        case Variant::eqg: return "eqg";
        case Variant::ipa: return "ipa";
    }
    return "basic";
}

inline Variant variant_from_string(const std::string& s) {
    if (s == "basic") return Variant::basic;
    if (s == "eqg") return Variant::eqg;
    if (s == "ipa") return Variant::ipa;
    throw ValidationError("unknown pipeline variant: " + s);
}

struct PipelineConfig {
    Variant variant = Variant::basic;
    size_t retrieval_k = 5;
    int sigma = 5;  // IPA iteration count; ignored for basic/eqg
    bool include_verifier_feedback = true;
    bool early_exit = false;
    bool use_rag = true;  // false = control run with no retrieval stage
    bool eqg_multi_query = false;

    void check() const {
        if (sigma < 1) throw ValidationError("sigma must be >= 1");
        if (retrieval_k < 1) throw ValidationError("retrieval_k must be >= 1");
    }
};

struct IterationTrace {
    int index = 1;
    std::vector<std::string> keywords;  // empty for the basic variant
    bool keyword_fallback = false;
    std::string query_text;
    std::vector<ScoredChunk> retrieved;
    bool degraded_retrieval = false;  // empty store, no-rag, or embed failure
    std::string informal_proof;
    std::string lean_proof;
    std::optional<Verdict> verdict;
    std::string failed_stage;  // empty when every stage completed

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json retrieved_json = nlohmann::ordered_json::array();
        for (const auto& sc : retrieved)
            retrieved_json.push_back({{"chunk_id", sc.chunk.chunk_id},
                                      {"kind", lemmahead::to_string(sc.chunk.kind)},
                                      {"title", sc.chunk.title},
                                      {"score", sc.score},
                                      {"latex", sc.chunk.latex}});
        return {{"index", index},
                {"keywords", keywords},
                {"keyword_fallback", keyword_fallback},
                {"query_text", query_text},
                {"retrieved", std::move(retrieved_json)},
                {"degraded_retrieval", degraded_retrieval},
                {"informal_proof", informal_proof},
                {"lean_proof", lean_proof},
                {"verdict", verdict ? verdict->to_json() : nlohmann::ordered_json()},
                {"failed_stage", failed_stage}};
    }
};

struct ProofAttempt {
    std::string problem_name;
    Variant variant = Variant::basic;
    std::vector<IterationTrace> iterations;
    std::string final_informal_proof;
    std::string final_lean_proof;
    Verdict final_verdict;
    int llm_call_count = 0;
    int embed_call_count = 0;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json iters = nlohmann::ordered_json::array();
        for (const auto& it : iterations) iters.push_back(it.to_json());
        return {{"problem", problem_name},
                {"variant", lemmahead::to_string(variant)},
                {"iterations", std::move(iters)},
                {"final_informal_proof", final_informal_proof},
                {"final_lean_proof", final_lean_proof},
                {"final_verdict", final_verdict.to_json()},
                {"llm_call_count", llm_call_count},
                {"embed_call_count", embed_call_count}};
    }
};

// Everything a pipeline run needs. `store` may be null for control runs.
struct PipelineEnv {
    const KnowledgeBase* store = nullptr;
    Embedder* embedder = nullptr;
    LlmSession* session = nullptr;
    Verifier* verifier = nullptr;
    std::string run_id = "run";
};

inline constexpr const char* kNoMaterialSentinel = "No reference material available.";
inline constexpr const char* kNoFeedbackSentinel = "(none)";

// The basic pipeline queries with the raw informal statement,
// whitespace-normalized.
inline std::string build_basic_query(const Problem& problem) {
    std::string q = normalize_ws(trim(problem.informal_statement));
    if (q.empty()) throw ValidationError("informal_statement empty for " + problem.name);
    return q;
}

// Newline- or comma-separated keyword list -> trimmed, deduplicated keywords.
// Bullet prefixes are stripped. An unusable response yields an empty list,
// the fallback signal.
inline std::vector<std::string> parse_keyword_list(const std::string& response) {
    std::vector<std::string> keywords;
    for (const auto& raw_line : split_lines(response)) {
        std::string line = trim(raw_line);
        // strip "- ", "* ", "3." / "3)" bullets
        if (!line.empty() && (line[0] == '-' || line[0] == '*')) line = trim(line.substr(1));
        size_t digits = 0;
        while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits])))
            ++digits;
        if (digits > 0 && digits < line.size() && (line[digits] == '.' || line[digits] == ')'))
            line = trim(line.substr(digits + 1));
        size_t start = 0;
        while (start <= line.size()) {
            size_t comma = line.find(',', start);
            std::string kw = trim(line.substr(start, comma - start));
            if (!kw.empty()) {
                bool seen = false;
                for (const auto& k : keywords) seen = seen || k == kw;
                if (!seen) keywords.push_back(kw);
            }
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }
    return keywords;
}

inline std::vector<std::string> extract_keywords(const Problem& problem,
                                                 const std::optional<std::string>& prior_proof,
                                                 LlmSession& session) {
    std::string response = session.complete(
        "keywords", {{"statement", trim(problem.informal_statement)},
                     {"prior_proof", prior_proof ? *prior_proof : kNoFeedbackSentinel}});
    return parse_keyword_list(response);
}

// One concatenated retrieval query: keywords joined by "; ", then the
// normalized statement.
inline std::string build_eqg_query(const std::vector<std::string>& keywords,
                                   const Problem& problem) {
    if (keywords.empty()) throw ValidationError("build_eqg_query requires keywords");
    std::string q;
    for (const auto& k : keywords) {
        q += k;
        q += "; ";
    }
    q += build_basic_query(problem);
    return q;
}

// Renders the informal-proof prompt: retrieved chunks in score order, each
// headed by kind/title, chunk LaTeX inserted verbatim.
inline std::vector<ChatMessage> augment_prompt(const Problem& problem,
                                               const std::vector<ScoredChunk>& retrieved,
                                               LlmSession& session,
                                               const std::string& feedback = kNoFeedbackSentinel) {
    std::string context;
    if (retrieved.empty()) {
        context = kNoMaterialSentinel;
    } else {
        for (const auto& sc : retrieved) {
            context += "[" + lemmahead::to_string(sc.chunk.kind) + "]";
            if (!sc.chunk.title.empty()) context += " " + sc.chunk.title;
            context += "\n";
            context += sc.chunk.latex;
            context += "\n\n";
        }
    }
    auto rendered = session.get_template("informal_proof")
                        .render({{"statement", trim(problem.informal_statement)},
                                 {"context", context},
                                 {"feedback", feedback}});
    std::vector<ChatMessage> messages;
    for (const auto& m : rendered) messages.push_back(ChatMessage::from(m));
    return messages;
}

inline std::string generate_informal_proof(const std::vector<ChatMessage>& augmented,
                                           LlmSession& session) {
    return session.complete_messages("informal_proof", augmented);
}

inline std::string formalize_proof(const std::string& informal_proof, const Problem& problem,
                                   LlmSession& session) {
    if (trim(informal_proof).empty())
        throw ValidationError("formalize_proof requires a non-empty informal proof");
    std::string response =
        session.complete("formalization", {{"formal_statement", problem.formal_statement},
                                           {"informal_proof", informal_proof}});
    return strip_code_fences(response);
}

namespace detail {

inline void merge_max_score(std::vector<ScoredChunk>& into,
                            const std::vector<ScoredChunk>& from) {
    for (const auto& sc : from) {
        bool found = false;
        for (auto& existing : into) {
            if (existing.chunk.chunk_id == sc.chunk.chunk_id) {
                existing.score = std::max(existing.score, sc.score);
                found = true;
                break;
            }
        }
        if (!found) into.push_back(sc);
    }
}

// Retrieval stage. Degrades (empty result, flag set) instead of aborting on
// empty stores and embedding failures.
inline void retrieve_stage(const PipelineConfig& config, const PipelineEnv& env,
                           IterationTrace& trace, ProofAttempt& attempt) {
    if (!config.use_rag || env.store == nullptr || env.store->empty() ||
        env.embedder == nullptr) {
        trace.degraded_retrieval = true;
        return;
    }
    auto run_query = [&](const std::string& query) -> std::vector<ScoredChunk> {
        auto start = std::chrono::steady_clock::now();
        EmbeddingVector qv = env.embedder->embed_text(query);
        ++attempt.embed_call_count;
        auto results = env.store->top_k(qv, config.retrieval_k);
        long ms = static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                        std::chrono::steady_clock::now() - start)
                                        .count());
        std::vector<std::string> ids;
        ids.reserve(results.size());
        for (const auto& sc : results) ids.push_back(sc.chunk.chunk_id);
        env.session->log_retrieval(query, config.retrieval_k, ids, ms);
        return results;
    };
    try {
        if (config.eqg_multi_query && !trace.keywords.empty()) {
            std::vector<ScoredChunk> merged;
            for (const auto& kw : trace.keywords) merge_max_score(merged, run_query(kw));
            std::sort(merged.begin(), merged.end(),
                      [](const ScoredChunk& a, const ScoredChunk& b) {
                          if (a.score != b.score) return a.score > b.score;
                          return a.chunk.chunk_id < b.chunk.chunk_id;
                      });
            if (merged.size() > config.retrieval_k) merged.resize(config.retrieval_k);
            trace.retrieved = std::move(merged);
        } else {
            trace.retrieved = run_query(trace.query_text);
        }
    } catch (const GatewayError&) {
        trace.degraded_retrieval = true;
    } catch (const StoreError&) {
        trace.degraded_retrieval = true;
    }
}

inline Verdict stage_failure_verdict(const std::string& stage, const std::string& why) {
    Verdict v;
    v.status = VerdictStatus::failed;
    v.diagnostics.push_back({0, 0, "stage '" + stage + "' failed: " + why, "error"});
    return v;
}

}  // namespace detail

// Shared engine behind the three variants. basic: raw-statement query, one
// iteration. eqg: keyword query, one iteration. ipa: keyword query
// re-conditioned on the previous informal proof, sigma iterations, optional
// per-iteration verifier feedback.
inline ProofAttempt run_pipeline(const Problem& problem, const PipelineConfig& config,
                                 const PipelineEnv& env) {
    config.check();
    if (env.session == nullptr || env.verifier == nullptr)
        throw ValidationError("pipeline environment incomplete");

    ProofAttempt attempt;
    attempt.problem_name = problem.name;
    attempt.variant = config.variant;

    const int total_iterations = config.variant == Variant::ipa ? config.sigma : 1;
    std::string last_good_informal;

    for (int iter = 1; iter <= total_iterations; ++iter) {
        IterationTrace trace;
        trace.index = iter;

        // Query construction. basic uses the statement; eqg/ipa extract
        // keywords first and fall back to the basic query when extraction
        // yields nothing usable.
        if (config.variant == Variant::basic) {
            trace.query_text = build_basic_query(problem);
        } else {
            std::optional<std::string> prior;
            if (config.variant == Variant::ipa && iter > 1 && !last_good_informal.empty())
                prior = last_good_informal;
            ++attempt.llm_call_count;
            try {
                trace.keywords = extract_keywords(problem, prior, *env.session);
            } catch (const GatewayError&) {
                trace.keywords.clear();
            }
            if (trace.keywords.empty()) {
                trace.keyword_fallback = true;
                trace.query_text = build_basic_query(problem);
            } else {
                trace.query_text = build_eqg_query(trace.keywords, problem);
            }
        }

        detail::retrieve_stage(config, env, trace, attempt);

        // Informal proof generation, conditioned on the previous attempt
        // from iteration 2 onward.
        std::string feedback = kNoFeedbackSentinel;
        if (config.variant == Variant::ipa && iter > 1) {
            const IterationTrace& prev = attempt.iterations.back();
            std::string prev_informal =
                last_good_informal.empty() ? prev.informal_proof : last_good_informal;
            if (!prev_informal.empty()) {
                feedback = "Previous informal proof:\n" + prev_informal;
                if (config.include_verifier_feedback && prev.verdict) {
                    feedback += "\n\nLean verifier outcome: " + to_string(prev.verdict->status);
                    std::string diag = prev.verdict->diagnostics_text();
                    if (!diag.empty()) feedback += "\n" + diag;
                }
            }
        }

        ++attempt.llm_call_count;
        try {
            auto messages = augment_prompt(problem, trace.retrieved, *env.session, feedback);
            trace.informal_proof = generate_informal_proof(messages, *env.session);
        } catch (const GatewayError& e) {
            trace.failed_stage = "informal_proof";
            trace.verdict = detail::stage_failure_verdict("informal_proof", e.what());
            attempt.iterations.push_back(std::move(trace));
            continue;
        }
        last_good_informal = trace.informal_proof;

        ++attempt.llm_call_count;
        try {
            trace.lean_proof = formalize_proof(trace.informal_proof, problem, *env.session);
        } catch (const GatewayError& e) {
            trace.failed_stage = "formalization";
            trace.verdict = detail::stage_failure_verdict("formalization", e.what());
            attempt.iterations.push_back(std::move(trace));
            continue;
        }

        // basic/eqg verify their single iteration; ipa verifies every
        // iteration when feedback is on, otherwise only the last.
        bool verify_now = config.variant != Variant::ipa ||
                          config.include_verifier_feedback || iter == total_iterations;
        if (verify_now)
            trace.verdict = env.verifier->verify(trace.lean_proof, problem.name, iter);

        bool verified = trace.verdict && trace.verdict->status == VerdictStatus::verified;
        attempt.iterations.push_back(std::move(trace));
        if (config.early_exit && verified) break;
    }

    const IterationTrace& last = attempt.iterations.back();
    attempt.final_informal_proof = last.informal_proof;
    attempt.final_lean_proof = last.lean_proof;
    attempt.final_verdict = last.verdict ? *last.verdict
                                         : detail::stage_failure_verdict("verify", "not reached");
    return attempt;
}

inline ProofAttempt run_basic(const Problem& problem, PipelineConfig config,
                              const PipelineEnv& env) {
    config.variant = Variant::basic;
    return run_pipeline(problem, config, env);
}

inline ProofAttempt run_eqg(const Problem& problem, PipelineConfig config,
                            const PipelineEnv& env) {
    config.variant = Variant::eqg;
    return run_pipeline(problem, config, env);
}

inline ProofAttempt run_ipa(const Problem& problem, PipelineConfig config,
                            const PipelineEnv& env) {
    config.variant = Variant::ipa;
    return run_pipeline(problem, config, env);
}

}  // namespace lemmahead
