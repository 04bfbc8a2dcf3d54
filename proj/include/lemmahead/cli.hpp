#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "lemmahead/config.hpp"
#include "lemmahead/corpus.hpp"
#include "lemmahead/embedding.hpp"
#include "lemmahead/errors.hpp"
#include "lemmahead/evaluation.hpp"
#include "lemmahead/http_clients.hpp"
#include "lemmahead/lean.hpp"
#include "lemmahead/mock_script.hpp"
#include "lemmahead/pipeline.hpp"
#include "lemmahead/problem.hpp"
#include "lemmahead/process.hpp"
#include "lemmahead/segmenter.hpp"
#include "lemmahead/store.hpp"
#include "lemmahead/transcribe.hpp"

namespace lemmahead::cli {

// Exit codes, stable for scripting:
//   0 success (prove: proof verified)
//   1 prove: proof did not verify
//   2 usage, configuration, missing input, or infrastructure failure
//   3 query: store is empty
inline constexpr int kExitOk = 0;
inline constexpr int kExitProofFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitEmptyStore = 3;

namespace fs = std::filesystem;

inline std::string make_run_id() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%d_%H%M%S", &tm);
    std::random_device rd;
    char suffix[8];
    std::snprintf(suffix, sizeof suffix, "_%04x", rd() & 0xffff);
    return std::string(buf) + suffix;
}

// Owns the live or scripted service clients for one command invocation.
struct Runtime {
    std::unique_ptr<TranscriptLog> log = std::make_unique<TranscriptLog>();
    std::unique_ptr<ChatClient> chat;
    std::unique_ptr<EmbedClient> embed;
    std::unique_ptr<Verifier> verifier;
    std::unique_ptr<LlmSession> session;
    std::unique_ptr<Embedder> embedder;
    bool mock = false;
};

inline Runtime build_runtime(const AppConfig& cfg, const std::string& run_id) {
    Runtime rt;
    if (!cfg.mock_script.empty()) {
        MockBundle bundle = load_mock_script(cfg.mock_script);
        rt.chat = std::move(bundle.chat);
        rt.embed = std::move(bundle.embed);
        rt.verifier = std::move(bundle.verifier);
        rt.mock = true;
    } else {
        if (!cfg.chat_url.empty())
            rt.chat = std::make_unique<HttpChatClient>(cfg.chat_url, cfg.api_key);
        if (!cfg.embed_url.empty())
            rt.embed = std::make_unique<HttpEmbedClient>(cfg.embed_url, cfg.embed_model,
                                                         cfg.api_key);
    }
    if (!rt.verifier)
        rt.verifier = std::make_unique<LeanToolchainVerifier>(
            LeanConfig{cfg.lean_cmd, cfg.lean_project_dir, cfg.verify_timeout_s, run_id});

    if (rt.chat) {
        RetryPolicy retry{cfg.max_retries, rt.mock ? 0 : cfg.backoff_ms};
        rt.session = std::make_unique<LlmSession>(*rt.chat, *rt.log, retry);
        rt.session->set_default_params({cfg.chat_model, cfg.temperature, cfg.max_tokens});
        if (rt.mock) rt.session->set_record_latency(false);
        const std::pair<const char*, const std::string*> overrides[] = {
            {"transcription", &cfg.transcription_prompt_path},
            {"segmentation", &cfg.segmentation_prompt_path},
            {"keywords", &cfg.keywords_prompt_path},
            {"informal_proof", &cfg.informal_proof_prompt_path},
            {"formalization", &cfg.formalization_prompt_path},
        };
        for (const auto& [id, path] : overrides)
            if (!path->empty()) rt.session->set_template(load_template(id, *path));
    }
    if (rt.embed) rt.embedder = std::make_unique<Embedder>(*rt.embed, cfg.max_chunk_chars);
    return rt;
}

inline PipelineConfig pipeline_config(const AppConfig& cfg) {
    PipelineConfig pc;
    pc.variant = variant_from_string(cfg.variant);
    pc.retrieval_k = cfg.retrieval_k;
    pc.sigma = cfg.sigma;
    pc.include_verifier_feedback = cfg.include_verifier_feedback;
    pc.early_exit = cfg.early_exit;
    pc.eqg_multi_query = cfg.eqg_multi_query;
    return pc;
}

namespace detail {

inline std::string doc_id_from_path(const fs::path& p) {
    std::string stem = p.stem().string();
    return stem.empty() ? "document" : stem;
}

struct IngestStats {
    size_t documents = 0;
    size_t chunks = 0;
    size_t dimension = 0;
    std::vector<IngestReport> reports;
};

inline std::vector<LatexDocument> collect_documents(const AppConfig& cfg, Runtime& rt,
                                                    const std::string& input,
                                                    IngestStats& stats) {
    std::vector<LatexDocument> docs;
    fs::path in(input);
    auto transcribe_dir = [&](const std::string& dir) {
        if (!rt.session)
            throw ConfigError("page-image ingestion needs a chat client "
                              "(configure chat_url or --mock-script)");
        auto grouped = load_page_images(dir);
        if (grouped.empty())
            throw ValidationError("no '<doc_id>_p<page>.png' files in " + dir);
        for (auto& [doc_id, pages] : grouped) {
            IngestReport report;
            docs.push_back(transcribe_pages(pages, *rt.session, &report));
            stats.reports.push_back(std::move(report));
        }
    };

    if (fs::is_directory(in)) {
        transcribe_dir(input);
    } else if (in.extension() == ".tex") {
        docs.push_back({doc_id_from_path(in), read_file(input), DocOrigin::native});
    } else if (in.extension() == ".pdf") {
        if (cfg.rasterizer_cmd.empty())
            throw ConfigError("PDF input needs rasterizer_cmd in the config");
        fs::path outdir = fs::temp_directory_path() /
                          ("lemmahead_pages_" + doc_id_from_path(in));
        fs::create_directories(outdir);
        std::string cmd = cfg.rasterizer_cmd;
        auto substitute = [&](const std::string& key, const std::string& value) {
            size_t pos;
            while ((pos = cmd.find(key)) != std::string::npos)
                cmd.replace(pos, key.size(), value);
        };
        substitute("{input}", input);
        substitute("{outdir}", outdir.string());
        if (cmd == cfg.rasterizer_cmd) cmd += " " + input + " " + outdir.string();
        ProcessResult res = run_process(cmd, 600.0);
        if (res.exit_code != 0)
            throw ProcessError("rasterizer failed (exit " + std::to_string(res.exit_code) +
                               "): " + res.err.substr(0, 400));
        transcribe_dir(outdir.string());
    } else {
        throw ValidationError("unsupported input type (expected .tex, .pdf or a directory): " +
                              input);
    }
    stats.documents = docs.size();
    return docs;
}

inline std::vector<Chunk> segment_document(const AppConfig& cfg, Runtime& rt,
                                           const LatexDocument& doc, bool use_llm) {
    SegmentOptions opts{cfg.min_chunk_chars, cfg.max_chunk_chars};
    if (use_llm) {
        if (!rt.session)
            throw ConfigError("--segmenter llm needs a chat client or --mock-script");
        SegmentProposalFn propose = [&](const std::string& latex) {
            return rt.session->complete("segmentation", {{"document", latex}});
        };
        return segment_latex(doc, propose, opts);
    }
    return segment_rule_based(doc, opts);
}

inline int print_error(std::ostream& err, const std::string& stage, const std::string& what,
                       int code = kExitUsage) {
    err << "error [" << stage << "]: " << what << "\n";
    return code;
}

}  // namespace detail

inline int cmd_ingest(AppConfig& cfg, const std::string& input, bool force,
                      const std::string& segmenter, std::ostream& out, std::ostream& err) {
    if (!fs::exists(input))
        return detail::print_error(err, "ingest", "input path not found: " + input);
    if (fs::exists(cfg.store_path) && !force)
        return detail::print_error(err, "ingest",
                                   "store already exists: " + cfg.store_path +
                                       " (pass --force to overwrite)");
    try {
        Runtime rt = build_runtime(cfg, make_run_id());
        if (!rt.embedder)
            throw ConfigError("ingestion needs an embedding client "
                              "(configure embed_url or --mock-script)");
        detail::IngestStats stats;
        auto docs = detail::collect_documents(cfg, rt, input, stats);

        KnowledgeBase kb;
        for (const auto& doc : docs) {
            for (auto& chunk : detail::segment_document(cfg, rt, doc, segmenter == "llm")) {
                EmbeddingVector v = rt.embedder->embed_text(chunk.latex);
                kb.insert({std::move(chunk), std::move(v)});
            }
        }
        stats.chunks = kb.size();
        stats.dimension = kb.dimension();
        kb.save(cfg.store_path);

        out << "ingested " << stats.documents << " document(s): " << stats.chunks
            << " chunks (dimension " << stats.dimension << ") -> " << cfg.store_path << "\n";
        for (const auto& r : stats.reports) {
            if (r.flagged_pages.empty()) continue;
            out << "flagged pages in " << r.document_id << ":";
            for (int p : r.flagged_pages) out << " " << p;
            out << "\n";
        }
        return kExitOk;
    } catch (const Error& e) {
        return detail::print_error(err, "ingest", e.what());
    }
}

inline int cmd_query(AppConfig& cfg, const std::string& query, size_t k, std::ostream& out,
                     std::ostream& err) {
    try {
        if (!fs::exists(cfg.store_path))
            return detail::print_error(err, "query", "store not found: " + cfg.store_path);
        KnowledgeBase kb = KnowledgeBase::load(cfg.store_path);
        if (kb.empty()) {
            err << "store is empty: " << cfg.store_path << "\n";
            return kExitEmptyStore;
        }
        Runtime rt = build_runtime(cfg, make_run_id());
        if (!rt.embedder)
            throw ConfigError("querying needs an embedding client "
                              "(configure embed_url or --mock-script)");
        rt.embedder->expect_dimension(kb.dimension());
        auto results = kb.top_k(rt.embedder->embed_text(query), k);
        char score[16];
        for (size_t i = 0; i < results.size(); ++i) {
            std::snprintf(score, sizeof score, "%.4f", results[i].score);
            out << (i + 1) << ". " << results[i].chunk.chunk_id << "  score=" << score << "  ["
                << to_string(results[i].chunk.kind) << "]";
            if (!results[i].chunk.title.empty()) out << " " << results[i].chunk.title;
            out << "\n";
        }
        return kExitOk;
    } catch (const Error& e) {
        return detail::print_error(err, "query", e.what());
    }
}

struct ProveArgs {
    std::string problem_name;
    std::string dataset;
    std::string statement;
    std::string formal;
    std::string adhoc_name = "adhoc";
    bool no_rag = false;
    std::string run_id;
};

inline int cmd_prove(AppConfig& cfg, const ProveArgs& args, std::ostream& out,
                     std::ostream& err) {
    try {
        Problem problem;
        if (!args.problem_name.empty()) {
            if (args.dataset.empty())
                throw ConfigError("--problem needs --dataset to look the name up in");
            auto problems = load_problems(args.dataset);
            auto it = std::find_if(problems.begin(), problems.end(),
                                   [&](const Problem& p) { return p.name == args.problem_name; });
            if (it == problems.end())
                throw DatasetError("problem not found in dataset: " + args.problem_name);
            problem = *it;
        } else if (!args.statement.empty()) {
            problem.name = args.adhoc_name;
            problem.informal_statement = args.statement;
            problem.formal_statement = args.formal;
        } else {
            throw ConfigError("pass --problem <name> --dataset <file> or --statement <text>");
        }

        std::string run_id = args.run_id.empty() ? make_run_id() : args.run_id;
        Runtime rt = build_runtime(cfg, run_id);
        if (!rt.session)
            throw ConfigError("proving needs a chat client (configure chat_url or "
                              "--mock-script)");

        PipelineConfig pc = pipeline_config(cfg);
        pc.use_rag = !args.no_rag;

        KnowledgeBase kb;
        PipelineEnv env;
        env.session = rt.session.get();
        env.verifier = rt.verifier.get();
        env.run_id = run_id;
        if (pc.use_rag) {
            if (!fs::exists(cfg.store_path))
                throw ConfigError("store not found: " + cfg.store_path +
                                  " (build one with `lemmahead ingest` or pass --no-rag)");
            kb = KnowledgeBase::load(cfg.store_path);
            if (!rt.embedder)
                throw ConfigError("retrieval needs an embedding client "
                                  "(configure embed_url or --mock-script)");
            rt.embedder->expect_dimension(kb.dimension());
            env.store = &kb;
            env.embedder = rt.embedder.get();
        }

        fs::path run_dir = fs::path(cfg.runs_dir) / run_id;
        fs::create_directories(run_dir);
        rt.log->open_sink((run_dir / "transcript.jsonl").string());

        ProofAttempt attempt = run_pipeline(problem, pc, env);
        fs::path trace_path = run_dir / (problem.name + ".json");
        write_file(trace_path.string(), attempt.to_json().dump(2) + "\n");

        out << "problem: " << problem.name << "\n";
        out << "variant: " << to_string(pc.variant) << "\n";
        out << "iterations: " << attempt.iterations.size() << "\n";
        out << "verdict: " << to_string(attempt.final_verdict.status) << "\n";
        out << "trace: " << trace_path.string() << "\n";
        return attempt.final_verdict.status == VerdictStatus::verified ? kExitOk
                                                                       : kExitProofFailed;
    } catch (const Error& e) {
        return detail::print_error(err, "prove", e.what());
    }
}

struct EvalArgs {
    std::string dataset;
    std::string split = "all";
    bool resume = false;
    bool no_rag = false;
    std::string run_id;
};

inline int cmd_eval(AppConfig& cfg, const EvalArgs& args, std::ostream& out, std::ostream& err) {
    try {
        std::optional<Split> filter;
        if (args.split == "validation" || args.split == "valid") filter = Split::validation;
        else if (args.split == "test") filter = Split::test;
        else if (args.split != "all") throw ConfigError("unknown split: " + args.split);

        auto problems = load_problems(args.dataset, filter);
        if (problems.empty()) throw DatasetError("no problems matched split " + args.split);

        std::string run_id = args.run_id.empty() ? make_run_id() : args.run_id;
        Runtime rt = build_runtime(cfg, run_id);
        if (!rt.session)
            throw ConfigError("evaluation needs a chat client (configure chat_url or "
                              "--mock-script)");

        PipelineConfig pc = pipeline_config(cfg);
        pc.use_rag = !args.no_rag;

        KnowledgeBase kb;
        PipelineEnv env;
        env.session = rt.session.get();
        env.verifier = rt.verifier.get();
        env.run_id = run_id;
        if (pc.use_rag && fs::exists(cfg.store_path)) {
            kb = KnowledgeBase::load(cfg.store_path);
            if (rt.embedder && !kb.empty()) {
                rt.embedder->expect_dimension(kb.dimension());
                env.store = &kb;
                env.embedder = rt.embedder.get();
            }
        }

        fs::path run_dir = fs::path(cfg.runs_dir) / run_id;
        fs::create_directories(run_dir);
        rt.log->open_sink((run_dir / "transcript.jsonl").string());

        EvalOptions opts;
        opts.out_dir = run_dir.string();
        opts.resume = args.resume;
        // scripted mocks consume strictly in order, so they force one worker
        opts.parallelism = rt.mock ? 1 : cfg.parallelism;
        opts.progress = &out;

        EvalReport report = run_evaluation(problems, pc, env, opts);
        report.run_id = run_id;
        report.split = args.split;
        report.toolchain_version = rt.verifier->version_string();
        report.chat_model = rt.mock ? "scripted-mock" : cfg.chat_model;
        report.embed_model = rt.mock ? "mock-embedder" : cfg.embed_model;
        write_report_files(report, run_dir.string());

        out << "\n" << render_report_markdown(report);
        out << "\nreport: " << (run_dir / "report.json").string() << "\n";
        return kExitOk;
    } catch (const Error& e) {
        return detail::print_error(err, "eval", e.what());
    }
}

inline int cmd_report(const std::string& run_dir, std::ostream& out, std::ostream& err) {
    try {
        if (!fs::is_directory(run_dir))
            throw ValidationError("no such run directory: " + run_dir);
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(run_dir)) {
            if (entry.path().extension() != ".json") continue;
            if (entry.path().filename() == "report.json") continue;
            files.push_back(entry.path().string());
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) throw ValidationError("no attempt files under " + run_dir);

        EvalReport report;
        report.run_id = fs::path(run_dir).filename().string();
        report.split = "all";
        nlohmann::json first = nlohmann::json::parse(read_file(files.front()));
        report.variant = variant_from_string(first.value("variant", "basic"));
        report.total = files.size();
        for (const auto& f : files) {
            PerProblemResult r = lemmahead::detail::summarize_attempt_file(f);
            ++report.status_counts[to_string(r.status)];
            if (r.status == VerdictStatus::verified) ++report.verified_count;
            report.per_problem.push_back(std::move(r));
        }
        report.pass_at_1_rate = static_cast<double>(report.verified_count) /
                                static_cast<double>(report.total);

        // refresh the persisted pair if it exists, then print
        if (fs::exists(fs::path(run_dir) / "report.json")) {
            nlohmann::json old = nlohmann::json::parse(
                read_file((fs::path(run_dir) / "report.json").string()));
            report.split = old.value("split", report.split);
            if (old.contains("versions")) {
                report.toolchain_version = old["versions"].value("toolchain", "");
                report.chat_model = old["versions"].value("chat_model", "");
                report.embed_model = old["versions"].value("embed_model", "");
            }
            report.internal_verifier_feedback = old.value("internal_verifier_feedback", false);
        }
        write_report_files(report, run_dir);
        out << render_report_markdown(report);
        return kExitOk;
    } catch (const Error& e) {
        return detail::print_error(err, "report", e.what());
    } catch (const nlohmann::json::exception& e) {
        return detail::print_error(err, "report", e.what());
    }
}

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"LemmaHead: retrieval-augmented Lean proof generation"};
    app.require_subcommand(1);

    std::string config_path = "lemmahead.toml";
    std::string mock_script;
    std::string store_path;
    std::string runs_dir;
    int parallelism = 0;
    bool verbose = false;
    app.add_option("--config", config_path, "config file (TOML-style key = value)");
    app.add_option("--mock-script", mock_script, "scripted clients for offline runs");
    app.add_option("--store", store_path, "knowledge-base store path (*.lhkb)");
    app.add_option("--runs-dir", runs_dir, "directory for run outputs (default: runs)");
    app.add_option("--parallelism", parallelism, "worker count for batch evaluation");
    app.add_flag("--verbose", verbose, "print resolved configuration");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "build a knowledge-base store from a corpus");
    std::string ingest_input;
    bool ingest_force = false;
    std::string segmenter = "rules";
    ingest->add_option("input", ingest_input, "a .tex file, .pdf, or directory of page images")
        ->required();
    ingest->add_flag("--force", ingest_force, "overwrite an existing store");
    ingest->add_option("--segmenter", segmenter, "chunking strategy")
        ->check(CLI::IsMember({"rules", "llm"}));

    // query
    auto* query = app.add_subcommand("query", "run a top-k similarity query against a store");
    std::string query_text;
    size_t query_k = 0;
    query->add_option("text", query_text, "query text")->required();
    query->add_option("-k,--top-k", query_k, "results to return (default retrieval_k)");

    // prove
    auto* prove = app.add_subcommand("prove", "run one proof-generation pipeline");
    ProveArgs prove_args;
    std::string prove_variant;
    int prove_sigma = 0;
    prove->add_option("--problem", prove_args.problem_name, "problem name from --dataset");
    prove->add_option("--dataset", prove_args.dataset, "problem file (*.jsonl)");
    prove->add_option("--statement", prove_args.statement, "inline informal statement");
    prove->add_option("--formal", prove_args.formal, "inline Lean theorem header");
    prove->add_option("--name", prove_args.adhoc_name, "name for the inline problem");
    prove->add_option("--variant", prove_variant, "pipeline variant")
        ->check(CLI::IsMember({"basic", "eqg", "ipa"}));
    prove->add_option("--sigma", prove_sigma, "IPA iteration count");
    prove->add_flag("--no-rag", prove_args.no_rag, "control run without retrieval");
    prove->add_option("--run-id", prove_args.run_id, "run identifier (default: timestamp)");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a problem set and report Pass@1");
    EvalArgs eval_args;
    std::string eval_variant;
    int eval_sigma = 0;
    eval->add_option("--dataset", eval_args.dataset, "problem file (*.jsonl)")->required();
    eval->add_option("--split", eval_args.split, "validation | test | all")
        ->check(CLI::IsMember({"validation", "valid", "test", "all"}));
    eval->add_option("--variant", eval_variant, "pipeline variant")
        ->check(CLI::IsMember({"basic", "eqg", "ipa"}));
    eval->add_option("--sigma", eval_sigma, "IPA iteration count");
    eval->add_flag("--resume", eval_args.resume, "skip problems with persisted attempts");
    eval->add_flag("--no-rag", eval_args.no_rag, "control run without retrieval");
    eval->add_option("--run-id", eval_args.run_id, "run identifier (default: timestamp)");

    // report
    auto* report = app.add_subcommand("report", "re-render the report for a finished run");
    std::string report_dir;
    report->add_option("--run", report_dir, "run directory (runs/<run_id>)")->required();

    std::vector<const char*> argv;
    argv.push_back("lemmahead");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    AppConfig cfg;
    try {
        if (fs::exists(config_path)) cfg.apply_file(config_path);
        else if (app.count("--config") > 0)
            throw ConfigError("config file not found: " + config_path);
        cfg.apply_env();
        if (app.count("--mock-script")) cfg.mock_script = mock_script;
        if (app.count("--store")) cfg.store_path = store_path;
        if (app.count("--runs-dir")) cfg.runs_dir = runs_dir;
        if (app.count("--parallelism")) cfg.parallelism = parallelism;
        if (prove->count("--variant")) cfg.variant = prove_variant;
        if (prove->count("--sigma")) cfg.sigma = prove_sigma;
        if (eval->count("--variant")) cfg.variant = eval_variant;
        if (eval->count("--sigma")) cfg.sigma = eval_sigma;
    } catch (const Error& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    }
    if (verbose) err << cfg.describe();

    if (ingest->parsed()) return cmd_ingest(cfg, ingest_input, ingest_force, segmenter, out, err);
    if (query->parsed())
        return cmd_query(cfg, query_text, query_k ? query_k : cfg.retrieval_k, out, err);
    if (prove->parsed()) return cmd_prove(cfg, prove_args, out, err);
    if (eval->parsed()) return cmd_eval(cfg, eval_args, out, err);
    if (report->parsed()) return cmd_report(report_dir, out, err);
    err << "no command given\n";
    return kExitUsage;
}

}  // namespace lemmahead::cli
