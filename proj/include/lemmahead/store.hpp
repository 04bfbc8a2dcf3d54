#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "lemmahead/corpus.hpp"
#include "lemmahead/embedding.hpp"
#include "lemmahead/errors.hpp"
#include "lemmahead/text.hpp"

namespace lemmahead {

struct StoreRecord {
    Chunk chunk;
    EmbeddingVector embedding;
};

struct ScoredChunk {
    Chunk chunk;
    double score = 0.0;
};

// Embedded vector store: exact brute-force cosine retrieval over unit
// vectors, persisted as JSON Lines (*.lhkb). Single writer while building,
// any number of readers once frozen.
class KnowledgeBase {
public:
    static constexpr int kFormatVersion = 1;

    size_t size() const { return records_.size(); }
    size_t dimension() const { return dim_; }
    bool empty() const { return records_.empty(); }

    void insert(StoreRecord record) {
        record.chunk.check();
        if (record.embedding.empty()) throw StoreError("record embedding empty");
        check_finite(record.embedding);
        if (dim_ == 0) {
            dim_ = record.embedding.size();
        } else if (record.embedding.size() != dim_) {
            throw DimensionMismatchError(dim_, record.embedding.size());
        }
        auto [it, fresh] = index_.emplace(record.chunk.chunk_id, records_.size());
        if (!fresh) throw DuplicateChunkError(record.chunk.chunk_id);
        records_.push_back(std::move(record));
    }

    const StoreRecord* find(const std::string& chunk_id) const {
        auto it = index_.find(chunk_id);
        return it == index_.end() ? nullptr : &records_[it->second];
    }

    const std::vector<StoreRecord>& records() const { return records_; }

    // Top-k by cosine score, ties broken by ascending chunk_id. Returns
    // min(k, size) results.
    std::vector<ScoredChunk> top_k(const EmbeddingVector& query, size_t k) const {
        if (records_.empty()) throw EmptyStoreError();
        if (k == 0) throw ValidationError("k must be >= 1");
        std::vector<std::pair<double, size_t>> scored;
        scored.reserve(records_.size());
        for (size_t i = 0; i < records_.size(); ++i)
            scored.emplace_back(cosine_similarity(query, records_[i].embedding), i);
        auto better = [this](const std::pair<double, size_t>& a,
                             const std::pair<double, size_t>& b) {
            if (a.first != b.first) return a.first > b.first;
            return records_[a.second].chunk.chunk_id < records_[b.second].chunk.chunk_id;
        };
        size_t take = std::min(k, scored.size());
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                          scored.end(), better);
        std::vector<ScoredChunk> out;
        out.reserve(take);
        for (size_t i = 0; i < take; ++i)
            out.push_back({records_[scored[i].second].chunk, scored[i].first});
        return out;
    }

    void save(const std::string& path) const {
        std::vector<std::string> lines;
        lines.reserve(records_.size());
        std::string all;
        for (const auto& r : records_) {
            nlohmann::ordered_json j = to_json(r.chunk);
            j["embedding"] = r.embedding;
            lines.push_back(j.dump());
            all += lines.back();
            all += '\n';
        }
        nlohmann::ordered_json header{{"format", "lhkb"},
                                      {"version", kFormatVersion},
                                      {"dimension", dim_},
                                      {"count", records_.size()},
                                      {"checksum", fnv1a64_hex(all)}};
        std::ofstream out(path, std::ios::binary);
        if (!out) throw StoreError("cannot write store file: " + path);
        out << header.dump() << '\n';
        for (const auto& l : lines) out << l << '\n';
        if (!out) throw StoreError("write failed: " + path);
    }

    static KnowledgeBase load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw LoadError("cannot open store file: " + path);
        std::string line;
        if (!std::getline(in, line)) throw LoadError("store file empty: " + path);

        nlohmann::json header;
        try {
            header = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw RecordParseError(1, e.what());
        }
        if (header.value("format", "") != "lhkb")
            throw LoadError("not a lhkb store file: " + path);
        int version = header.value("version", -1);
        if (version != kFormatVersion) throw VersionMismatchError(kFormatVersion, version);
        size_t want_count = header.at("count").get<size_t>();
        size_t want_dim = header.at("dimension").get<size_t>();
        std::string want_sum = header.at("checksum").get<std::string>();

        KnowledgeBase kb;
        std::string all;
        size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            all += line;
            all += '\n';
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
                Chunk c = chunk_from_json(j);
                EmbeddingVector v = j.at("embedding").get<EmbeddingVector>();
                kb.insert({std::move(c), std::move(v)});
            } catch (const LoadError&) {
                throw;
            } catch (const std::exception& e) {
                throw RecordParseError(line_no, e.what());
            }
            if (kb.size() > want_count)
                throw LoadError("store has more records than header count");
        }
        if (kb.size() != want_count) throw TruncatedStoreError(want_count, kb.size());
        std::string got_sum = fnv1a64_hex(all);
        if (got_sum != want_sum) throw ChecksumError(want_sum, got_sum);
        if (want_count > 0 && kb.dim_ != want_dim)
            throw LoadError("header dimension " + std::to_string(want_dim) +
                            " does not match records (" + std::to_string(kb.dim_) + ")");
        if (want_count == 0) kb.dim_ = want_dim;
        return kb;
    }

private:
    std::vector<StoreRecord> records_;
    std::unordered_map<std::string, size_t> index_;
    size_t dim_ = 0;
};

}  // namespace lemmahead
