#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "lemmahead/errors.hpp"
#include "lemmahead/text.hpp"

namespace lemmahead {

using EmbeddingVector = std::vector<double>;

inline void check_finite(const EmbeddingVector& v) {
    for (double x : v)
        if (!std::isfinite(x)) throw StoreError("embedding component not finite");
}

// Unit-normalizes and quantizes to the store's decimal precision, so a vector
// survives the save/load cycle bit-exactly.
inline EmbeddingVector normalize_embedding(const EmbeddingVector& raw) {
    if (raw.empty()) throw StoreError("embedding is empty");
    check_finite(raw);
    double norm_sq = 0.0;
    for (double x : raw) norm_sq += x * x;
    if (norm_sq == 0.0) throw StoreError("cannot normalize a zero embedding vector");
    double inv = 1.0 / std::sqrt(norm_sq);
    EmbeddingVector out(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) out[i] = quantize9(raw[i] * inv);
    return out;
}

inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size()) throw DimensionMismatchError(a.size(), b.size());
    double dot = 0.0;
    for (size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return dot;
}

// Embedding-service client: one float array per input text.
class EmbedClient {
public:
    virtual ~EmbedClient() = default;
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
};

// Plays back pre-recorded vectors in call order.
class ScriptedEmbedClient : public EmbedClient {
public:
    explicit ScriptedEmbedClient(std::vector<EmbeddingVector> script)
        : script_(std::move(script)) {}

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        std::lock_guard lock(mu_);
        std::vector<EmbeddingVector> out;
        for (size_t i = 0; i < texts.size(); ++i) {
            if (next_ >= script_.size()) throw ScriptExhaustedError(next_);
            out.push_back(script_[next_++]);
        }
        return out;
    }

private:
    std::vector<EmbeddingVector> script_;
    size_t next_ = 0;
    std::mutex mu_;
};

// Deterministic text-keyed pseudo-embeddings; lets every command run offline.
// Components come from a splitmix-style stream seeded by the text hash, so
// the same text maps to the same vector on every platform.
class HashEmbedClient : public EmbedClient {
public:
    explicit HashEmbedClient(size_t dim = 64) : dim_(dim) {}

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) {
            uint64_t state = fnv1a64(t);
            EmbeddingVector v(dim_);
            for (size_t i = 0; i < dim_; ++i) v[i] = next_unit(state) - 0.5;
            out.push_back(std::move(v));
        }
        return out;
    }

    size_t dimension() const { return dim_; }

private:
    static double next_unit(uint64_t& state) {
        state += 0x9e3779b97f4a7c15ull;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        z = z ^ (z >> 31);
        return static_cast<double>(z >> 11) * 0x1.0p-53;
    }

    size_t dim_;
};

// Front door for turning text into store-ready vectors: renormalizes client
// output and pins the dimension on first use.
class Embedder {
public:
    explicit Embedder(EmbedClient& client, size_t max_text_chars = 4000)
        : client_(client), max_text_chars_(max_text_chars) {}

    EmbeddingVector embed_text(const std::string& text) {
        if (text.empty()) throw ValidationError("cannot embed empty text");
        if (max_text_chars_ > 0 && text.size() > max_text_chars_)
            throw ValidationError("text exceeds embedding limit of " +
                                  std::to_string(max_text_chars_) + " chars");
        auto vecs = client_.embed({text});
        if (vecs.size() != 1) throw GatewayError("embedding client returned wrong batch size");
        EmbeddingVector v = normalize_embedding(vecs[0]);
        {
            std::lock_guard lock(mu_);
            ++call_count_;
            if (!dim_) dim_ = v.size();
            else if (*dim_ != v.size()) throw DimensionMismatchError(*dim_, v.size());
        }
        return v;
    }

    std::optional<size_t> dimension() const {
        std::lock_guard lock(mu_);
        return dim_;
    }

    // Pre-pins the dimension (e.g. from a loaded store).
    void expect_dimension(size_t d) {
        std::lock_guard lock(mu_);
        if (d == 0) return;
        if (dim_ && *dim_ != d) throw DimensionMismatchError(*dim_, d);
        dim_ = d;
    }

    size_t call_count() const {
        std::lock_guard lock(mu_);
        return call_count_;
    }

private:
    EmbedClient& client_;
    size_t max_text_chars_;
    std::optional<size_t> dim_;
    size_t call_count_ = 0;
    mutable std::mutex mu_;
};

}  // namespace lemmahead
