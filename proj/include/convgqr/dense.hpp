#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "convgqr/common.hpp"
#include "convgqr/corpus.hpp"
#include "convgqr/tokenize.hpp"

namespace convgqr {

struct FrozenEncoderConfig {
    std::uint32_t dim = 64;
    std::uint64_t seed = 0;
    std::uint32_t vocab_hash_buckets = 4096;
};

/// Training-free passage/query encoder: tokens are hashed into buckets and
/// the resulting count vector is projected with a fixed seeded sign matrix
/// scaled by 1/sqrt(dim). Holds the materialized sign table so repeated
/// encodes share one draw of the projection.
class FrozenEncoder {
public:
    explicit FrozenEncoder(const FrozenEncoderConfig& config) : config_(config) {
        if (config.dim == 0) throw data_error("frozen encoder: dim must be positive");
        if (config.vocab_hash_buckets == 0)
            throw data_error("frozen encoder: vocab_hash_buckets must be positive");
        if (config.dim > config.vocab_hash_buckets)
            throw data_error("frozen encoder: dim must not exceed vocab_hash_buckets");
        signs_.resize(static_cast<std::size_t>(config.vocab_hash_buckets) * config.dim);
        SplitRng rng(config.seed);
        for (auto& s : signs_) s = (rng.next_u64() >> 63) ? 1 : -1;
        inv_sqrt_dim_ = 1.0 / std::sqrt(static_cast<double>(config.dim));
    }

    const FrozenEncoderConfig& config() const { return config_; }

    /// Deterministic bag-of-words embedding. The bucket-count/sign inner
    /// products are accumulated in exact integer arithmetic before the
    /// single 1/sqrt(dim) scaling, so encode(t1+t2) for token-disjoint
    /// texts differs from encode(t1)+encode(t2) by at most one rounding
    /// of that final product (bit-equal whenever sqrt(dim) is a power of
    /// two, e.g. the default dim 64).
    std::vector<double> encode(std::string_view text) const {
        std::vector<std::int64_t> counts(config_.vocab_hash_buckets, 0);
        for (const auto& tok : tokenize(text))
            ++counts[fnv1a64(tok) % config_.vocab_hash_buckets];

        std::vector<std::int64_t> acc(config_.dim, 0);
        for (std::uint32_t b = 0; b < config_.vocab_hash_buckets; ++b) {
            if (counts[b] == 0) continue;
            const std::int8_t* row = signs_.data() + static_cast<std::size_t>(b) * config_.dim;
            for (std::uint32_t d = 0; d < config_.dim; ++d) acc[d] += counts[b] * row[d];
        }
        std::vector<double> out(config_.dim);
        for (std::uint32_t d = 0; d < config_.dim; ++d)
            out[d] = static_cast<double>(acc[d]) * inv_sqrt_dim_;
        return out;
    }

private:
    FrozenEncoderConfig config_;
    std::vector<std::int8_t> signs_;
    double inv_sqrt_dim_;
};

inline std::vector<double> frozen_encode(const FrozenEncoderConfig& config, std::string_view text) {
    return FrozenEncoder(config).encode(text);
}

/// Encodes a passage collection into an EmbeddingMatrix. Values are cast to
/// float32, matching the on-disk layout, so a matrix built in memory and one
/// round-tripped through a file are identical.
inline EmbeddingMatrix embed_passages(const FrozenEncoder& encoder,
                                      const std::vector<Passage>& passages) {
    EmbeddingMatrix m;
    m.dim = encoder.config().dim;
    m.ids.reserve(passages.size());
    m.vectors.reserve(passages.size() * m.dim);
    for (const auto& p : passages) {
        m.ids.push_back(p.passage_id);
        for (double v : encoder.encode(p.text)) m.vectors.push_back(static_cast<float>(v));
    }
    return m;
}

/// Exact top-k inner-product search. Ties are broken by ascending
/// passage_id; all rows participate regardless of score sign.
inline std::vector<ScoredDoc> search_dense(const EmbeddingMatrix& matrix,
                                           const std::vector<double>& query_vector,
                                           std::size_t k) {
    if (k < 1) throw data_error("search_dense: k must be >= 1");
    if (query_vector.size() != matrix.dim)
        throw data_error("search_dense: query dim " + std::to_string(query_vector.size()) +
                         " does not match matrix dim " + std::to_string(matrix.dim));

    std::vector<ScoredDoc> hits;
    hits.reserve(matrix.rows());
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        const float* row = matrix.row(r);
        double dot = 0.0;
        for (std::uint32_t d = 0; d < matrix.dim; ++d)
            dot += static_cast<double>(row[d]) * query_vector[d];
        hits.push_back({matrix.ids[r], dot});
    }
    std::sort(hits.begin(), hits.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.passage_id < b.passage_id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

}  // namespace convgqr
