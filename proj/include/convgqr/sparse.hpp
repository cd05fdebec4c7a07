#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "convgqr/common.hpp"
#include "convgqr/corpus.hpp"
#include "convgqr/tokenize.hpp"

namespace convgqr {

struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;
};

struct Posting {
    std::uint32_t doc_ordinal;
    std::uint32_t term_frequency;

    bool operator==(const Posting&) const = default;
};

/// Inverted index over a passage collection. Postings lists are sorted by
/// doc ordinal; term iteration order is lexicographic (std::map), which the
/// on-disk layout relies on.
struct InvertedIndex {
    std::map<std::string, std::vector<Posting>> postings;
    std::vector<std::uint32_t> doc_lengths;
    std::vector<std::string> doc_ids;  // ordinal -> passage_id
    double avg_doc_length = 0.0;

    std::size_t doc_count() const { return doc_ids.size(); }

    bool operator==(const InvertedIndex& other) const {
        return postings == other.postings && doc_lengths == other.doc_lengths &&
               doc_ids == other.doc_ids && avg_doc_length == other.avg_doc_length;
    }
};

/// Tokenizes every passage with the shared tokenizer and builds the index.
/// Document ordinals follow input order.
inline InvertedIndex build_index(const std::vector<Passage>& passages) {
    InvertedIndex index;
    std::set<std::string> seen;
    for (const auto& p : passages) {
        if (!seen.insert(p.passage_id).second)
            throw data_error("build_index: duplicate passage_id '" + p.passage_id + "'");
        auto ordinal = static_cast<std::uint32_t>(index.doc_ids.size());
        std::vector<std::string> tokens = tokenize(p.text);
        std::map<std::string, std::uint32_t> tf;
        for (const auto& t : tokens) ++tf[t];
        for (const auto& [term, freq] : tf) index.postings[term].push_back({ordinal, freq});
        index.doc_lengths.push_back(static_cast<std::uint32_t>(tokens.size()));
        index.doc_ids.push_back(p.passage_id);
    }
    if (!index.doc_lengths.empty()) {
        double sum = 0.0;
        for (auto len : index.doc_lengths) sum += len;
        index.avg_doc_length = sum / static_cast<double>(index.doc_lengths.size());
    }
    return index;
}

namespace detail {

/// Non-negative idf: ln(1 + (N - df + 0.5) / (df + 0.5)).
inline double bm25_idf(std::size_t n_docs, std::size_t df) {
    double n = static_cast<double>(n_docs);
    double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

inline double bm25_term_weight(const Bm25Params& params, double idf, double tf, double dl,
                               double avgdl) {
    double norm = params.k1 * (1.0 - params.b + params.b * dl / avgdl);
    return idf * tf * (params.k1 + 1.0) / (tf + norm);
}

/// Distinct query terms in ascending order. Both the per-document scorer
/// and the searcher walk terms in this exact order so their floating-point
/// sums are bitwise identical.
inline std::vector<std::string> distinct_terms(const std::vector<std::string>& query_tokens) {
    std::vector<std::string> terms(query_tokens);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    return terms;
}

}  // namespace detail

/// BM25 score of one document for the given query tokens. Repeated query
/// terms are scored once (distinct-term semantics). Terms absent from the
/// document contribute zero.
inline double bm25_score(const InvertedIndex& index, const Bm25Params& params,
                         const std::vector<std::string>& query_tokens,
                         std::uint32_t doc_ordinal) {
    double score = 0.0;
    for (const auto& term : detail::distinct_terms(query_tokens)) {
        auto it = index.postings.find(term);
        if (it == index.postings.end()) continue;
        const auto& list = it->second;
        auto p = std::lower_bound(list.begin(), list.end(), doc_ordinal,
                                  [](const Posting& a, std::uint32_t d) { return a.doc_ordinal < d; });
        if (p == list.end() || p->doc_ordinal != doc_ordinal) continue;
        double idf = detail::bm25_idf(index.doc_count(), list.size());
        score += detail::bm25_term_weight(params, idf, p->term_frequency,
                                          index.doc_lengths[doc_ordinal], index.avg_doc_length);
    }
    return score;
}

/// Top-k BM25 search. Only documents with positive score are returned;
/// ties are broken by ascending passage_id.
inline std::vector<ScoredDoc> search_sparse(const InvertedIndex& index, const Bm25Params& params,
                                            const std::vector<std::string>& query_tokens,
                                            std::size_t k) {
    if (k < 1) throw data_error("search_sparse: k must be >= 1");
    std::vector<double> scores(index.doc_count(), 0.0);
    std::vector<bool> touched(index.doc_count(), false);
    for (const auto& term : detail::distinct_terms(query_tokens)) {
        auto it = index.postings.find(term);
        if (it == index.postings.end()) continue;
        double idf = detail::bm25_idf(index.doc_count(), it->second.size());
        for (const Posting& p : it->second) {
            scores[p.doc_ordinal] += detail::bm25_term_weight(
                params, idf, p.term_frequency, index.doc_lengths[p.doc_ordinal],
                index.avg_doc_length);
            touched[p.doc_ordinal] = true;
        }
    }

    std::vector<ScoredDoc> hits;
    for (std::size_t d = 0; d < scores.size(); ++d)
        if (touched[d] && scores[d] > 0.0) hits.push_back({index.doc_ids[d], scores[d]});
    std::sort(hits.begin(), hits.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.passage_id < b.passage_id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

// ---------------------------------------------------------------------------
// Persistence: "CGQRIDX1" | u64 N | per doc (u32 len, id) | u64 term count |
// per term in lexicographic order (id, u64 postings, (u32 ordinal, u32 tf)*)
// ---------------------------------------------------------------------------

inline constexpr char kIndexMagic[9] = "CGQRIDX1";

inline std::string write_index(const InvertedIndex& index) {
    std::string out;
    out.append(kIndexMagic, 8);
    io::put_u64(out, index.doc_count());
    for (std::size_t d = 0; d < index.doc_count(); ++d) {
        io::put_u32(out, index.doc_lengths[d]);
        io::put_u32(out, static_cast<std::uint32_t>(index.doc_ids[d].size()));
        out += index.doc_ids[d];
    }
    io::put_u64(out, index.postings.size());
    for (const auto& [term, list] : index.postings) {
        io::put_u32(out, static_cast<std::uint32_t>(term.size()));
        out += term;
        io::put_u64(out, list.size());
        for (const Posting& p : list) {
            io::put_u32(out, p.doc_ordinal);
            io::put_u32(out, p.term_frequency);
        }
    }
    return out;
}

inline InvertedIndex read_index(std::string_view bytes) {
    io::Reader r(bytes, "index");
    if (r.get_bytes(8) != std::string(kIndexMagic, 8))
        throw data_error("index: magic mismatch");
    InvertedIndex index;
    std::uint64_t n_docs = r.get_u64();
    index.doc_lengths.reserve(n_docs);
    index.doc_ids.reserve(n_docs);
    for (std::uint64_t d = 0; d < n_docs; ++d) {
        index.doc_lengths.push_back(r.get_u32());
        std::uint32_t id_len = r.get_u32();
        index.doc_ids.push_back(r.get_bytes(id_len));
    }
    std::uint64_t n_terms = r.get_u64();
    std::string prev_term;
    for (std::uint64_t t = 0; t < n_terms; ++t) {
        std::uint32_t term_len = r.get_u32();
        std::string term = r.get_bytes(term_len);
        if (t > 0 && term <= prev_term)
            throw data_error("index: terms not in lexicographic order");
        prev_term = term;
        std::uint64_t n_postings = r.get_u64();
        std::vector<Posting> list;
        list.reserve(n_postings);
        for (std::uint64_t i = 0; i < n_postings; ++i) {
            std::uint32_t ordinal = r.get_u32();
            std::uint32_t tf = r.get_u32();
            if (ordinal >= n_docs)
                throw data_error("index: posting ordinal out of range");
            if (tf < 1) throw data_error("index: zero term frequency");
            if (!list.empty() && ordinal <= list.back().doc_ordinal)
                throw data_error("index: postings not sorted by ordinal");
            list.push_back({ordinal, tf});
        }
        index.postings.emplace(std::move(term), std::move(list));
    }
    if (!r.exhausted()) throw data_error("index: trailing bytes");
    if (!index.doc_lengths.empty()) {
        double sum = 0.0;
        for (auto len : index.doc_lengths) sum += len;
        index.avg_doc_length = sum / static_cast<double>(index.doc_lengths.size());
    }
    return index;
}

}  // namespace convgqr
