#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "convgqr/common.hpp"
#include "convgqr/corpus.hpp"
#include "convgqr/dense.hpp"
#include "convgqr/session.hpp"
#include "convgqr/sparse.hpp"
#include "convgqr/tokenize.hpp"
#include "convgqr/toygen.hpp"

namespace convgqr {

struct ReformulatedQuery {
    std::string query_id;
    std::string rewrite;    // non-empty; falls back to the raw current query
    std::string expansion;  // may be empty
    bool rewrite_fallback = false;  // rewriter emitted nothing
};

enum class QueryForm { rewrite_only, answer_only, concatenation };

/// Runs both generative models on the shared Eq-style input sequence built
/// once from the session prefix. An empty rewrite falls back to the raw
/// current query, flagged so evaluation can count occurrences.
inline ReformulatedQuery reformulate(const ToyModelParams& rewriter_params,
                                     const ToyModelConfig& rewriter_config,
                                     const ToyModelParams& expander_params,
                                     const ToyModelConfig& expander_config,
                                     const FormatConfig& format_config, const Session& session,
                                     std::size_t current_turn_index) {
    FormattedSession s = format_session(session, current_turn_index, format_config);
    const Turn& turn = session.turns[current_turn_index - 1];

    ReformulatedQuery rq;
    rq.query_id = query_id_of(session.session_id, turn.turn_id);
    rq.rewrite = join_tokens(generate(rewriter_params, rewriter_config, s.tokens));
    rq.expansion = join_tokens(generate(expander_params, expander_config, s.tokens));
    if (rq.rewrite.empty()) {
        rq.rewrite = detail::trim(turn.query);
        rq.rewrite_fallback = true;
    }
    return rq;
}

/// Text submitted to the retriever for the chosen query form. answer_only
/// falls back to the rewrite when the expansion is empty.
inline std::string render(const ReformulatedQuery& rq, QueryForm form) {
    switch (form) {
        case QueryForm::rewrite_only:
            return rq.rewrite;
        case QueryForm::answer_only:
            return rq.expansion.empty() ? rq.rewrite : rq.expansion;
        case QueryForm::concatenation:
            return rq.expansion.empty() ? rq.rewrite : rq.rewrite + " " + rq.expansion;
    }
    throw data_error("render: unknown query form");
}

inline const char* query_form_name(QueryForm form) {
    switch (form) {
        case QueryForm::rewrite_only: return "rewrite_only";
        case QueryForm::answer_only: return "answer_only";
        case QueryForm::concatenation: return "concatenation";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Retrieval driver
// ---------------------------------------------------------------------------

/// Uniform front end over the sparse and dense backends. Dense queries are
/// embedded with the same frozen encoder as the passage side.
class Retriever {
public:
    static Retriever sparse(InvertedIndex index, Bm25Params params) {
        Retriever r;
        r.index_ = std::move(index);
        r.bm25_ = params;
        r.is_sparse_ = true;
        return r;
    }

    static Retriever dense(FrozenEncoder encoder, EmbeddingMatrix matrix) {
        if (encoder.config().dim != matrix.dim)
            throw data_error("retriever: encoder dim does not match embedding matrix dim");
        Retriever r;
        r.encoder_.emplace(std::move(encoder));
        r.matrix_ = std::move(matrix);
        r.is_sparse_ = false;
        return r;
    }

    bool is_sparse() const { return is_sparse_; }

    std::vector<ScoredDoc> search(const std::string& query_text, std::size_t k) const {
        if (is_sparse_) return search_sparse(index_, bm25_, tokenize(query_text), k);
        return search_dense(matrix_, encoder_->encode(query_text), k);
    }

private:
    Retriever() = default;

    bool is_sparse_ = true;
    InvertedIndex index_;
    Bm25Params bm25_;
    std::optional<FrozenEncoder> encoder_;
    EmbeddingMatrix matrix_;
};

/// Retrieves depth-k results for every query. Backend errors are rethrown
/// with the query_id attached.
inline Run run_retrieval(const std::vector<std::pair<std::string, std::string>>& queries,
                         const Retriever& retriever, std::size_t k,
                         const std::string& tag = "convgqr") {
    if (k < 1) throw data_error("run_retrieval: k must be >= 1");
    Run run;
    run.tag = tag;
    for (const auto& [query_id, text] : queries) {
        if (run.results.count(query_id))
            throw data_error("run_retrieval: duplicate query_id '" + query_id + "'");
        try {
            run.results[query_id] = retriever.search(text, k);
        } catch (const std::exception& e) {
            throw data_error("run_retrieval: query '" + query_id + "': " + e.what());
        }
    }
    return run;
}

// ---------------------------------------------------------------------------
// Reformulated-query interchange format: <query_id>\t<rewrite>\t<expansion>
// ---------------------------------------------------------------------------

namespace detail {

inline std::string sanitize_field(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    return out;
}

}  // namespace detail

inline std::string write_reformulated(const std::vector<ReformulatedQuery>& queries) {
    std::string out;
    for (const auto& rq : queries) {
        out += detail::sanitize_field(rq.query_id) + "\t" + detail::sanitize_field(rq.rewrite) +
               "\t" + detail::sanitize_field(rq.expansion) + "\n";
    }
    return out;
}

inline std::vector<ReformulatedQuery> parse_reformulated(std::string_view bytes) {
    std::vector<ReformulatedQuery> queries;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        auto nl = bytes.find('\n', pos);
        std::string_view line = bytes.substr(pos, nl == std::string_view::npos ? bytes.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? bytes.size() : nl + 1;
        ++line_no;
        if (line.empty()) continue;
        auto t1 = line.find('\t');
        auto t2 = t1 == std::string_view::npos ? std::string_view::npos : line.find('\t', t1 + 1);
        if (t1 == std::string_view::npos || t2 == std::string_view::npos)
            throw data_error("queries line " + std::to_string(line_no) + ": expected 3 tab-separated fields");
        ReformulatedQuery rq;
        rq.query_id = std::string(line.substr(0, t1));
        rq.rewrite = std::string(line.substr(t1 + 1, t2 - t1 - 1));
        rq.expansion = std::string(line.substr(t2 + 1));
        if (rq.query_id.empty())
            throw data_error("queries line " + std::to_string(line_no) + ": empty query_id");
        if (rq.rewrite.empty())
            throw data_error("queries line " + std::to_string(line_no) + ": empty rewrite");
        if (!seen.insert(rq.query_id).second)
            throw data_error("queries line " + std::to_string(line_no) + ": duplicate query_id '" +
                             rq.query_id + "'");
        queries.push_back(std::move(rq));
    }
    return queries;
}

}  // namespace convgqr
