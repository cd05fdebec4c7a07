#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "convgqr/common.hpp"
#include "convgqr/tokenize.hpp"

namespace convgqr {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct Turn {
    std::string turn_id;
    std::string query;                       // current user query
    std::string answer;                      // system answer, may be empty
    std::optional<std::string> gold_rewrite; // human rewrite, training target
    std::optional<std::string> gold_answer;  // gold answer, training target
};

struct Session {
    std::string session_id;
    std::vector<Turn> turns;  // conversational order, index 0 = earliest
};

struct Passage {
    std::string passage_id;
    std::string text;
};

/// Graded relevance judgments. Absent (query, passage) pairs mean grade 0.
struct Qrels {
    std::map<std::string, std::map<std::string, int>> grades;
    std::size_t duplicate_warnings = 0;  // repeated pairs seen while parsing

    int grade(const std::string& qid, const std::string& pid) const {
        auto q = grades.find(qid);
        if (q == grades.end()) return 0;
        auto p = q->second.find(pid);
        return p == q->second.end() ? 0 : p->second;
    }
};

struct ScoredDoc {
    std::string passage_id;
    double score;

    bool operator==(const ScoredDoc&) const = default;
};

/// Ranked retrieval results per query. Scores non-increasing per query;
/// ties broken by ascending passage_id at construction time.
struct Run {
    std::map<std::string, std::vector<ScoredDoc>> results;
    std::string tag = "convgqr";
};

/// Dense passage vectors. Row-major float32 storage mirrors the on-disk
/// layout so that in-memory encoding and file round trips agree bit for bit.
struct EmbeddingMatrix {
    std::uint32_t dim = 0;
    std::vector<std::string> ids;
    std::vector<float> vectors;  // ids.size() * dim, row-major

    std::size_t rows() const { return ids.size(); }
    const float* row(std::size_t i) const { return vectors.data() + i * dim; }
};

// ---------------------------------------------------------------------------
// Sessions: one JSON record per line
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space_char(s[b])) ++b;
    while (e > b && is_space_char(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace detail

/// Parses line-delimited session records. Each line is a JSON object with
/// fields session_id and turns = [{turn_id, query, answer?, gold_rewrite?,
/// gold_answer?}]. Order is preserved; structural problems raise data_error
/// naming the offending line.
inline std::vector<Session> parse_sessions(std::string_view bytes) {
    std::vector<Session> sessions;
    std::set<std::string> seen_ids;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        auto nl = bytes.find('\n', pos);
        std::string_view line = bytes.substr(pos, nl == std::string_view::npos ? bytes.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? bytes.size() : nl + 1;
        ++line_no;
        if (detail::trim(line).empty()) continue;

        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw data_error("sessions line " + std::to_string(line_no) + ": malformed record");

        Session s;
        try {
            s.session_id = j.at("session_id").get<std::string>();
            for (const auto& jt : j.at("turns")) {
                Turn t;
                t.turn_id = jt.at("turn_id").get<std::string>();
                t.query = jt.at("query").get<std::string>();
                if (jt.contains("answer")) t.answer = jt["answer"].get<std::string>();
                if (jt.contains("gold_rewrite")) t.gold_rewrite = jt["gold_rewrite"].get<std::string>();
                if (jt.contains("gold_answer")) t.gold_answer = jt["gold_answer"].get<std::string>();
                s.turns.push_back(std::move(t));
            }
        } catch (const nlohmann::json::exception& e) {
            throw data_error("sessions line " + std::to_string(line_no) + ": " + e.what());
        }

        if (s.turns.empty())
            throw data_error("sessions line " + std::to_string(line_no) + ": session has no turns");
        std::set<std::string> turn_ids;
        for (const auto& t : s.turns) {
            if (detail::trim(t.query).empty())
                throw data_error("sessions line " + std::to_string(line_no) +
                                 ": empty query in turn '" + t.turn_id + "'");
            if (!turn_ids.insert(t.turn_id).second)
                throw data_error("sessions line " + std::to_string(line_no) +
                                 ": duplicate turn_id '" + t.turn_id + "'");
        }
        if (!seen_ids.insert(s.session_id).second)
            throw data_error("sessions line " + std::to_string(line_no) +
                             ": duplicate session_id '" + s.session_id + "'");
        sessions.push_back(std::move(s));
    }
    return sessions;
}

inline std::string write_sessions(const std::vector<Session>& sessions) {
    std::string out;
    for (const auto& s : sessions) {
        nlohmann::json j;
        j["session_id"] = s.session_id;
        j["turns"] = nlohmann::json::array();
        for (const auto& t : s.turns) {
            nlohmann::json jt;
            jt["turn_id"] = t.turn_id;
            jt["query"] = t.query;
            if (!t.answer.empty()) jt["answer"] = t.answer;
            if (t.gold_rewrite) jt["gold_rewrite"] = *t.gold_rewrite;
            if (t.gold_answer) jt["gold_answer"] = *t.gold_answer;
            j["turns"].push_back(std::move(jt));
        }
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

/// Query identifier used throughout the pipeline for a session turn.
inline std::string query_id_of(const std::string& session_id, const std::string& turn_id) {
    return session_id + "_" + turn_id;
}

// ---------------------------------------------------------------------------
// Passages: <passage_id>\t<text>\n
// ---------------------------------------------------------------------------

inline std::vector<Passage> parse_passages(std::string_view bytes) {
    std::vector<Passage> passages;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        auto nl = bytes.find('\n', pos);
        std::string_view line = bytes.substr(pos, nl == std::string_view::npos ? bytes.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? bytes.size() : nl + 1;
        ++line_no;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string_view::npos)
            throw data_error("passages line " + std::to_string(line_no) + ": missing tab separator");
        Passage p{std::string(line.substr(0, tab)), std::string(line.substr(tab + 1))};
        if (p.passage_id.empty())
            throw data_error("passages line " + std::to_string(line_no) + ": empty passage_id");
        if (detail::trim(p.text).empty())
            throw data_error("passages line " + std::to_string(line_no) + ": empty text");
        if (!seen.insert(p.passage_id).second)
            throw data_error("passages line " + std::to_string(line_no) +
                             ": duplicate passage_id '" + p.passage_id + "'");
        passages.push_back(std::move(p));
    }
    return passages;
}

inline std::string write_passages(const std::vector<Passage>& passages) {
    std::string out;
    for (const auto& p : passages) {
        out += p.passage_id;
        out.push_back('\t');
        out += p.text;
        out.push_back('\n');
    }
    return out;
}

// ---------------------------------------------------------------------------
// Qrels: <qid> <ignored> <pid> <grade>\n
// ---------------------------------------------------------------------------

inline Qrels parse_qrels(std::string_view bytes) {
    Qrels qrels;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        auto nl = bytes.find('\n', pos);
        std::string_view line = bytes.substr(pos, nl == std::string_view::npos ? bytes.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? bytes.size() : nl + 1;
        ++line_no;
        if (detail::trim(line).empty()) continue;

        std::istringstream iss{std::string(line)};
        std::string qid, ignored, pid, grade_str, extra;
        if (!(iss >> qid >> ignored >> pid >> grade_str))
            throw data_error("qrels line " + std::to_string(line_no) + ": fewer than 4 columns");
        if (iss >> extra)
            throw data_error("qrels line " + std::to_string(line_no) + ": more than 4 columns");

        int grade = 0;
        std::size_t consumed = 0;
        try {
            grade = std::stoi(grade_str, &consumed);
        } catch (const std::exception&) {
            throw data_error("qrels line " + std::to_string(line_no) + ": non-integer grade '" +
                             grade_str + "'");
        }
        if (consumed != grade_str.size())
            throw data_error("qrels line " + std::to_string(line_no) + ": non-integer grade '" +
                             grade_str + "'");
        if (grade < 0)
            throw data_error("qrels line " + std::to_string(line_no) + ": negative grade " +
                             std::to_string(grade));

        auto& per_query = qrels.grades[qid];
        auto [it, inserted] = per_query.emplace(pid, grade);
        if (!inserted) {
            it->second = grade;  // last occurrence wins
            ++qrels.duplicate_warnings;
        }
    }
    return qrels;
}

inline std::string write_qrels(const Qrels& qrels) {
    std::string out;
    for (const auto& [qid, docs] : qrels.grades)
        for (const auto& [pid, grade] : docs)
            out += qid + " 0 " + pid + " " + std::to_string(grade) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Runs: <qid> Q0 <pid> <rank> <score:%.6f> <tag>\n
// ---------------------------------------------------------------------------

inline std::string format_score(double score) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", score);
    return buf;
}

inline std::string write_run(const Run& run) {
    std::string out;
    for (const auto& [qid, docs] : run.results) {
        std::size_t rank = 1;
        for (const auto& d : docs) {
            out += qid + " Q0 " + d.passage_id + " " + std::to_string(rank) + " " +
                   format_score(d.score) + " " + run.tag + "\n";
            ++rank;
        }
    }
    return out;
}

/// Parses a trec-format run. Ranks must be 1-based and contiguous per query,
/// scores non-increasing. The ascending-passage_id tie rule is a construction
/// guarantee of retrieval output, not a parse-time rejection, so that
/// serialized runs whose scores collapsed at 6 decimals still round-trip.
inline Run parse_run(std::string_view bytes) {
    Run run;
    run.tag.clear();
    std::map<std::string, std::size_t> next_rank;
    std::map<std::string, std::set<std::string>> seen_pids;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        auto nl = bytes.find('\n', pos);
        std::string_view line = bytes.substr(pos, nl == std::string_view::npos ? bytes.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? bytes.size() : nl + 1;
        ++line_no;
        if (detail::trim(line).empty()) continue;

        std::istringstream iss{std::string(line)};
        std::string qid, q0, pid, rank_str, score_str, tag;
        if (!(iss >> qid >> q0 >> pid >> rank_str >> score_str >> tag))
            throw data_error("run line " + std::to_string(line_no) + ": fewer than 6 columns");

        std::size_t rank = 0;
        double score = 0.0;
        try {
            rank = std::stoul(rank_str);
            score = std::stod(score_str);
        } catch (const std::exception&) {
            throw data_error("run line " + std::to_string(line_no) + ": bad rank or score");
        }
        if (rank == 0)
            throw data_error("run line " + std::to_string(line_no) + ": rank 0 (ranks are 1-based)");

        auto& expect = next_rank.emplace(qid, 1).first->second;
        if (rank != expect)
            throw data_error("run line " + std::to_string(line_no) + ": rank " +
                             std::to_string(rank) + " out of order (expected " +
                             std::to_string(expect) + ")");
        ++expect;

        auto& docs = run.results[qid];
        if (!docs.empty() && score > docs.back().score)
            throw data_error("run line " + std::to_string(line_no) + ": score increases within query '" +
                             qid + "'");
        if (!seen_pids[qid].insert(pid).second)
            throw data_error("run line " + std::to_string(line_no) + ": duplicate passage '" + pid +
                             "' for query '" + qid + "'");
        docs.push_back({pid, score});
        if (run.tag.empty()) run.tag = tag;
    }
    if (run.tag.empty()) run.tag = "convgqr";
    return run;
}

// ---------------------------------------------------------------------------
// Embeddings: "CGQREMB1" | u32 dim | u64 count | count*dim f32 | ids
// ---------------------------------------------------------------------------

inline constexpr char kEmbeddingMagic[9] = "CGQREMB1";

inline std::string write_embeddings(const EmbeddingMatrix& m) {
    if (m.vectors.size() != m.rows() * m.dim)
        throw data_error("embeddings: vector storage does not match ids * dim");
    std::string out;
    out.append(kEmbeddingMagic, 8);
    io::put_u32(out, m.dim);
    io::put_u64(out, m.rows());
    for (float v : m.vectors) {
        if (!std::isfinite(v)) throw data_error("embeddings: non-finite vector entry");
        io::put_f32(out, v);
    }
    for (const auto& id : m.ids) {
        if (id.find('\n') != std::string::npos)
            throw data_error("embeddings: passage_id contains newline");
        out += id;
        out.push_back('\n');
    }
    return out;
}

inline EmbeddingMatrix read_embeddings(std::string_view bytes) {
    io::Reader r(bytes, "embeddings");
    if (r.get_bytes(8) != std::string(kEmbeddingMagic, 8))
        throw data_error("embeddings: magic mismatch");
    EmbeddingMatrix m;
    m.dim = r.get_u32();
    std::uint64_t count = r.get_u64();
    m.vectors.resize(static_cast<std::size_t>(count) * m.dim);
    for (auto& v : m.vectors) v = r.get_f32();
    m.ids.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) m.ids.push_back(r.get_line());
    if (!r.exhausted())
        throw data_error("embeddings: id count mismatch (trailing bytes after " +
                         std::to_string(count) + " ids)");
    for (float v : m.vectors)
        if (!std::isfinite(v)) throw data_error("embeddings: non-finite vector entry");
    return m;
}

}  // namespace convgqr
