#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "convgqr/common.hpp"
#include "convgqr/tokenize.hpp"

namespace convgqr {

/// Normalization used by all generation-quality metrics: lowercase word
/// tokens with punctuation tokens stripped. No stopword removal.
inline std::vector<std::string> normalize_tokens(std::string_view text) {
    std::vector<std::string> out;
    for (auto& tok : tokenize(text))
        if (!is_punct_token(tok)) out.push_back(std::move(tok));
    return out;
}

/// Count of distinct normalized tokens shared by the generated answer and
/// the relevant passage.
inline std::size_t token_overlap(std::string_view generated_answer,
                                 std::string_view relevant_passage) {
    auto ans = normalize_tokens(generated_answer);
    auto pas = normalize_tokens(relevant_passage);
    std::set<std::string> ans_set(ans.begin(), ans.end());
    std::set<std::string> pas_set(pas.begin(), pas.end());
    std::size_t overlap = 0;
    for (const auto& t : ans_set)
        if (pas_set.count(t)) ++overlap;
    return overlap;
}

/// token_overlap divided by the passage's distinct normalized token count.
/// Invariant under answer-token repetition; always in [0, 1].
inline double normalized_overlap(std::string_view generated_answer,
                                 std::string_view relevant_passage) {
    auto pas = normalize_tokens(relevant_passage);
    std::set<std::string> pas_set(pas.begin(), pas.end());
    if (pas_set.empty())
        throw data_error("normalized_overlap: passage has no tokens after normalization");
    return static_cast<double>(token_overlap(generated_answer, relevant_passage)) /
           static_cast<double>(pas_set.size());
}

/// Token-level F1 over normalized multisets (extractive-QA convention).
/// 0 when either side is empty or nothing is shared.
inline double answer_f1(std::string_view generated, std::string_view gold) {
    auto gen = normalize_tokens(generated);
    auto gld = normalize_tokens(gold);
    if (gen.empty() || gld.empty()) return 0.0;
    std::map<std::string, std::size_t> gen_counts, gold_counts;
    for (const auto& t : gen) ++gen_counts[t];
    for (const auto& t : gld) ++gold_counts[t];
    std::size_t common = 0;
    for (const auto& [tok, c] : gen_counts) {
        auto it = gold_counts.find(tok);
        if (it != gold_counts.end()) common += std::min(c, it->second);
    }
    if (common == 0) return 0.0;
    double precision = static_cast<double>(common) / static_cast<double>(gen.size());
    double recall = static_cast<double>(common) / static_cast<double>(gld.size());
    return 2.0 * precision * recall / (precision + recall);
}

/// Sample Pearson correlation, clamped to [-1, 1] against rounding.
/// Constant input on either side is an error (undefined correlation).
inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw data_error("pearson: series lengths differ");
    if (xs.size() < 2) throw data_error("pearson: need at least 2 points");
    auto constant = [](const std::vector<double>& v) {
        for (double x : v)
            if (x != v.front()) return false;
        return true;
    };
    if (constant(xs) || constant(ys))
        throw numeric_error("pearson: constant series has undefined correlation");
    double mx = 0.0, my = 0.0;
    for (double x : xs) mx += x;
    for (double y : ys) my += y;
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(ys.size());
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw numeric_error("pearson: constant series has undefined correlation");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Correlation report
// ---------------------------------------------------------------------------

struct GenQualityRecord {
    std::string query_id;
    std::size_t overlap = 0;
    double normalized_overlap = 0.0;
    double f1 = 0.0;
    double mrr = 0.0;
};

struct CorrelationReport {
    std::optional<double> pcc_overlap;
    std::optional<double> pcc_norm_overlap;
    std::optional<double> pcc_f1;
    std::vector<std::string> constant_columns;  // metrics skipped and flagged
    std::size_t record_count = 0;
};

/// Pearson correlation of each generation-quality metric against per-query
/// MRR. Constant columns (including a constant MRR) are skipped and flagged
/// rather than reported.
inline CorrelationReport correlation_report(const std::vector<GenQualityRecord>& records) {
    if (records.size() < 2)
        throw data_error("correlation_report: need at least 2 records");
    CorrelationReport report;
    report.record_count = records.size();

    std::vector<double> mrrs;
    mrrs.reserve(records.size());
    for (const auto& r : records) mrrs.push_back(r.mrr);

    auto correlate = [&](const char* name, auto getter) -> std::optional<double> {
        std::vector<double> xs;
        xs.reserve(records.size());
        for (const auto& r : records) xs.push_back(getter(r));
        try {
            return pearson(xs, mrrs);
        } catch (const numeric_error&) {
            report.constant_columns.emplace_back(name);
            return std::nullopt;
        }
    };

    report.pcc_overlap = correlate("overlap", [](const GenQualityRecord& r) {
        return static_cast<double>(r.overlap);
    });
    report.pcc_norm_overlap = correlate("normalized_overlap", [](const GenQualityRecord& r) {
        return r.normalized_overlap;
    });
    report.pcc_f1 = correlate("f1", [](const GenQualityRecord& r) { return r.f1; });
    return report;
}

// ---------------------------------------------------------------------------
// Record and report serialization
// ---------------------------------------------------------------------------

inline std::string write_quality_records(const std::vector<GenQualityRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%zu\t%.4f\t%.4f\t%.4f", r.overlap, r.normalized_overlap,
                      r.f1, r.mrr);
        out += r.query_id + "\t" + buf + "\n";
    }
    return out;
}

inline std::string format_correlation_report(const CorrelationReport& report) {
    std::string out;
    out += "records: " + std::to_string(report.record_count) + "\n";
    auto emit = [&out](const char* name, const std::optional<double>& v) {
        if (v) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.4f", *v);
            out += std::string("pcc_") + name + ": " + buf + "\n";
        } else {
            out += std::string("pcc_") + name + ": skipped (constant column)\n";
        }
    };
    emit("overlap", report.pcc_overlap);
    emit("norm_overlap", report.pcc_norm_overlap);
    emit("f1", report.pcc_f1);
    return out;
}

}  // namespace convgqr
