#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "convgqr/common.hpp"
#include "convgqr/corpus.hpp"

namespace convgqr {

enum class NdcgGain { linear, exponential };

struct EvalConfig {
    int rel_threshold = 1;
    std::size_t ndcg_k = 3;
    std::vector<std::size_t> recall_ks = {10, 100};
    NdcgGain gain = NdcgGain::linear;
};

// ---------------------------------------------------------------------------
// Per-query metrics (full-depth MRR, NDCG@k, Recall@k)
// ---------------------------------------------------------------------------

/// Reciprocal rank of the first passage with grade >= threshold, 0 if none.
inline double mrr(const std::vector<std::string>& ranked_ids,
                  const std::map<std::string, int>& qrels_for_query, int threshold) {
    for (std::size_t i = 0; i < ranked_ids.size(); ++i) {
        auto it = qrels_for_query.find(ranked_ids[i]);
        if (it != qrels_for_query.end() && it->second >= threshold)
            return 1.0 / static_cast<double>(i + 1);
    }
    return 0.0;
}

namespace detail {

inline double ndcg_gain_value(int grade, NdcgGain gain) {
    if (gain == NdcgGain::linear) return static_cast<double>(grade);
    return std::pow(2.0, static_cast<double>(grade)) - 1.0;
}

}  // namespace detail

/// DCG@k / IDCG@k with discount log2(i + 1); 0 when the ideal gain is 0.
inline double ndcg_at_k(const std::vector<std::string>& ranked_ids,
                        const std::map<std::string, int>& qrels_for_query, std::size_t k,
                        NdcgGain gain) {
    if (k < 1) throw data_error("ndcg_at_k: k must be >= 1");
    double dcg = 0.0;
    for (std::size_t i = 0; i < ranked_ids.size() && i < k; ++i) {
        auto it = qrels_for_query.find(ranked_ids[i]);
        int grade = it == qrels_for_query.end() ? 0 : it->second;
        dcg += detail::ndcg_gain_value(grade, gain) / std::log2(static_cast<double>(i + 2));
    }
    std::vector<int> grades;
    grades.reserve(qrels_for_query.size());
    for (const auto& [pid, g] : qrels_for_query) grades.push_back(g);
    std::sort(grades.begin(), grades.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < grades.size() && i < k; ++i)
        idcg += detail::ndcg_gain_value(grades[i], gain) / std::log2(static_cast<double>(i + 2));
    return idcg == 0.0 ? 0.0 : dcg / idcg;
}

/// Fraction of relevant passages (grade >= threshold) in the top k.
/// Undefined when the query has no relevant passage: returns nullopt so the
/// caller can exclude it from macro averages.
inline std::optional<double> recall_at_k(const std::vector<std::string>& ranked_ids,
                                         const std::map<std::string, int>& qrels_for_query,
                                         std::size_t k, int threshold) {
    std::size_t relevant = 0;
    for (const auto& [pid, grade] : qrels_for_query)
        if (grade >= threshold) ++relevant;
    if (relevant == 0) return std::nullopt;
    std::size_t found = 0;
    for (std::size_t i = 0; i < ranked_ids.size() && i < k; ++i) {
        auto it = qrels_for_query.find(ranked_ids[i]);
        if (it != qrels_for_query.end() && it->second >= threshold) ++found;
    }
    return static_cast<double>(found) / static_cast<double>(relevant);
}

// ---------------------------------------------------------------------------
// Run-level evaluation
// ---------------------------------------------------------------------------

struct EvalReport {
    // metric name -> (query_id -> value); only evaluable queries appear
    std::map<std::string, std::map<std::string, double>> per_query;
    std::map<std::string, double> macro;  // metric name -> mean over evaluable
    std::size_t query_count = 0;          // evaluable queries
    std::vector<std::string> run_queries_without_qrels;
    std::vector<std::string> queries_without_relevant;  // judged but nothing >= threshold
    std::size_t qrels_queries_missing_from_run = 0;
    EvalConfig config;

    std::vector<std::string> metric_names() const {
        std::vector<std::string> names;
        for (const auto& [name, values] : per_query) names.push_back(name);
        return names;
    }
};

/// Computes every configured metric per query and macro-averages over the
/// queries that have at least one passage at or above the relevance
/// threshold. Run queries without qrels are excluded and flagged, never
/// silently scored.
inline EvalReport evaluate_run(const Run& run, const Qrels& qrels, const EvalConfig& config) {
    EvalReport report;
    report.config = config;

    std::vector<std::string> metric_names{"mrr", "ndcg@" + std::to_string(config.ndcg_k)};
    for (auto k : config.recall_ks) metric_names.push_back("recall@" + std::to_string(k));
    for (const auto& name : metric_names) report.per_query[name];

    for (const auto& [qid, docs] : run.results) {
        auto jt = qrels.grades.find(qid);
        if (jt == qrels.grades.end()) {
            report.run_queries_without_qrels.push_back(qid);
            continue;
        }
        const auto& judged = jt->second;
        bool evaluable = false;
        for (const auto& [pid, grade] : judged)
            if (grade >= config.rel_threshold) evaluable = true;
        if (!evaluable) {
            report.queries_without_relevant.push_back(qid);
            continue;
        }

        std::vector<std::string> ranked_ids;
        ranked_ids.reserve(docs.size());
        for (const auto& d : docs) ranked_ids.push_back(d.passage_id);

        report.per_query["mrr"][qid] = mrr(ranked_ids, judged, config.rel_threshold);
        report.per_query["ndcg@" + std::to_string(config.ndcg_k)][qid] =
            ndcg_at_k(ranked_ids, judged, config.ndcg_k, config.gain);
        for (auto k : config.recall_ks) {
            auto r = recall_at_k(ranked_ids, judged, k, config.rel_threshold);
            report.per_query["recall@" + std::to_string(k)][qid] = *r;  // evaluable => has value
        }
        ++report.query_count;
    }

    for (const auto& [qid, judged] : qrels.grades)
        if (!run.results.count(qid)) ++report.qrels_queries_missing_from_run;

    // macro averages in sorted query_id order (std::map iteration)
    for (const auto& name : metric_names) {
        const auto& values = report.per_query[name];
        double sum = 0.0;
        for (const auto& [qid, v] : values) sum += v;
        report.macro[name] = values.empty() ? 0.0 : sum / static_cast<double>(values.size());
    }
    return report;
}

/// trec_eval-style machine-readable lines: <metric>\t<qid|all>\t<value:%.4f>
inline std::string format_report_lines(const EvalReport& report) {
    std::string out;
    auto emit = [&out](const std::string& metric, const std::string& qid, double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4f", v);
        out += metric + "\t" + qid + "\t" + buf + "\n";
    };
    for (const auto& [metric, values] : report.per_query) {
        for (const auto& [qid, v] : values) emit(metric, qid, v);
        emit(metric, "all", report.macro.at(metric));
    }
    return out;
}

/// Human-readable summary table.
inline std::string format_report_table(const EvalReport& report) {
    std::string out;
    out += "queries evaluated: " + std::to_string(report.query_count) + "\n";
    out += "run queries without qrels: " +
           std::to_string(report.run_queries_without_qrels.size()) + "\n";
    out += "judged queries without relevant passage: " +
           std::to_string(report.queries_without_relevant.size()) + "\n";
    out += "qrels queries missing from run: " +
           std::to_string(report.qrels_queries_missing_from_run) + "\n";
    out += std::string("ndcg gain: ") +
           (report.config.gain == NdcgGain::linear ? "linear" : "exponential") + "\n";
    out += "relevance threshold: " + std::to_string(report.config.rel_threshold) + "\n";
    for (const auto& [metric, v] : report.macro) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4f", v);
        out += metric + ": " + buf + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Paired t-test
// ---------------------------------------------------------------------------

namespace detail {

/// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 1e-15;
    constexpr double kFpMin = 1e-300;

    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw numeric_error("incomplete beta continued fraction did not converge");
}

/// Regularized incomplete beta I_x(a, b).
inline double ibeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log(1.0 - x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

/// Two-sided p-value of Student's t with df degrees of freedom:
/// p = I_{df/(df+t^2)}(df/2, 1/2).
inline double student_t_two_sided_p(double t, double df) {
    if (df < 1.0) throw numeric_error("student t: degrees of freedom must be >= 1");
    double x = df / (df + t * t);
    return detail::ibeta(df / 2.0, 0.5, x);
}

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    bool zero_variance = false;  // degenerate branch was taken
};

/// Two-sided paired t-test on per-query metric values, paired by position.
/// Zero-variance differences take the degenerate branch: p = 1 when the mean
/// difference is 0, otherwise p -> 0 with the flag set.
inline TTestResult paired_t_test(const std::vector<double>& per_query_a,
                                 const std::vector<double>& per_query_b) {
    if (per_query_a.size() != per_query_b.size())
        throw data_error("paired_t_test: sample sizes differ");
    std::size_t n = per_query_a.size();
    if (n < 2) throw data_error("paired_t_test: need at least 2 paired samples");

    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = per_query_a[i] - per_query_b[i];
    double mean = 0.0;
    for (double d : diff) mean += d;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double d : diff) ss += (d - mean) * (d - mean);
    double var = ss / static_cast<double>(n - 1);

    TTestResult result;
    if (var == 0.0) {
        result.zero_variance = true;
        if (mean == 0.0) {
            result.t = 0.0;
            result.p = 1.0;
        } else {
            result.t = mean > 0 ? std::numeric_limits<double>::infinity()
                                : -std::numeric_limits<double>::infinity();
            result.p = 0.0;
        }
        return result;
    }
    result.t = mean / std::sqrt(var / static_cast<double>(n));
    result.p = student_t_two_sided_p(result.t, static_cast<double>(n - 1));
    return result;
}

}  // namespace convgqr
