#include <catch2/catch_amalgamated.hpp>

#include "convgqr/analysis.hpp"
#include "convgqr/common.hpp"
#include "support/oracles.hpp"

using namespace convgqr;

TEST_CASE("token_overlap counts distinct shared tokens") {
    CHECK(token_overlap("boer goat", "the boer goat eats") == 2);
    CHECK(token_overlap("cow pig", "the boer goat eats") == 0);
    CHECK(token_overlap("boer goat breed", "boer and breed only") == 2);
    // verbatim subset: overlap equals the answer's distinct token count
    CHECK(token_overlap("boer goat", "boer goat boer goat extra") == 2);
    // punctuation and case do not count
    CHECK(token_overlap("Boer, goat!", "boer GOAT") == 2);
}

TEST_CASE("normalized_overlap basics") {
    CHECK(normalized_overlap("a b c", "a b c") == 1.0);
    // overlap 2, passage distinct count 8
    CHECK(normalized_overlap("one two", "one two t3 t4 t5 t6 t7 t8") == 0.25);
    CHECK_THROWS_AS(normalized_overlap("a", "!!!"), data_error);
}

TEST_CASE("normalized_overlap ignores answer repetition") {
    double once = normalized_overlap("boer goat", "boer goat farm life");
    double thrice = normalized_overlap("boer boer boer goat goat", "boer goat farm life");
    CHECK(once == thrice);
}

TEST_CASE("answer_f1 basics") {
    CHECK(answer_f1("the boer goat", "the boer goat") == 1.0);
    CHECK(answer_f1("alpha beta", "gamma delta") == 0.0);
    CHECK(answer_f1("", "gold") == 0.0);
    CHECK_THAT(answer_f1("the boer goat", "boer goat breed"),
               Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));
}

TEST_CASE("answer_f1 is symmetric and respects multiset counts") {
    SplitRng rng(3);
    static const char* words[] = {"a", "b", "c", "d", "e"};
    for (int iter = 0; iter < 200; ++iter) {
        std::string x, y;
        for (std::size_t i = 0; i <= rng.next_below(6); ++i)
            x += std::string(words[rng.next_below(5)]) + " ";
        for (std::size_t i = 0; i <= rng.next_below(6); ++i)
            y += std::string(words[rng.next_below(5)]) + " ";
        CHECK(answer_f1(x, y) == answer_f1(y, x));
    }
    // "a a" vs "a": common = min(2,1) = 1, P=1/2, R=1 -> F1 = 2/3
    CHECK_THAT(answer_f1("a a", "a"), Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));
}

TEST_CASE("pearson on affine and negated series") {
    std::vector<double> xs{1, 2, 3, 4, 5};
    std::vector<double> ys;
    for (double x : xs) ys.push_back(2.0 * x + 1.0);
    CHECK_THAT(pearson(xs, ys), Catch::Matchers::WithinAbs(1.0, 1e-12));
    std::vector<double> neg;
    for (double x : xs) neg.push_back(-x);
    CHECK_THAT(pearson(xs, neg), Catch::Matchers::WithinAbs(-1.0, 1e-12));
}

TEST_CASE("pearson matches the direct formula") {
    std::vector<double> xs{1, 2, 3, 4};
    std::vector<double> ys{1, 3, 2, 4};
    CHECK_THAT(pearson(xs, ys),
               Catch::Matchers::WithinAbs(oracle::pearson_direct(xs, ys), 1e-12));
}

TEST_CASE("pearson rejects constant or malformed input") {
    CHECK_THROWS_AS(pearson({1, 1, 1}, {1, 2, 3}), numeric_error);
    CHECK_THROWS_AS(pearson({1, 2, 3}, {5, 5, 5}), numeric_error);
    CHECK_THROWS_AS(pearson({1}, {2}), data_error);
    CHECK_THROWS_AS(pearson({1, 2}, {1, 2, 3}), data_error);
}

TEST_CASE("correlation_report with f1 equal to mrr") {
    std::vector<GenQualityRecord> records;
    for (int i = 0; i < 5; ++i) {
        GenQualityRecord r;
        r.query_id = "q" + std::to_string(i);
        r.overlap = static_cast<std::size_t>(i);
        r.normalized_overlap = 0.1 * i;
        r.f1 = 0.2 * i;
        r.mrr = 0.2 * i;
        records.push_back(r);
    }
    CorrelationReport report = correlation_report(records);
    REQUIRE(report.pcc_f1.has_value());
    CHECK_THAT(*report.pcc_f1, Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK(report.constant_columns.empty());
}

TEST_CASE("correlation_report detects anti-correlation") {
    std::vector<GenQualityRecord> records;
    for (int i = 0; i < 6; ++i) {
        GenQualityRecord r;
        r.query_id = "q" + std::to_string(i);
        r.overlap = static_cast<std::size_t>(10 - i);
        r.normalized_overlap = 0.7;
        r.f1 = 0.3;
        r.mrr = 0.1 * i;
        records.push_back(r);
    }
    CorrelationReport report = correlation_report(records);
    REQUIRE(report.pcc_overlap.has_value());
    CHECK(*report.pcc_overlap < 0.0);
    // constant columns are flagged, not reported
    CHECK_FALSE(report.pcc_norm_overlap.has_value());
    CHECK_FALSE(report.pcc_f1.has_value());
    CHECK(report.constant_columns ==
          std::vector<std::string>{"normalized_overlap", "f1"});
}

TEST_CASE("correlation_report needs two records") {
    CHECK_THROWS_AS(correlation_report({}), data_error);
    CHECK_THROWS_AS(correlation_report({GenQualityRecord{}}), data_error);
}

TEST_CASE("quality records serialize as tab-separated lines") {
    GenQualityRecord r;
    r.query_id = "q1";
    r.overlap = 3;
    r.normalized_overlap = 0.25;
    r.f1 = 2.0 / 3.0;
    r.mrr = 0.5;
    CHECK(write_quality_records({r}) == "q1\t3\t0.2500\t0.6667\t0.5000\n");
}
