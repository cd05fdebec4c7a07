#include <catch2/catch_amalgamated.hpp>

#include "convgqr/common.hpp"
#include "convgqr/corpus.hpp"

using namespace convgqr;

namespace {

const char* kGoatSessionLine =
    R"({"session_id":"s2","turns":[)"
    R"({"turn_id":"1","query":"What are the main breeds of goat?","answer":"Abaza... Zhongwei"},)"
    R"({"turn_id":"2","query":"Tell me about boer goats.","answer":"The Boer goat is a breed of goat."},)"
    R"({"turn_id":"3","query":"What breed is good for meat?","gold_rewrite":"What breed of goat is good for meat?"}]})"
    "\n";

}  // namespace

TEST_CASE("parse_sessions on empty stream") {
    CHECK(parse_sessions("").empty());
}

TEST_CASE("parse_sessions reads a three-turn session in order") {
    auto sessions = parse_sessions(kGoatSessionLine);
    REQUIRE(sessions.size() == 1);
    const Session& s = sessions[0];
    CHECK(s.session_id == "s2");
    REQUIRE(s.turns.size() == 3);
    CHECK(s.turns[0].query == "What are the main breeds of goat?");
    CHECK(s.turns[1].query == "Tell me about boer goats.");
    CHECK(s.turns[2].query == "What breed is good for meat?");
    CHECK(s.turns[2].gold_rewrite == "What breed of goat is good for meat?");
    CHECK_FALSE(s.turns[2].gold_answer.has_value());
}

TEST_CASE("parse_sessions errors carry line numbers") {
    std::string missing_query = R"({"session_id":"a","turns":[{"turn_id":"1"}]})" "\n";
    CHECK_THROWS_WITH(parse_sessions(missing_query), Catch::Matchers::ContainsSubstring("line 1"));

    std::string second_bad = std::string(kGoatSessionLine) + "{not json}\n";
    CHECK_THROWS_WITH(parse_sessions(second_bad), Catch::Matchers::ContainsSubstring("line 2"));
}

TEST_CASE("parse_sessions rejects structural violations") {
    CHECK_THROWS_AS(parse_sessions(R"({"session_id":"a","turns":[]})" "\n"), data_error);
    CHECK_THROWS_AS(
        parse_sessions(
            R"({"session_id":"a","turns":[{"turn_id":"1","query":"  "}]})" "\n"),
        data_error);
    CHECK_THROWS_AS(
        parse_sessions(R"({"session_id":"a","turns":[{"turn_id":"1","query":"x"},)"
                       R"({"turn_id":"1","query":"y"}]})" "\n"),
        data_error);
    std::string dup = R"({"session_id":"a","turns":[{"turn_id":"1","query":"x"}]})" "\n";
    CHECK_THROWS_AS(parse_sessions(dup + dup), data_error);
}

TEST_CASE("session round trip preserves fields") {
    auto sessions = parse_sessions(kGoatSessionLine);
    auto again = parse_sessions(write_sessions(sessions));
    REQUIRE(again.size() == 1);
    CHECK(again[0].turns[0].answer == sessions[0].turns[0].answer);
    CHECK(again[0].turns[2].gold_rewrite == sessions[0].turns[2].gold_rewrite);
}

TEST_CASE("parse_passages handles the two-column format") {
    auto ps = parse_passages("p1\tGoats are ruminants.\np2\tBoer goats were bred for meat.\n");
    REQUIRE(ps.size() == 2);
    CHECK(ps[0].passage_id == "p1");
    CHECK(ps[1].text == "Boer goats were bred for meat.");

    CHECK_THROWS_AS(parse_passages("p1 no tab here\n"), data_error);
    CHECK_THROWS_AS(parse_passages("p1\ta\np1\tb\n"), data_error);
    CHECK_THROWS_AS(parse_passages("p1\t \n"), data_error);
}

TEST_CASE("parse_qrels single record") {
    Qrels q = parse_qrels("q1 0 p7 2\n");
    CHECK(q.grade("q1", "p7") == 2);
    CHECK(q.grade("q1", "px") == 0);
    CHECK(q.duplicate_warnings == 0);
}

TEST_CASE("parse_qrels duplicate pair keeps last grade and warns") {
    Qrels q = parse_qrels("q1 0 p7 1\nq1 0 p7 0\n");
    CHECK(q.grade("q1", "p7") == 0);
    CHECK(q.duplicate_warnings == 1);
}

TEST_CASE("parse_qrels rejects bad input") {
    CHECK_THROWS_AS(parse_qrels("q1 0 p7 -1\n"), data_error);
    CHECK_THROWS_AS(parse_qrels("q1 0 p7\n"), data_error);
    CHECK_THROWS_AS(parse_qrels("q1 0 p7 two\n"), data_error);
    CHECK_THROWS_AS(parse_qrels("q1 0 p7 2 extra\n"), data_error);
}

TEST_CASE("write_run serializes ranks 1-based with 6-decimal scores") {
    Run run;
    run.tag = "t";
    run.results["q1"] = {{"p2", 3.5}, {"p1", 1.0}};
    CHECK(write_run(run) == "q1 Q0 p2 1 3.500000 t\nq1 Q0 p1 2 1.000000 t\n");
}

TEST_CASE("run round trip is identity for dyadic scores") {
    SplitRng rng(7);
    Run run;
    run.tag = "rt";
    for (int q = 0; q < 100; ++q) {
        std::string qid = "q" + std::to_string(q);
        double score = 50.0;
        std::size_t depth = 1 + rng.next_below(10);
        for (std::size_t d = 0; d < depth; ++d) {
            score -= static_cast<double>(1 + rng.next_below(64)) / 64.0;
            run.results[qid].push_back({"p" + std::to_string(d), score});
        }
    }
    Run parsed = parse_run(write_run(run));
    CHECK(parsed.results == run.results);
    CHECK(parsed.tag == run.tag);
}

TEST_CASE("parse_run rejects inconsistent files") {
    CHECK_THROWS_AS(parse_run("q1 Q0 p1 0 1.000000 t\n"), data_error);
    CHECK_THROWS_AS(parse_run("q1 Q0 p1 2 1.000000 t\n"), data_error);
    CHECK_THROWS_AS(
        parse_run("q1 Q0 p1 1 1.000000 t\nq1 Q0 p2 2 2.000000 t\n"), data_error);
    CHECK_THROWS_AS(
        parse_run("q1 Q0 p1 1 2.000000 t\nq1 Q0 p1 2 1.000000 t\n"), data_error);
    CHECK_THROWS_AS(parse_run("q1 Q0 p1 1 1.0\n"), data_error);
}

TEST_CASE("embeddings round trip bit-exactly") {
    EmbeddingMatrix m;
    m.dim = 4;
    m.ids = {"pa", "pb"};
    m.vectors = {1.0f, -2.5f, 0.125f, 3.0f, 0.0f, 1e-7f, -42.0f, 9.5f};
    std::string bytes = write_embeddings(m);
    EmbeddingMatrix back = read_embeddings(bytes);
    CHECK(back.dim == m.dim);
    CHECK(back.ids == m.ids);
    CHECK(back.vectors == m.vectors);
    CHECK(write_embeddings(back) == bytes);
}

TEST_CASE("embeddings empty matrix is valid") {
    EmbeddingMatrix m;
    m.dim = 8;
    EmbeddingMatrix back = read_embeddings(write_embeddings(m));
    CHECK(back.dim == 8);
    CHECK(back.rows() == 0);
}

TEST_CASE("embeddings reader distinguishes error classes") {
    EmbeddingMatrix m;
    m.dim = 4;
    m.ids = {"pa", "pb"};
    m.vectors.assign(8, 1.0f);
    std::string good = write_embeddings(m);

    std::string bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_WITH(read_embeddings(bad_magic), Catch::Matchers::ContainsSubstring("magic"));

    std::string truncated = good.substr(0, good.size() - 1);
    CHECK_THROWS_WITH(read_embeddings(truncated),
                      Catch::Matchers::ContainsSubstring("truncated"));

    std::string extra_id = good + "pc\n";
    CHECK_THROWS_WITH(read_embeddings(extra_id),
                      Catch::Matchers::ContainsSubstring("id count"));
}
