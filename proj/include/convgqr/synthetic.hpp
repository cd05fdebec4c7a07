#pragma once

#include <string>
#include <vector>

#include "convgqr/common.hpp"
#include "convgqr/corpus.hpp"

namespace convgqr {

/// A self-contained desk-scale dataset: sessions with training targets, a
/// passage collection, and graded judgments.
struct SyntheticData {
    std::vector<Session> sessions;
    std::vector<Passage> passages;
    Qrels qrels;
};

namespace synth {

/// Deterministic pseudo-word generator (CV syllables), so fixtures read as
/// text while staying collision-free and reproducible.
inline std::string word(std::size_t i) {
    static const char* syllables[] = {"ba", "ce", "di", "fo", "gu", "ha", "ke", "li",
                                      "mo", "nu", "pa", "re", "si", "to", "vu", "za"};
    std::string w;
    w += syllables[i % 16];
    w += syllables[(i / 16) % 16];
    w += syllables[(i / 256) % 16 == 0 ? (i % 16 + 3) % 16 : (i / 256) % 16];
    return w;
}

}  // namespace synth

/// Training dataset: 40 sessions of 3 turns over a 200-passage corpus.
/// Later turns are elliptical ("and its ... ?") so history matters; every
/// gold answer's tokens appear verbatim in its relevant passage, which is
/// what gives the knowledge-infusion loss a learnable lexical signal.
inline SyntheticData make_training_dataset(std::uint64_t seed = 7) {
    SyntheticData data;
    constexpr std::size_t n_sessions = 40;
    constexpr std::size_t n_turns = 3;
    constexpr std::size_t n_passages = 200;

    auto topic = [](std::size_t s) { return synth::word(s); };                   // 0..39
    auto aspect = [](std::size_t t) { return synth::word(40 + t); };             // 40..42
    auto fact = [](std::size_t s, std::size_t t) { return synth::word(48 + s * n_turns + t); };

    for (std::size_t s = 0; s < n_sessions; ++s) {
        Session session;
        session.session_id = "S" + std::to_string(s);
        for (std::size_t t = 0; t < n_turns; ++t) {
            Turn turn;
            turn.turn_id = std::to_string(t + 1);
            std::string subject = topic(s), asp = aspect(t), fct = fact(s, t);
            turn.query = t == 0 ? "what is the " + asp + " of " + subject + " ?"
                                : "and what about its " + asp + " ?";
            turn.gold_rewrite = "what is the " + asp + " of " + subject + " ?";
            turn.gold_answer = "the " + asp + " of " + subject + " is " + fct;
            turn.answer = *turn.gold_answer;
            session.turns.push_back(std::move(turn));

            Passage p;
            p.passage_id = "P" + std::to_string(s) + "_" + std::to_string(t + 1);
            p.text = "the " + asp + " of " + subject + " is " + fct + " . " + subject +
                     " notes on " + asp + " continue here .";
            data.passages.push_back(std::move(p));

            std::string qid = query_id_of(session.session_id, std::to_string(t + 1));
            data.qrels.grades[qid]["P" + std::to_string(s) + "_" + std::to_string(t + 1)] = 1;
        }
        data.sessions.push_back(std::move(session));
    }

    // distractor passages: seeded word salads over the same lexicon
    SplitRng rng(seed);
    for (std::size_t d = data.passages.size(); d < n_passages; ++d) {
        Passage p;
        p.passage_id = "D" + std::to_string(d);
        std::string text;
        std::size_t len = 8 + rng.next_below(8);
        for (std::size_t i = 0; i < len; ++i) {
            if (i) text += " ";
            text += synth::word(rng.next_below(200));
        }
        p.text = text + " .";
        data.passages.push_back(std::move(p));
    }
    return data;
}

/// Designed fixture for the query-form comparison: rewrite tokens occur in
/// both the relevant passage and a shorter, term-heavy distractor, while
/// expansion tokens occur only in the relevant passage. Two queries carry
/// useless expansions (tokens absent from the corpus), so generation quality
/// varies and overlap correlates positively with retrieval success.
inline SyntheticData make_concat_fixture() {
    SyntheticData data;
    constexpr std::size_t n_queries = 12;
    constexpr std::size_t n_useless = 2;  // queries whose expansion helps nothing

    const std::string shared = "breed quality market";  // in every passage pair

    for (std::size_t i = 0; i < n_queries; ++i) {
        std::string subject = synth::word(300 + i);
        std::string e1 = synth::word(400 + 3 * i), e2 = synth::word(401 + 3 * i),
                    e3 = synth::word(402 + 3 * i);
        bool useless = i >= n_queries - n_useless;

        Session session;
        session.session_id = "C" + std::to_string(i);
        Turn turn;
        turn.turn_id = "1";
        turn.query = subject + " " + shared;
        turn.gold_rewrite = turn.query;
        // oracle expansion; for the useless queries these words appear nowhere
        turn.gold_answer = useless ? synth::word(500 + 2 * i) + " " + synth::word(501 + 2 * i)
                                   : e1 + " " + e2 + " " + e3;
        session.turns.push_back(std::move(turn));
        data.sessions.push_back(std::move(session));

        Passage relevant;
        relevant.passage_id = "R" + std::to_string(i);
        relevant.text = subject + " " + shared + " " + e1 + " " + e2 + " " + e3 + " " + e1 + " " +
                        e2 + " " + e3 + " " + e1 + " " + e2 + " " + e3;
        data.passages.push_back(std::move(relevant));

        Passage distractor;
        distractor.passage_id = "X" + std::to_string(i);
        distractor.text = subject + " breed breed quality quality market market";
        data.passages.push_back(std::move(distractor));

        data.qrels.grades[query_id_of("C" + std::to_string(i), "1")]["R" + std::to_string(i)] = 1;
    }
    return data;
}

}  // namespace convgqr
