#pragma once

#include <string>
#include <vector>

#include "convgqr/common.hpp"
#include "convgqr/corpus.hpp"
#include "convgqr/tokenize.hpp"

namespace convgqr {

inline constexpr const char* kClsToken = "[CLS]";
inline constexpr const char* kSepToken = "[SEP]";

struct FormatConfig {
    bool include_answers = false;  // history turns contribute answers too
    std::size_t max_tokens = 256;
    // truncation policy: whole oldest turns are dropped first; if the
    // current query alone still exceeds the budget its tail is cut
};

/// Model input sequence for one session turn: the current query followed by
/// the history in reversed (newest-first) order, [SEP]-delimited.
struct FormattedSession {
    std::vector<std::string> tokens;
    std::string session_id;
    std::size_t current_turn_index = 0;  // 1-based
};

/// Builds [CLS] q_i [SEP] q_{i-1} [SEP] ... q_1 [SEP] from the session
/// prefix ending at 1-based turn index i. With include_answers, each history
/// turn contributes its query then its answer before the turn's [SEP].
/// Over-budget sequences drop whole oldest turns (with their [SEP]); if the
/// current query alone does not fit, its tail is truncated.
inline FormattedSession format_session(const Session& session, std::size_t current_turn_index,
                                       const FormatConfig& config) {
    if (current_turn_index < 1 || current_turn_index > session.turns.size())
        throw data_error("format_session: turn index " + std::to_string(current_turn_index) +
                         " out of range for session '" + session.session_id + "' with " +
                         std::to_string(session.turns.size()) + " turns");

    // per-turn token blocks, index 0 = current turn, then history newest-first
    std::vector<std::vector<std::string>> blocks;
    {
        std::vector<std::string> cur = tokenize(session.turns[current_turn_index - 1].query);
        cur.push_back(kSepToken);
        blocks.push_back(std::move(cur));
    }
    for (std::size_t k = current_turn_index - 1; k >= 1; --k) {
        const Turn& t = session.turns[k - 1];
        std::vector<std::string> block = tokenize(t.query);
        if (config.include_answers) {
            for (auto& tok : tokenize(t.answer)) block.push_back(std::move(tok));
        }
        block.push_back(kSepToken);
        blocks.push_back(std::move(block));
    }

    std::size_t total = 1;  // [CLS]
    for (const auto& b : blocks) total += b.size();

    // drop whole oldest turns until the budget is met
    std::size_t keep = blocks.size();
    while (keep > 1 && total > config.max_tokens) {
        total -= blocks[keep - 1].size();
        --keep;
    }

    FormattedSession out;
    out.session_id = session.session_id;
    out.current_turn_index = current_turn_index;
    out.tokens.push_back(kClsToken);
    for (std::size_t i = 0; i < keep; ++i)
        for (const auto& tok : blocks[i]) out.tokens.push_back(tok);

    if (out.tokens.size() > config.max_tokens && config.max_tokens >= 2) {
        // current query alone exceeds the budget: tail-truncate, keep [SEP]
        out.tokens.resize(config.max_tokens - 1);
        out.tokens.push_back(kSepToken);
    }
    return out;
}

}  // namespace convgqr
