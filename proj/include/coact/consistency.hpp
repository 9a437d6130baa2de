#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "coact/rational.hpp"
#include "coact/synthworld.hpp"

namespace coact {

enum class Provenance { self, oracle_kept, oracle_flipped, augmented };

inline const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::self: return "self";
        case Provenance::oracle_kept: return "oracle_kept";
        case Provenance::oracle_flipped: return "oracle_flipped";
        case Provenance::augmented: return "augmented";
    }
    return "?";
}

// A preference pair: chosen is asserted better than rejected. Consistency
// scores are exact multiples of 1/k.
struct ScoredPair {
    std::int64_t instruction_id = 0;
    Response chosen;
    Response rejected;
    Rational chosen_consistency{0, 1};
    Rational rejected_consistency{0, 1};
    Provenance provenance = Provenance::self;
};

// score[i] = (# responses sharing responses[i].answer) / k.
inline std::vector<Rational> consistency_scores(const std::vector<Response>& responses) {
    if (responses.size() < 2) throw std::invalid_argument("consistency_scores: need at least 2 responses");
    const std::int64_t k = static_cast<std::int64_t>(responses.size());
    std::vector<Rational> scores;
    scores.reserve(responses.size());
    for (const auto& r : responses) {
        std::int64_t count = 0;
        for (const auto& other : responses)
            if (other.answer == r.answer) ++count;
        scores.emplace_back(count, k);
    }
    return scores;
}

// Chosen = most consistent response, rejected = least consistent response
// with a different answer; both ties break to the lowest response index.
// All k answers identical -> saturated, no pair (nullopt).
inline std::optional<ScoredPair> build_pair(const Instruction& instruction,
                                            const std::vector<Response>& responses) {
    auto scores = consistency_scores(responses);
    std::size_t chosen = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[chosen]) chosen = i;

    std::optional<std::size_t> rejected;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (responses[i].answer == responses[chosen].answer) continue;
        if (!rejected || scores[i] < scores[*rejected]) rejected = i;
    }
    if (!rejected) return std::nullopt;  // saturated

    ScoredPair pair;
    pair.instruction_id = instruction.id;
    pair.chosen = responses[chosen];
    pair.rejected = responses[*rejected];
    pair.chosen_consistency = scores[chosen];
    pair.rejected_consistency = scores[*rejected];
    pair.provenance = Provenance::self;
    return pair;
}

struct ConsistencyPartition {
    std::vector<ScoredPair> high;  // chosen consistency >= tau
    std::vector<ScoredPair> low;   // the rest
};

// tau > 1 is accepted as the documented degenerate setting where every
// pair lands in `low` and the loop reduces to pure active learning.
inline ConsistencyPartition partition(const std::vector<ScoredPair>& pairs, Rational tau) {
    if (tau <= Rational(0, 1)) throw std::invalid_argument("partition: tau must be positive");
    ConsistencyPartition out;
    for (const auto& p : pairs) {
        if (p.provenance != Provenance::self)
            throw std::invalid_argument("partition: expects self-labeled pairs only");
        (p.chosen_consistency >= tau ? out.high : out.low).push_back(p);
    }
    return out;
}

}  // namespace coact
