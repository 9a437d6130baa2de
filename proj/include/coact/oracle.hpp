#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "coact/acquisition.hpp"
#include "coact/consistency.hpp"
#include "coact/synthworld.hpp"

namespace coact {

// Outcome of one preference evaluation. Field names mirror the oracle
// record schema (response1 = chosen, response2 = rejected).
struct OracleVerdict {
    bool chosen_correct = false;
    bool rejected_correct = false;
    bool chosen_preferred = true;
    bool noise_applied = false;
};

struct OracleModel {
    enum class Kind { ground_truth, noisy };
    // Tie rule when both responses are correct or both are wrong.
    enum class TieBreak { keep_order, chosen_logprob };

    Kind kind = Kind::ground_truth;
    double flip_rate = 0.0;  // epsilon_oracle, < 1/2
    bool corrupt_correctness = false;  // sensitivity mode: noise also hits the correctness bits
    TieBreak tie_break = TieBreak::keep_order;
};

// Verify whether chosen > rejected is correct; the noisy kind flips the
// preference bit with probability flip_rate on top of the ground truth.
inline OracleVerdict evaluate_pair(const OracleModel& oracle, const ScoredPair& pair,
                                   const InstructionMap& instructions, Rng& rng) {
    if (pair.chosen.answer == pair.rejected.answer)
        throw std::invalid_argument("evaluate_pair: degenerate pair (chosen == rejected answer)");
    if (oracle.flip_rate < 0.0 || oracle.flip_rate >= 0.5)
        throw std::invalid_argument("evaluate_pair: flip_rate must be in [0, 1/2)");

    const Instruction& ins = instruction_at(instructions, pair.instruction_id);
    OracleVerdict v;
    v.chosen_correct = pair.chosen.answer == ins.true_answer;
    v.rejected_correct = pair.rejected.answer == ins.true_answer;
    if (v.chosen_correct != v.rejected_correct) {
        v.chosen_preferred = v.chosen_correct;
    } else if (oracle.tie_break == OracleModel::TieBreak::chosen_logprob) {
        v.chosen_preferred = pair.chosen.logprob >= pair.rejected.logprob;
    } else {
        v.chosen_preferred = true;
    }

    if (oracle.kind == OracleModel::Kind::noisy) {
        // Fixed draw count per evaluation keeps the stream position
        // independent of outcomes.
        double u_pref = rng.uniform();
        if (u_pref < oracle.flip_rate) {
            v.chosen_preferred = !v.chosen_preferred;
            v.noise_applied = true;
        }
        if (oracle.corrupt_correctness) {
            double u_c = rng.uniform();
            double u_r = rng.uniform();
            if (u_c < oracle.flip_rate) {
                v.chosen_correct = !v.chosen_correct;
                v.noise_applied = true;
            }
            if (u_r < oracle.flip_rate) {
                v.rejected_correct = !v.rejected_correct;
                v.noise_applied = true;
            }
        }
    }
    return v;
}

// Keeps or flips the pair per the verdict. Flipping swaps the responses
// and their consistencies.
inline ScoredPair apply_verdict(ScoredPair pair, const OracleVerdict& verdict) {
    if (verdict.chosen_preferred) {
        pair.provenance = Provenance::oracle_kept;
    } else {
        std::swap(pair.chosen, pair.rejected);
        std::swap(pair.chosen_consistency, pair.rejected_consistency);
        pair.provenance = Provenance::oracle_flipped;
    }
    return pair;
}

// Appends the normalized features of every verified-correct selection
// (chosen preferred and chosen correct); cumulative, deduplicated by id.
inline IdFeatureSet update_id_set(IdFeatureSet prev, const std::vector<ScoredPair>& selected,
                                  const std::vector<OracleVerdict>& verdicts,
                                  const InstructionMap& instructions) {
    if (selected.size() != verdicts.size())
        throw std::invalid_argument("update_id_set: selected/verdicts misaligned");
    for (std::size_t i = 0; i < selected.size(); ++i) {
        const auto& v = verdicts[i];
        if (!(v.chosen_preferred && v.chosen_correct)) continue;
        std::int64_t id = selected[i].instruction_id;
        if (prev.contains(id)) continue;
        prev.features.push_back(normalize_feature(instruction_at(instructions, id).features));
        prev.ids.insert(id);
    }
    return prev;
}

// Fraction of verdicts whose original chosen response was wrong.
inline double incorrect_rate(const std::vector<OracleVerdict>& verdicts) {
    if (verdicts.empty()) throw std::invalid_argument("incorrect_rate: empty verdict list");
    std::size_t wrong = 0;
    for (const auto& v : verdicts)
        if (!v.chosen_correct) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(verdicts.size());
}

}  // namespace coact
