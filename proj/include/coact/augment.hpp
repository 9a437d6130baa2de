#pragma once

#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "coact/consistency.hpp"
#include "coact/oracle.hpp"
#include "coact/synthworld.hpp"

namespace coact {

struct AugmentationConfig {
    bool enabled = true;
    int n_anchors = 3;        // in-context examples per generation
    int n_new = 0;            // 0 -> harness default (half the batch size)
    double jitter_sigma = 0.5;
};

// Selected-high pairs whose verdict kept the chosen response and verified
// it correct; these anchor the instruction generation.
inline std::vector<ScoredPair> extract_correct(const std::vector<ScoredPair>& selected_high,
                                               const std::vector<OracleVerdict>& verdicts) {
    if (selected_high.size() != verdicts.size())
        throw std::invalid_argument("extract_correct: selected/verdicts misaligned");
    std::vector<ScoredPair> out;
    for (std::size_t i = 0; i < selected_high.size(); ++i)
        if (verdicts[i].chosen_preferred && verdicts[i].chosen_correct) out.push_back(selected_high[i]);
    return out;
}

struct GeneratedInstructions {
    std::vector<Instruction> instructions;
    bool skipped = false;  // no anchors were available; the iteration continues
};

// Anchor-conditioned generation: each new instruction picks one anchor
// from a freshly drawn subset of n_anchors anchors, perturbs its features
// with isotropic noise of scale jitter_sigma, and takes the environment's
// label. Generated ids start at id_base.
inline GeneratedInstructions generate_instructions(const Environment& env,
                                                   const std::vector<ScoredPair>& anchors,
                                                   const AugmentationConfig& cfg,
                                                   const InstructionMap& instructions,
                                                   std::int64_t id_base, Rng& rng) {
    if (cfg.n_anchors < 1) throw std::invalid_argument("generate_instructions: n_anchors must be >= 1");
    if (cfg.n_new < 0) throw std::invalid_argument("generate_instructions: n_new must be >= 0");
    GeneratedInstructions out;
    if (cfg.n_new == 0) return out;
    if (anchors.empty()) {
        out.skipped = true;
        return out;
    }
    const std::size_t subset = std::min<std::size_t>(cfg.n_anchors, anchors.size());
    out.instructions.reserve(cfg.n_new);
    for (int i = 0; i < cfg.n_new; ++i) {
        auto picked = rng.sample_indices(anchors.size(), subset);
        const auto& anchor_pair = anchors[picked[rng.uniform_int(subset)]];
        const Instruction& anchor = instruction_at(instructions, anchor_pair.instruction_id);
        Instruction ins;
        ins.id = id_base + i;
        ins.features.resize(anchor.features.size());
        for (std::size_t j = 0; j < anchor.features.size(); ++j)
            ins.features[j] = anchor.features[j] + cfg.jitter_sigma * rng.normal();
        ins.true_answer = env.label_of(ins.features);
        ins.ood = false;
        ins.origin = anchor.id;
        out.instructions.push_back(std::move(ins));
    }
    return out;
}

// Self-consistency labeling of freshly generated instructions; keeps only
// pairs whose chosen consistency clears tau.
inline std::vector<ScoredPair> self_label_new(const Policy& policy,
                                              const std::vector<Instruction>& new_instructions, int k,
                                              const std::vector<double>& temperatures, Rational tau,
                                              const LengthModel& length_model, Rng& rng) {
    std::vector<ScoredPair> out;
    for (const auto& ins : new_instructions) {
        auto responses = sample_responses(policy, ins, k, temperatures, length_model, rng);
        auto pair = build_pair(ins, responses);
        if (!pair) continue;  // saturated
        if (pair->chosen_consistency >= tau) {
            pair->provenance = Provenance::augmented;
            out.push_back(*pair);
        }
    }
    return out;
}

// D_AI = (high \ selected_high) ++ augmented. selected_high must be a
// subset of high by instruction id, and no id may repeat in the result.
inline std::vector<ScoredPair> assemble_ai_dataset(const std::vector<ScoredPair>& high,
                                                   const std::vector<ScoredPair>& selected_high,
                                                   const std::vector<ScoredPair>& augmented) {
    std::unordered_set<std::int64_t> high_ids;
    for (const auto& p : high) high_ids.insert(p.instruction_id);
    std::unordered_set<std::int64_t> selected_ids;
    for (const auto& p : selected_high) {
        if (!high_ids.count(p.instruction_id))
            throw std::invalid_argument("assemble_ai_dataset: selected id " +
                                        std::to_string(p.instruction_id) + " not in high subset");
        selected_ids.insert(p.instruction_id);
    }
    std::vector<ScoredPair> out;
    std::unordered_set<std::int64_t> seen;
    for (const auto& p : high) {
        if (selected_ids.count(p.instruction_id)) continue;
        if (!seen.insert(p.instruction_id).second)
            throw std::invalid_argument("assemble_ai_dataset: duplicate instruction id in high subset");
        out.push_back(p);
    }
    for (const auto& p : augmented) {
        if (!seen.insert(p.instruction_id).second)
            throw std::invalid_argument("assemble_ai_dataset: augmented id collides with high subset");
        out.push_back(p);
    }
    return out;
}

}  // namespace coact
