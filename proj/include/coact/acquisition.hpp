#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "coact/consistency.hpp"
#include "coact/synthworld.hpp"

namespace coact {

// Per-iteration oracle budget split across the two consistency subsets.
struct Budget {
    int low = 0;
    int high = 0;
    int total() const { return low + high; }
};

struct BudgetAllocation {
    Budget budget;
    int unspent = 0;
};

// low = round(split*M) capped by availability; shortfall on either side
// reallocates to the other before going unspent.
inline BudgetAllocation allocate_budget(int total, int low_available, int high_available, double split) {
    if (total < 0) throw std::invalid_argument("allocate_budget: negative budget");
    if (low_available < 0 || high_available < 0) throw std::invalid_argument("allocate_budget: negative availability");
    if (split < 0.0 || split > 1.0) throw std::invalid_argument("allocate_budget: split outside [0,1]");
    int low = static_cast<int>(std::llround(split * total));
    low = std::min(low, low_available);
    int high = std::min(total - low, high_available);
    low = std::min(low + (total - low - high), low_available);
    BudgetAllocation out;
    out.budget = Budget{low, high};
    out.unspent = total - low - high;
    return out;
}

// Normalized embeddings of oracle-verified correct instructions; the
// reference set for k-NN distances. Deduplicated by instruction id.
struct IdFeatureSet {
    std::vector<Vec> features;  // unit norm
    std::unordered_set<std::int64_t> ids;

    std::size_t size() const { return features.size(); }
    bool contains(std::int64_t id) const { return ids.count(id) != 0; }
};

inline Vec normalize_feature(const Vec& raw) {
    double n = norm2(raw);
    if (n <= 0.0) throw std::invalid_argument("normalize_feature: zero vector");
    Vec out(raw);
    for (double& v : out) v /= n;
    return out;
}

// k-th smallest Euclidean distance from query to the ID vectors; k=1 is
// the minimum distance.
inline double knn_distance(const Vec& query, const IdFeatureSet& id_set, int k) {
    if (k < 1) throw std::invalid_argument("knn_distance: k must be >= 1");
    if (id_set.size() < static_cast<std::size_t>(k))
        throw std::invalid_argument("knn_distance: ID set smaller than k");
    std::vector<double> dists;
    dists.reserve(id_set.size());
    for (const auto& z : id_set.features) dists.push_back(distance2(query, z));
    std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());
    return dists[k - 1];
}

// Smallest chosen-consistency pairs first; ties to the lowest instruction
// id. Returns min(m, |low_pairs|) pairs sorted ascending.
inline std::vector<ScoredPair> select_low(std::vector<ScoredPair> low_pairs, int m) {
    if (m < 0) throw std::invalid_argument("select_low: negative m");
    std::sort(low_pairs.begin(), low_pairs.end(), [](const ScoredPair& a, const ScoredPair& b) {
        if (a.chosen_consistency != b.chosen_consistency) return a.chosen_consistency < b.chosen_consistency;
        return a.instruction_id < b.instruction_id;
    });
    if (static_cast<std::size_t>(m) < low_pairs.size()) low_pairs.resize(m);
    return low_pairs;
}

struct HighSelection {
    std::vector<ScoredPair> selected;
    std::vector<double> scores;   // k-NN distance per selected pair; empty on fallback
    bool random_fallback = false; // ID set too small for k-NN (cold start)
};

// Largest k-NN distance first; ties to the lowest instruction id. Falls
// back to a uniform random pick while the ID set has fewer than k_nn
// members (iteration 1).
inline HighSelection select_high(const std::vector<ScoredPair>& high_pairs, const InstructionMap& instructions,
                                 const IdFeatureSet& id_set, int m, int k_nn, Rng& rng) {
    if (m < 0) throw std::invalid_argument("select_high: negative m");
    if (k_nn < 1) throw std::invalid_argument("select_high: k_nn must be >= 1");
    HighSelection out;
    if (m == 0 || high_pairs.empty()) return out;

    if (id_set.size() < static_cast<std::size_t>(k_nn)) {
        out.random_fallback = true;
        auto idx = rng.sample_indices(high_pairs.size(), static_cast<std::size_t>(m));
        for (auto i : idx) out.selected.push_back(high_pairs[i]);
        return out;
    }

    struct Scored {
        double dist;
        std::size_t index;
        std::int64_t id;
    };
    std::vector<Scored> scored;
    scored.reserve(high_pairs.size());
    for (std::size_t i = 0; i < high_pairs.size(); ++i) {
        const auto& ins = instruction_at(instructions, high_pairs[i].instruction_id);
        double d = knn_distance(normalize_feature(ins.features), id_set, k_nn);
        scored.push_back({d, i, high_pairs[i].instruction_id});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.dist != b.dist) return a.dist > b.dist;
        return a.id < b.id;
    });
    std::size_t take = std::min<std::size_t>(m, scored.size());
    for (std::size_t i = 0; i < take; ++i) {
        out.selected.push_back(high_pairs[scored[i].index]);
        out.scores.push_back(scored[i].dist);
    }
    return out;
}

// Monte Carlo estimate of the predictive entropy: -(1/k) sum of the
// log-probs of k fresh samples.
inline double predictive_entropy(const Policy& policy, const Instruction& instruction, int k,
                                 const std::vector<double>& temperatures, const LengthModel& length_model,
                                 Rng& rng) {
    if (k < 1) throw std::invalid_argument("predictive_entropy: k must be >= 1");
    if (temperatures.empty()) throw std::invalid_argument("predictive_entropy: temperatures must be non-empty");
    double sum = 0.0;
    for (int i = 0; i < k; ++i)
        sum += draw_response(policy, instruction, temperatures[i % temperatures.size()], length_model, rng).logprob;
    return -sum / k;
}

// beta * (log pi_theta(answer|x) - log pi_ref(answer|x)) at temperature 1.
inline double implicit_reward(const Policy& policy, const Policy& reference, const Instruction& instruction,
                              const Response& response, double beta) {
    double lp = answer_log_probs(policy, instruction.features, 1.0)[response.answer];
    double lr = answer_log_probs(reference, instruction.features, 1.0)[response.answer];
    return beta * (lp - lr);
}

enum class Strategy { coact, random, entropy, pref_certainty, pref_ent };

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::coact: return "coact";
        case Strategy::random: return "random";
        case Strategy::entropy: return "entropy";
        case Strategy::pref_certainty: return "pref_certainty";
        case Strategy::pref_ent: return "pref_ent";
    }
    return "?";
}

inline Strategy parse_strategy(const std::string& s) {
    if (s == "coact") return Strategy::coact;
    if (s == "random") return Strategy::random;
    if (s == "entropy") return Strategy::entropy;
    if (s == "pref_certainty") return Strategy::pref_certainty;
    if (s == "pref_ent") return Strategy::pref_ent;
    throw std::invalid_argument("unknown strategy '" + s + "'");
}

struct BaselineParams {
    int k = 8;
    std::vector<double> temperatures;
    double beta = 0.5;
    LengthModel length_model;
};

namespace detail {

struct InstructionScore {
    double score;
    std::size_t index;
    std::int64_t id;
};

// TopK by score with the given direction; ties to the lowest id.
inline std::vector<InstructionScore> topk(std::vector<InstructionScore> scored, std::size_t m, bool largest) {
    std::sort(scored.begin(), scored.end(), [largest](const InstructionScore& a, const InstructionScore& b) {
        if (a.score != b.score) return largest ? a.score > b.score : a.score < b.score;
        return a.id < b.id;
    });
    if (scored.size() > m) scored.resize(m);
    return scored;
}

// |r_hat(x,y1) - r_hat(x,y2)| over two fresh temperature-1 samples.
inline double preference_certainty(const Policy& policy, const Policy& reference, const Instruction& ins,
                                   const BaselineParams& params, Rng& rng) {
    Response y1 = draw_response(policy, ins, 1.0, params.length_model, rng);
    Response y2 = draw_response(policy, ins, 1.0, params.length_model, rng);
    return std::abs(implicit_reward(policy, reference, ins, y1, params.beta) -
                    implicit_reward(policy, reference, ins, y2, params.beta));
}

}  // namespace detail

struct BaselineSelection {
    std::vector<Instruction> instructions;
    std::vector<double> scores;  // per selected instruction; empty for random
    std::size_t filtered_to = 0; // pref_ent stage-1 survivor count, else 0
};

// The four baseline acquisition strategies. `reference` is the run's
// initial policy (the theta_0 of the implicit reward).
inline BaselineSelection select_baseline(Strategy strategy, const std::vector<Instruction>& batch,
                                         const Policy& policy, const Policy& reference, int m,
                                         const BaselineParams& params, Rng& rng) {
    if (m < 0) throw std::invalid_argument("select_baseline: negative m");
    BaselineSelection out;
    switch (strategy) {
        case Strategy::random: {
            if (static_cast<std::size_t>(m) > batch.size())
                throw std::invalid_argument("select_baseline: random selection larger than batch");
            for (auto i : rng.sample_indices(batch.size(), static_cast<std::size_t>(m)))
                out.instructions.push_back(batch[i]);
            return out;
        }
        case Strategy::entropy: {
            std::vector<detail::InstructionScore> scored;
            for (std::size_t i = 0; i < batch.size(); ++i)
                scored.push_back({predictive_entropy(policy, batch[i], params.k, params.temperatures,
                                                     params.length_model, rng),
                                  i, batch[i].id});
            for (const auto& s : detail::topk(scored, m, /*largest=*/true)) {
                out.instructions.push_back(batch[s.index]);
                out.scores.push_back(s.score);
            }
            return out;
        }
        case Strategy::pref_certainty: {
            std::vector<detail::InstructionScore> scored;
            for (std::size_t i = 0; i < batch.size(); ++i)
                scored.push_back({detail::preference_certainty(policy, reference, batch[i], params, rng), i,
                                  batch[i].id});
            for (const auto& s : detail::topk(scored, m, /*largest=*/false)) {
                out.instructions.push_back(batch[s.index]);
                out.scores.push_back(s.score);
            }
            return out;
        }
        case Strategy::pref_ent: {
            // Stage 1: entropy filter to K = 2M; stage 2: certainty on the survivors.
            std::vector<detail::InstructionScore> ent;
            for (std::size_t i = 0; i < batch.size(); ++i)
                ent.push_back({predictive_entropy(policy, batch[i], params.k, params.temperatures,
                                                  params.length_model, rng),
                               i, batch[i].id});
            auto filtered = detail::topk(ent, static_cast<std::size_t>(2) * m, /*largest=*/true);
            out.filtered_to = filtered.size();
            std::vector<detail::InstructionScore> cert;
            for (const auto& f : filtered)
                cert.push_back({detail::preference_certainty(policy, reference, batch[f.index], params, rng),
                                f.index, batch[f.index].id});
            for (const auto& s : detail::topk(cert, m, /*largest=*/false)) {
                out.instructions.push_back(batch[s.index]);
                out.scores.push_back(s.score);
            }
            return out;
        }
        case Strategy::coact:
            throw std::invalid_argument("select_baseline: coact is not a baseline strategy");
    }
    throw std::invalid_argument("select_baseline: unknown strategy");
}

}  // namespace coact
