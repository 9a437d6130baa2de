#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "coact/consistency.hpp"
#include "coact/synthworld.hpp"

namespace coact {

// Per-iteration evaluation snapshot; serialized as one metrics.csv row.
struct IterationMetrics {
    int iteration = 0;
    double accuracy = 0.0;          // greedy decode
    double sampled_accuracy = 0.0;  // mean over 3 seeds at T=0.7
    double majority_vote_share = 0.0;
    double pearson_consistency_accuracy = 0.0;
    int oracle_spend = 0;
    int ai_pairs = 0;
    int augmented_pairs = 0;
    std::optional<double> knn_incorrect_rate;
    std::optional<double> random_incorrect_rate;
};

// Fraction of instructions whose argmax-logit answer equals the ground
// truth (ties to the lowest answer index).
inline double accuracy(const Policy& policy, const std::vector<Instruction>& testset) {
    if (testset.empty()) throw std::invalid_argument("accuracy: empty testset");
    std::size_t correct = 0;
    for (const auto& ins : testset) {
        auto logits = matvec(policy.weights, ins.features);
        if (static_cast<int>(argmax_lowest(logits)) == ins.true_answer) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(testset.size());
}

// One-sample decode accuracy at the given temperature, averaged over
// `seeds` derived sampling seeds.
inline double sampled_accuracy(const Policy& policy, const std::vector<Instruction>& testset,
                               double temperature, int seeds, const LengthModel& length_model,
                               std::uint64_t seed) {
    if (testset.empty()) throw std::invalid_argument("sampled_accuracy: empty testset");
    if (seeds < 1) throw std::invalid_argument("sampled_accuracy: seeds must be >= 1");
    double total = 0.0;
    for (int s = 0; s < seeds; ++s) {
        Rng rng(derive_seed(seed, "sampled_accuracy", static_cast<std::uint64_t>(s)));
        std::size_t correct = 0;
        for (const auto& ins : testset)
            if (draw_response(policy, ins, temperature, length_model, rng).answer == ins.true_answer) ++correct;
        total += static_cast<double>(correct) / static_cast<double>(testset.size());
    }
    return total / seeds;
}

// Fraction of instructions whose modal answer over k samples (ties to the
// lowest answer index) equals the ground truth.
inline double majority_vote_share(const Policy& policy, const std::vector<Instruction>& testset, int k,
                                  const std::vector<double>& temperatures, const LengthModel& length_model,
                                  Rng& rng) {
    if (testset.empty()) throw std::invalid_argument("majority_vote_share: empty testset");
    if (k < 1) throw std::invalid_argument("majority_vote_share: k must be >= 1");
    if (temperatures.empty()) throw std::invalid_argument("majority_vote_share: temperatures must be non-empty");
    std::size_t hits = 0;
    std::vector<int> counts(policy.vocab_size());
    for (const auto& ins : testset) {
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < k; ++i)
            ++counts[draw_response(policy, ins, temperatures[i % temperatures.size()], length_model, rng).answer];
        int modal = 0;
        for (int a = 1; a < policy.vocab_size(); ++a)
            if (counts[a] > counts[modal]) modal = a;
        if (modal == ins.true_answer) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(testset.size());
}

// Pearson product-moment correlation; with 0/1 ys this is the
// point-biserial form.
inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("pearson: length mismatch");
    if (xs.size() < 2) throw std::invalid_argument("pearson: need at least 2 points");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double dx = xs[i] - mx;
        double dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw std::domain_error("pearson: zero variance series");
    return sxy / std::sqrt(sxx * syy);
}

// Builds pairs on the testset and correlates C(y+) with chosen-response
// correctness. Saturated instructions enter with C = 1 and the saturated
// answer's correctness.
inline double consistency_accuracy_correlation(const Policy& policy, const std::vector<Instruction>& testset,
                                               int k, const std::vector<double>& temperatures,
                                               const LengthModel& length_model, Rng& rng) {
    if (testset.size() < 2) throw std::invalid_argument("consistency_accuracy_correlation: need >= 2 instructions");
    std::vector<double> consistency, correct;
    for (const auto& ins : testset) {
        auto responses = sample_responses(policy, ins, k, temperatures, length_model, rng);
        auto pair = build_pair(ins, responses);
        if (pair) {
            consistency.push_back(pair->chosen_consistency.value());
            correct.push_back(pair->chosen.answer == ins.true_answer ? 1.0 : 0.0);
        } else {
            consistency.push_back(1.0);
            correct.push_back(responses[0].answer == ins.true_answer ? 1.0 : 0.0);
        }
    }
    return pearson(consistency, correct);
}

// Binned variant: correlates the distinct consistency levels with their
// mean correctness (for comparison against the per-sample form).
inline double consistency_accuracy_correlation_binned(const std::vector<double>& consistency,
                                                      const std::vector<double>& correct) {
    if (consistency.size() != correct.size() || consistency.size() < 2)
        throw std::invalid_argument("binned correlation: bad series");
    std::vector<double> levels(consistency);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    std::vector<double> xs, ys;
    for (double level : levels) {
        double sum = 0.0;
        int n = 0;
        for (std::size_t i = 0; i < consistency.size(); ++i) {
            if (consistency[i] == level) {
                sum += correct[i];
                ++n;
            }
        }
        xs.push_back(level);
        ys.push_back(sum / n);
    }
    return pearson(xs, ys);
}

}  // namespace coact
