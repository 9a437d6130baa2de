#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "coact/consistency.hpp"
#include "coact/synthworld.hpp"

namespace coact {

struct TrainConfig {
    enum class ReferenceMode { initial, per_iteration };

    double beta = 0.5;          // preference learning strength
    double alpha = 1.0;         // NLL regularization coefficient
    double learning_rate = 0.05;
    int epochs = 10;
    int batch_size = 16;
    ReferenceMode reference_mode = ReferenceMode::per_iteration;
    // +1 adds the length-weighted NLL of the chosen response to the DPO
    // loss; -1 selects the strict sign reading of the objective.
    int nll_sign = 1;
};

// -log sigma(beta * [(log p(y+) - log ref(y+)) - (log p(y-) - log ref(y-))])
//   + nll_sign * alpha * |y+| * (-log p(y+)),
// all probabilities at temperature 1.
inline double dpo_nll_loss(const Policy& policy, const Policy& reference, const ScoredPair& pair,
                           const InstructionMap& instructions, const TrainConfig& cfg) {
    const Instruction& ins = instruction_at(instructions, pair.instruction_id);
    Vec lp = answer_log_probs(policy, ins.features, 1.0);
    Vec lr = answer_log_probs(reference, ins.features, 1.0);
    int c = pair.chosen.answer;
    int r = pair.rejected.answer;
    double margin = (lp[c] - lr[c]) - (lp[r] - lr[r]);
    double dpo = softplus(-cfg.beta * margin);  // -log sigma(beta * margin)
    double nll = -static_cast<double>(pair.chosen.length) * lp[c];
    return dpo + cfg.nll_sign * cfg.alpha * nll;
}

// Analytic gradient of the mean loss over the batch w.r.t. policy.weights.
inline Mat loss_gradient(const Policy& policy, const Policy& reference, const std::vector<ScoredPair>& batch,
                         const InstructionMap& instructions, const TrainConfig& cfg) {
    if (batch.empty()) throw std::invalid_argument("loss_gradient: empty batch");
    const std::size_t V = policy.weights.rows;
    const std::size_t d = policy.weights.cols;
    Mat grad(V, d);
    for (const auto& pair : batch) {
        const Instruction& ins = instruction_at(instructions, pair.instruction_id);
        Vec lp = answer_log_probs(policy, ins.features, 1.0);
        Vec lr = answer_log_probs(reference, ins.features, 1.0);
        const int c = pair.chosen.answer;
        const int r = pair.rejected.answer;
        double margin = (lp[c] - lr[c]) - (lp[r] - lr[r]);
        // d(-log sigma(beta*m))/dm = -beta * (1 - sigma(beta*m))
        double dpo_coeff = -cfg.beta * logistic(-cfg.beta * margin);
        double nll_coeff = cfg.nll_sign * cfg.alpha * static_cast<double>(pair.chosen.length);
        // d log p(a)/dW_v = (1{v=a} - p_v) x; the p terms of the DPO part cancel.
        for (std::size_t v = 0; v < V; ++v) {
            double pv = std::exp(lp[v]);
            double coeff = dpo_coeff * ((v == static_cast<std::size_t>(c) ? 1.0 : 0.0) -
                                        (v == static_cast<std::size_t>(r) ? 1.0 : 0.0)) -
                           nll_coeff * ((v == static_cast<std::size_t>(c) ? 1.0 : 0.0) - pv);
            for (std::size_t j = 0; j < d; ++j) grad(v, j) += coeff * ins.features[j];
        }
    }
    for (double& g : grad.data) g /= static_cast<double>(batch.size());
    return grad;
}

struct TrainStats {
    std::vector<double> epoch_mean_loss;
    std::vector<double> epoch_mean_margin;  // mean DPO log-ratio margin of (chosen, rejected)
};

// cfg.epochs passes of seeded mini-batch gradient descent; the reference
// stays frozen. Per-epoch mean training loss is reported for monitoring.
inline Policy train_iteration(const Policy& policy, const Policy& reference,
                              const std::vector<ScoredPair>& dataset, const InstructionMap& instructions,
                              const TrainConfig& cfg, Rng& rng, TrainStats* stats = nullptr) {
    if (dataset.empty()) throw std::invalid_argument("train_iteration: empty dataset");
    if (cfg.learning_rate < 0.0) throw std::invalid_argument("train_iteration: negative learning rate");
    if (cfg.epochs < 1 || cfg.batch_size < 1)
        throw std::invalid_argument("train_iteration: epochs and batch_size must be >= 1");

    Policy current = policy;
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        double margin_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<ScoredPair> minibatch;
            minibatch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) minibatch.push_back(dataset[order[i]]);
            if (stats) {
                for (const auto& p : minibatch) {
                    loss_sum += dpo_nll_loss(current, reference, p, instructions, cfg);
                    const Instruction& ins = instruction_at(instructions, p.instruction_id);
                    Vec lp = answer_log_probs(current, ins.features, 1.0);
                    Vec lr = answer_log_probs(reference, ins.features, 1.0);
                    margin_sum += (lp[p.chosen.answer] - lr[p.chosen.answer]) -
                                  (lp[p.rejected.answer] - lr[p.rejected.answer]);
                }
            }
            Mat grad = loss_gradient(current, reference, minibatch, instructions, cfg);
            for (std::size_t i = 0; i < grad.data.size(); ++i)
                current.weights.data[i] -= cfg.learning_rate * grad.data[i];
        }
        if (stats) {
            stats->epoch_mean_loss.push_back(loss_sum / static_cast<double>(dataset.size()));
            stats->epoch_mean_margin.push_back(margin_sum / static_cast<double>(dataset.size()));
        }
    }
    return current;
}

}  // namespace coact
