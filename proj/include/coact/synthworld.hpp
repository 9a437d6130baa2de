#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "coact/linalg.hpp"
#include "coact/rng.hpp"

namespace coact {

// One task unit. `features` doubles as the embedding phi(x); `ood` is
// hidden from the learner and read only by evaluation code.
struct Instruction {
    std::int64_t id = 0;
    Vec features;
    int true_answer = 0;
    bool ood = false;
    std::int64_t origin = -1;  // anchor instruction id when generated by augmentation
};

// One sampled answer. `logprob` is the natural-log probability of the
// answer under the generating policy at `temperature`.
struct Response {
    int answer = 0;
    double logprob = 0.0;
    double temperature = 1.0;
    int length = 1;
};

// Linear-softmax answer policy: logits = weights * features.
struct Policy {
    Mat weights;  // V x d

    int vocab_size() const { return static_cast<int>(weights.rows); }
    int feature_dim() const { return static_cast<int>(weights.cols); }
};

struct LengthModel {
    enum class Kind { constant, geometric };
    Kind kind = Kind::constant;
    double mean = 1.0;

    int sample(Rng& rng) const {
        if (kind == Kind::constant) return static_cast<int>(mean < 1.0 ? 1.0 : mean + 0.5);
        return rng.geometric(mean);
    }
};

struct EnvironmentConfig {
    int feature_dim = 0;
    int vocab_size = 0;
    std::vector<Vec> id_centers;
    std::vector<Vec> ood_centers;
    double ood_fraction = 0.0;
    double separation = 0.0;
    double cluster_noise = 1.0;  // isotropic feature noise around a center
    std::uint64_t seed = 0;
    LengthModel length_model;
    std::optional<Mat> true_weights;  // drawn from the seed when absent
};

struct Environment {
    EnvironmentConfig config;
    Mat true_weights;  // V x d; true_answer = argmax(true_weights * x)

    int label_of(const Vec& features) const {
        return static_cast<int>(argmax_lowest(matvec(true_weights, features)));
    }
};

inline Environment make_environment(const EnvironmentConfig& cfg) {
    if (cfg.feature_dim < 1) throw std::invalid_argument("make_environment: feature_dim must be >= 1");
    if (cfg.vocab_size < 2) throw std::invalid_argument("make_environment: vocab_size must be >= 2");
    if (cfg.id_centers.empty()) throw std::invalid_argument("make_environment: need at least one ID center");
    if (cfg.ood_fraction < 0.0 || cfg.ood_fraction > 1.0)
        throw std::invalid_argument("make_environment: ood_fraction outside [0,1]");
    if (cfg.ood_fraction > 0.0 && cfg.ood_centers.empty())
        throw std::invalid_argument("make_environment: ood_fraction > 0 but no OOD centers");
    if (cfg.cluster_noise < 0.0) throw std::invalid_argument("make_environment: cluster_noise must be >= 0");

    auto check_center = [&](const Vec& c, const char* kind) {
        if (static_cast<int>(c.size()) != cfg.feature_dim)
            throw std::invalid_argument(std::string("make_environment: ") + kind + " center has wrong dimension");
        for (double v : c)
            if (!std::isfinite(v)) throw std::invalid_argument(std::string("make_environment: non-finite ") + kind + " center");
    };
    for (const auto& c : cfg.id_centers) check_center(c, "ID");
    for (const auto& c : cfg.ood_centers) check_center(c, "OOD");

    for (const auto& o : cfg.ood_centers)
        for (const auto& c : cfg.id_centers)
            if (distance2(o, c) < cfg.separation)
                throw std::invalid_argument("make_environment: separation unachievable for given centers");

    Environment env;
    env.config = cfg;
    if (cfg.true_weights) {
        if (cfg.true_weights->rows != static_cast<std::size_t>(cfg.vocab_size) ||
            cfg.true_weights->cols != static_cast<std::size_t>(cfg.feature_dim))
            throw std::invalid_argument("make_environment: true_weights must be V x d");
        env.true_weights = *cfg.true_weights;
    } else {
        Rng rng(derive_seed(cfg.seed, "true_weights"));
        env.true_weights = Mat(cfg.vocab_size, cfg.feature_dim);
        for (double& w : env.true_weights.data) w = rng.normal();
    }
    return env;
}

// Draws `size` instructions. Pure in (config, seed, size, id_base):
// identical inputs give bit-identical pools.
inline std::vector<Instruction> generate_pool(const Environment& env, std::size_t size,
                                              std::int64_t id_base = 0) {
    if (size < 1) throw std::invalid_argument("generate_pool: size must be >= 1");
    const auto& cfg = env.config;
    Rng rng(derive_seed(cfg.seed, "pool", static_cast<std::uint64_t>(id_base)));
    std::vector<Instruction> out;
    out.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
        Instruction ins;
        ins.id = id_base + static_cast<std::int64_t>(i);
        bool ood = !cfg.ood_centers.empty() && rng.uniform() < cfg.ood_fraction;
        const auto& centers = ood ? cfg.ood_centers : cfg.id_centers;
        const Vec& c = centers[rng.uniform_int(centers.size())];
        ins.features.resize(cfg.feature_dim);
        for (int j = 0; j < cfg.feature_dim; ++j) ins.features[j] = c[j] + cfg.cluster_noise * rng.normal();
        ins.true_answer = env.label_of(ins.features);
        ins.ood = ood;
        out.push_back(std::move(ins));
    }
    return out;
}

struct BatchDraw {
    std::vector<Instruction> batch;
    std::vector<Instruction> remaining;  // pool view with the batch consumed
};

// Samples without replacement; the remaining pool is returned so callers
// never reuse an instruction across iterations.
inline BatchDraw sample_batch(const std::vector<Instruction>& pool, std::size_t batch_size, Rng& rng) {
    if (batch_size > pool.size()) throw std::invalid_argument("sample_batch: batch larger than pool");
    auto picked = rng.sample_indices(pool.size(), batch_size);
    std::vector<bool> taken(pool.size(), false);
    BatchDraw draw;
    draw.batch.reserve(batch_size);
    for (auto i : picked) {
        taken[i] = true;
        draw.batch.push_back(pool[i]);
    }
    draw.remaining.reserve(pool.size() - batch_size);
    for (std::size_t i = 0; i < pool.size(); ++i)
        if (!taken[i]) draw.remaining.push_back(pool[i]);
    return draw;
}

inline Vec answer_log_probs(const Policy& policy, const Vec& features, double temperature) {
    if (temperature <= 0.0) throw std::invalid_argument("answer_log_probs: temperature must be positive");
    Vec logits = matvec(policy.weights, features);
    for (double& v : logits) v /= temperature;
    return log_softmax(std::move(logits));
}

inline double policy_prob(const Policy& policy, const Instruction& instruction, int answer,
                          double temperature) {
    if (answer < 0 || answer >= policy.vocab_size()) throw std::invalid_argument("policy_prob: answer out of range");
    return std::exp(answer_log_probs(policy, instruction.features, temperature)[answer]);
}

// One sampled response at the given temperature (inverse-CDF draw).
inline Response draw_response(const Policy& policy, const Instruction& instruction, double temperature,
                              const LengthModel& length_model, Rng& rng) {
    Vec lp = answer_log_probs(policy, instruction.features, temperature);
    double u = rng.uniform();
    double cum = 0.0;
    int answer = static_cast<int>(lp.size()) - 1;
    for (std::size_t a = 0; a < lp.size(); ++a) {
        cum += std::exp(lp[a]);
        if (u < cum) {
            answer = static_cast<int>(a);
            break;
        }
    }
    Response r;
    r.answer = answer;
    r.logprob = lp[answer];
    r.temperature = temperature;
    r.length = length_model.sample(rng);
    return r;
}

// k responses; response i uses temperatures[i mod |temperatures|].
inline std::vector<Response> sample_responses(const Policy& policy, const Instruction& instruction, int k,
                                              const std::vector<double>& temperatures,
                                              const LengthModel& length_model, Rng& rng) {
    if (k < 2) throw std::invalid_argument("sample_responses: k must be >= 2 (a pair needs two candidates)");
    if (temperatures.empty()) throw std::invalid_argument("sample_responses: temperatures must be non-empty");
    for (double t : temperatures)
        if (t <= 0.0) throw std::invalid_argument("sample_responses: temperatures must be positive");
    std::vector<Response> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i)
        out.push_back(draw_response(policy, instruction, temperatures[i % temperatures.size()], length_model, rng));
    return out;
}

using InstructionMap = std::unordered_map<std::int64_t, Instruction>;

inline InstructionMap index_instructions(const std::vector<Instruction>& instructions) {
    InstructionMap map;
    map.reserve(instructions.size());
    for (const auto& ins : instructions) map[ins.id] = ins;
    return map;
}

inline const Instruction& instruction_at(const InstructionMap& map, std::int64_t id) {
    auto it = map.find(id);
    if (it == map.end()) throw std::invalid_argument("unknown instruction id " + std::to_string(id));
    return it->second;
}

}  // namespace coact
