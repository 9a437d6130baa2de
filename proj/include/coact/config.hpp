#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "coact/acquisition.hpp"
#include "coact/augment.hpp"
#include "coact/oracle.hpp"
#include "coact/rational.hpp"
#include "coact/synthworld.hpp"
#include "coact/trainer.hpp"

namespace coact {

// Full experiment configuration. File values override the defaults here;
// CLI flags override the file (flags > file > defaults).
struct RunConfig {
    EnvironmentConfig environment;
    int iterations = 4;
    std::size_t pool_size = 0;  // 0 -> iterations * batch_size
    std::size_t test_size = 1000;
    std::size_t batch_size = 1675;
    int k = 8;
    std::vector<double> temperatures{0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7};
    Rational tau{4, 8};
    int budget = 300;  // M
    double split = 0.5;
    int k_nn = 1;
    OracleModel oracle;
    AugmentationConfig augmentation;
    bool self_label = true;
    TrainConfig trainer;
    // theta_0 = init_scale * true_weights + init_noise * N(0,1) plus a
    // confident spurious association per OOD center scaled by
    // init_ood_confusion: the stand-in for a base model with partial task
    // capability that extrapolates wrongly off-distribution.
    double init_scale = 0.3;
    double init_noise = 0.35;
    double init_ood_confusion = 0.0;
    Strategy strategy = Strategy::coact;
    std::uint64_t seed = 0;
    std::string output_dir = "out";

    std::size_t effective_pool_size() const {
        return pool_size ? pool_size : static_cast<std::size_t>(iterations) * batch_size;
    }
    int effective_n_new() const {
        return augmentation.n_new ? augmentation.n_new : static_cast<int>(batch_size / 2);
    }
};

namespace detail {

using json = nlohmann::json;

// Unknown keys are a hard error so a typo never silently falls back to a
// default.
inline void require_known_keys(const json& obj, const std::vector<std::string>& known,
                               const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool found = false;
        for (const auto& k : known)
            if (it.key() == k) {
                found = true;
                break;
            }
        if (!found) throw std::runtime_error("unknown config key '" + it.key() + "' in " + where);
    }
}

inline Rational tau_from_json(const json& j) {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number()) return rationalize(j.get<double>());
    throw std::runtime_error("config key 'tau' must be a number or a \"n/d\" string");
}

inline LengthModel length_model_from_json(const json& j) {
    LengthModel lm;
    if (j.is_string()) {
        if (j.get<std::string>() != "constant")
            throw std::runtime_error("config key 'length_model' string form must be \"constant\"");
        return lm;
    }
    require_known_keys(j, {"kind", "mean"}, "environment.length_model");
    std::string kind = j.value("kind", "constant");
    if (kind == "constant")
        lm.kind = LengthModel::Kind::constant;
    else if (kind == "geometric")
        lm.kind = LengthModel::Kind::geometric;
    else
        throw std::runtime_error("unknown length_model kind '" + kind + "'");
    lm.mean = j.value("mean", 1.0);
    return lm;
}

inline EnvironmentConfig environment_from_json(const json& j) {
    require_known_keys(j,
                       {"feature_dim", "vocab_size", "id_centers", "ood_centers", "ood_fraction",
                        "separation", "cluster_noise", "seed", "length_model", "true_weights"},
                       "environment");
    EnvironmentConfig env;
    env.feature_dim = j.at("feature_dim").get<int>();
    env.vocab_size = j.at("vocab_size").get<int>();
    env.id_centers = j.at("id_centers").get<std::vector<Vec>>();
    if (j.contains("ood_centers")) env.ood_centers = j.at("ood_centers").get<std::vector<Vec>>();
    env.ood_fraction = j.value("ood_fraction", 0.0);
    env.separation = j.value("separation", 0.0);
    env.cluster_noise = j.value("cluster_noise", 1.0);
    env.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("length_model")) env.length_model = length_model_from_json(j.at("length_model"));
    if (j.contains("true_weights")) {
        auto rows = j.at("true_weights").get<std::vector<Vec>>();
        Mat w(rows.size(), rows.empty() ? 0 : rows[0].size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != w.cols) throw std::runtime_error("environment.true_weights rows differ in length");
            for (std::size_t c = 0; c < w.cols; ++c) w(i, c) = rows[i][c];
        }
        env.true_weights = std::move(w);
    }
    return env;
}

inline OracleModel oracle_from_json(const json& j) {
    require_known_keys(j, {"kind", "flip_rate", "corrupt_correctness", "tie_break"}, "oracle");
    OracleModel oracle;
    std::string kind = j.value("kind", "ground_truth");
    if (kind == "ground_truth")
        oracle.kind = OracleModel::Kind::ground_truth;
    else if (kind == "noisy")
        oracle.kind = OracleModel::Kind::noisy;
    else
        throw std::runtime_error("unknown oracle kind '" + kind + "'");
    oracle.flip_rate = j.value("flip_rate", 0.0);
    if (oracle.flip_rate < 0.0 || oracle.flip_rate >= 0.5)
        throw std::runtime_error("oracle.flip_rate must be in [0, 1/2)");
    oracle.corrupt_correctness = j.value("corrupt_correctness", false);
    std::string tie = j.value("tie_break", "keep_order");
    if (tie == "keep_order")
        oracle.tie_break = OracleModel::TieBreak::keep_order;
    else if (tie == "chosen_logprob")
        oracle.tie_break = OracleModel::TieBreak::chosen_logprob;
    else
        throw std::runtime_error("unknown oracle tie_break '" + tie + "'");
    return oracle;
}

inline AugmentationConfig augmentation_from_json(const json& j) {
    require_known_keys(j, {"enabled", "n_anchors", "n_new", "jitter_sigma"}, "augmentation");
    AugmentationConfig aug;
    aug.enabled = j.value("enabled", true);
    aug.n_anchors = j.value("n_anchors", 3);
    aug.n_new = j.value("n_new", 0);
    aug.jitter_sigma = j.value("jitter_sigma", 0.5);
    return aug;
}

inline TrainConfig trainer_from_json(const json& j) {
    require_known_keys(j,
                       {"beta", "alpha", "learning_rate", "epochs", "batch_size", "reference_mode", "nll_sign"},
                       "trainer");
    TrainConfig t;
    t.beta = j.value("beta", 0.5);
    t.alpha = j.value("alpha", 1.0);
    t.learning_rate = j.value("learning_rate", 0.05);
    t.epochs = j.value("epochs", 10);
    t.batch_size = j.value("batch_size", 16);
    std::string mode = j.value("reference_mode", "per_iteration");
    if (mode == "initial")
        t.reference_mode = TrainConfig::ReferenceMode::initial;
    else if (mode == "per_iteration")
        t.reference_mode = TrainConfig::ReferenceMode::per_iteration;
    else
        throw std::runtime_error("unknown trainer reference_mode '" + mode + "'");
    t.nll_sign = j.value("nll_sign", 1);
    if (t.nll_sign != 1 && t.nll_sign != -1) throw std::runtime_error("trainer.nll_sign must be +1 or -1");
    return t;
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
    detail::require_known_keys(j,
                               {"environment", "iterations", "pool_size", "test_size", "batch_size", "k",
                                "temperatures", "tau", "budget", "split", "k_nn", "oracle", "augmentation",
                                "self_label", "trainer", "init_scale", "init_noise", "init_ood_confusion", "strategy", "seed",
                                "output_dir"},
                               "run config");
    RunConfig cfg;
    cfg.environment = detail::environment_from_json(j.at("environment"));
    cfg.iterations = j.value("iterations", 4);
    cfg.pool_size = j.value("pool_size", std::size_t{0});
    cfg.test_size = j.value("test_size", std::size_t{1000});
    cfg.batch_size = j.value("batch_size", std::size_t{1675});
    cfg.k = j.value("k", 8);
    if (j.contains("temperatures")) cfg.temperatures = j.at("temperatures").get<std::vector<double>>();
    if (j.contains("tau")) cfg.tau = detail::tau_from_json(j.at("tau"));
    cfg.budget = j.value("budget", 300);
    cfg.split = j.value("split", 0.5);
    cfg.k_nn = j.value("k_nn", 1);
    if (j.contains("oracle")) cfg.oracle = detail::oracle_from_json(j.at("oracle"));
    if (j.contains("augmentation")) cfg.augmentation = detail::augmentation_from_json(j.at("augmentation"));
    cfg.self_label = j.value("self_label", true);
    if (j.contains("trainer")) cfg.trainer = detail::trainer_from_json(j.at("trainer"));
    cfg.init_scale = j.value("init_scale", 0.3);
    cfg.init_noise = j.value("init_noise", 0.35);
    cfg.init_ood_confusion = j.value("init_ood_confusion", 0.0);
    if (j.contains("strategy")) cfg.strategy = parse_strategy(j.at("strategy").get<std::string>());
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.output_dir = j.value("output_dir", "out");

    if (cfg.iterations < 1) throw std::runtime_error("iterations must be >= 1");
    if (cfg.batch_size < 1) throw std::runtime_error("batch_size must be >= 1");
    if (cfg.k < 2) throw std::runtime_error("k must be >= 2");
    if (cfg.budget < 0) throw std::runtime_error("budget must be >= 0");
    return cfg;
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json env{{"feature_dim", cfg.environment.feature_dim},
                       {"vocab_size", cfg.environment.vocab_size},
                       {"id_centers", cfg.environment.id_centers},
                       {"ood_centers", cfg.environment.ood_centers},
                       {"ood_fraction", cfg.environment.ood_fraction},
                       {"separation", cfg.environment.separation},
                       {"cluster_noise", cfg.environment.cluster_noise},
                       {"seed", cfg.environment.seed},
                       {"length_model",
                        {{"kind", cfg.environment.length_model.kind == LengthModel::Kind::constant
                                      ? "constant"
                                      : "geometric"},
                         {"mean", cfg.environment.length_model.mean}}}};
    if (cfg.environment.true_weights) {
        std::vector<Vec> rows;
        const Mat& w = *cfg.environment.true_weights;
        for (std::size_t i = 0; i < w.rows; ++i)
            rows.emplace_back(w.data.begin() + i * w.cols, w.data.begin() + (i + 1) * w.cols);
        env["true_weights"] = rows;
    }
    return nlohmann::json{
        {"environment", env},
        {"iterations", cfg.iterations},
        {"pool_size", cfg.pool_size},
        {"test_size", cfg.test_size},
        {"batch_size", cfg.batch_size},
        {"k", cfg.k},
        {"temperatures", cfg.temperatures},
        {"tau", cfg.tau.str()},
        {"budget", cfg.budget},
        {"split", cfg.split},
        {"k_nn", cfg.k_nn},
        {"oracle",
         {{"kind", cfg.oracle.kind == OracleModel::Kind::ground_truth ? "ground_truth" : "noisy"},
          {"flip_rate", cfg.oracle.flip_rate},
          {"corrupt_correctness", cfg.oracle.corrupt_correctness},
          {"tie_break",
           cfg.oracle.tie_break == OracleModel::TieBreak::keep_order ? "keep_order" : "chosen_logprob"}}},
        {"augmentation",
         {{"enabled", cfg.augmentation.enabled},
          {"n_anchors", cfg.augmentation.n_anchors},
          {"n_new", cfg.augmentation.n_new},
          {"jitter_sigma", cfg.augmentation.jitter_sigma}}},
        {"self_label", cfg.self_label},
        {"trainer",
         {{"beta", cfg.trainer.beta},
          {"alpha", cfg.trainer.alpha},
          {"learning_rate", cfg.trainer.learning_rate},
          {"epochs", cfg.trainer.epochs},
          {"batch_size", cfg.trainer.batch_size},
          {"reference_mode",
           cfg.trainer.reference_mode == TrainConfig::ReferenceMode::initial ? "initial" : "per_iteration"},
          {"nll_sign", cfg.trainer.nll_sign}}},
        {"init_scale", cfg.init_scale},
        {"init_noise", cfg.init_noise},
        {"init_ood_confusion", cfg.init_ood_confusion},
        {"strategy", strategy_name(cfg.strategy)},
        {"seed", cfg.seed},
        {"output_dir", cfg.output_dir}};
}

// Parses a config file; parse failures carry the file name and the
// parser's line/byte diagnostics.
inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config error in " + path + ": " + e.what());
    }
}

}  // namespace coact
