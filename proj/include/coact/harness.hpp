#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "coact/acquisition.hpp"
#include "coact/augment.hpp"
#include "coact/config.hpp"
#include "coact/consistency.hpp"
#include "coact/io.hpp"
#include "coact/metrics.hpp"
#include "coact/oracle.hpp"
#include "coact/synthworld.hpp"
#include "coact/theory.hpp"
#include "coact/trainer.hpp"

namespace coact {

struct RunReport {
    std::vector<IterationMetrics> metrics;
    std::vector<Policy> checkpoints;  // theta after each iteration's update
    std::vector<TrainStats> train_stats;
    std::vector<Instruction> augmented_instructions;
    nlohmann::json config_echo;
    std::vector<double> wall_clock_seconds;
    std::vector<nlohmann::json> selection_log;
    std::vector<nlohmann::json> verdict_log;
    std::vector<nlohmann::json> pair_log;
    std::vector<nlohmann::json> notes;  // fallbacks, skipped stages
};

namespace detail {

template <typename F>
auto stage(int iteration, const char* name, F&& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        throw std::runtime_error("iteration " + std::to_string(iteration) + ", stage " + name + ": " +
                                 e.what());
    }
}

// The pool is split into `iterations` equal slices up front, so an
// instruction id can appear in at most one iteration's batch.
inline std::vector<std::vector<Instruction>> slice_pool(std::vector<Instruction> pool, int iterations,
                                                        std::uint64_t seed) {
    Rng rng(seed);
    rng.shuffle(pool);
    std::vector<std::vector<Instruction>> slices(iterations);
    std::size_t base = pool.size() / iterations;
    std::size_t extra = pool.size() % iterations;
    std::size_t at = 0;
    for (int t = 0; t < iterations; ++t) {
        std::size_t len = base + (static_cast<std::size_t>(t) < extra ? 1 : 0);
        slices[t].assign(pool.begin() + at, pool.begin() + at + len);
        at += len;
    }
    return slices;
}

// theta_0 = init_scale * W* + init_noise * G, plus one spurious confident
// association per OOD center (a random answer row biased along the center
// direction). The last term models a base model that extrapolates
// confidently and wrongly off its training distribution.
inline Policy initial_policy(const RunConfig& cfg, const Environment& env) {
    Policy p;
    p.weights = Mat(env.true_weights.rows, env.true_weights.cols);
    Rng rng(derive_seed(cfg.seed, "policy_init"));
    for (std::size_t i = 0; i < p.weights.data.size(); ++i)
        p.weights.data[i] = cfg.init_scale * env.true_weights.data[i] + cfg.init_noise * rng.normal();
    if (cfg.init_ood_confusion > 0.0) {
        for (const auto& center : env.config.ood_centers) {
            double norm = norm2(center);
            if (norm <= 0.0) continue;
            std::size_t row = rng.uniform_int(p.weights.rows);
            for (std::size_t j = 0; j < p.weights.cols; ++j)
                p.weights(row, j) += cfg.init_ood_confusion * center[j] / norm;
        }
    }
    return p;
}

struct IterationData {
    std::vector<Instruction> batch;
    InstructionMap lookup;
    std::vector<ScoredPair> pairs;  // self-labeled, non-saturated
    int saturated = 0;
};

inline IterationData build_pairs_for_batch(const RunConfig& cfg, const std::vector<Instruction>& slice,
                                           const Policy& policy, std::uint64_t iter_seed, int t) {
    IterationData data;
    Rng batch_rng(derive_seed(iter_seed, "batch"));
    data.batch = stage(t, "sample_batch",
                       [&] { return sample_batch(slice, std::min(cfg.batch_size, slice.size()), batch_rng).batch; });
    data.lookup = index_instructions(data.batch);
    stage(t, "build_pairs", [&] {
        for (const auto& ins : data.batch) {
            Rng rng(derive_seed(iter_seed, "responses", static_cast<std::uint64_t>(ins.id)));
            auto responses =
                sample_responses(policy, ins, cfg.k, cfg.temperatures, cfg.environment.length_model, rng);
            auto pair = build_pair(ins, responses);
            if (pair)
                data.pairs.push_back(*pair);
            else
                ++data.saturated;
        }
        return 0;
    });
    return data;
}

inline std::vector<OracleVerdict> evaluate_all(const RunConfig& cfg, const std::vector<ScoredPair>& pairs,
                                               const InstructionMap& lookup, std::uint64_t iter_seed) {
    std::vector<OracleVerdict> verdicts;
    verdicts.reserve(pairs.size());
    for (const auto& p : pairs) {
        Rng rng(derive_seed(iter_seed, "oracle", static_cast<std::uint64_t>(p.instruction_id)));
        verdicts.push_back(evaluate_pair(cfg.oracle, p, lookup, rng));
    }
    return verdicts;
}

inline IterationMetrics evaluate_iteration(const RunConfig& cfg, const Policy& policy,
                                           const std::vector<Instruction>& testset, int t,
                                           std::uint64_t iter_seed) {
    IterationMetrics m;
    m.iteration = t;
    m.accuracy = accuracy(policy, testset);
    m.sampled_accuracy = sampled_accuracy(policy, testset, 0.7, 3, cfg.environment.length_model,
                                          derive_seed(iter_seed, "metrics_sampled"));
    Rng mv_rng(derive_seed(iter_seed, "metrics_majority"));
    m.majority_vote_share =
        majority_vote_share(policy, testset, cfg.k, cfg.temperatures, cfg.environment.length_model, mv_rng);
    Rng corr_rng(derive_seed(iter_seed, "metrics_correlation"));
    try {
        m.pearson_consistency_accuracy = consistency_accuracy_correlation(
            policy, testset, cfg.k, cfg.temperatures, cfg.environment.length_model, corr_rng);
    } catch (const std::domain_error&) {
        m.pearson_consistency_accuracy = std::numeric_limits<double>::quiet_NaN();
    }
    return m;
}

inline void log_selection(RunReport& report, const std::string& strategy, std::int64_t id, double score,
                          int rank, int t) {
    report.selection_log.push_back(selection_to_json(strategy, id, score, rank, t));
}

}  // namespace detail

// The full co-active loop: self-consistency pairs, tau partition, budgeted
// low/high selection, oracle verdicts with flips, ID-set update,
// oracle-guided augmentation, AI-dataset assembly, and the DPO+NLL update.
inline RunReport run_coact(const RunConfig& cfg) {
    if (cfg.strategy != Strategy::coact)
        throw std::invalid_argument("run_coact: config strategy is not coact");
    using clock = std::chrono::steady_clock;

    RunReport report;
    report.config_echo = config_to_json(cfg);

    Environment env = make_environment(cfg.environment);
    EnvironmentConfig test_cfg = cfg.environment;
    test_cfg.seed = derive_seed(cfg.environment.seed, "test");
    Environment test_env = make_environment(test_cfg);

    auto pool = generate_pool(env, cfg.effective_pool_size());
    auto testset = generate_pool(test_env, cfg.test_size, 1000000000LL);
    auto slices = detail::slice_pool(std::move(pool), cfg.iterations, derive_seed(cfg.seed, "slices"));

    Policy policy = detail::initial_policy(cfg, env);
    const Policy policy_init = policy;
    IdFeatureSet id_set;

    for (int t = 1; t <= cfg.iterations; ++t) {
        auto started = clock::now();
        std::uint64_t iter_seed = derive_seed(cfg.seed, "iteration", static_cast<std::uint64_t>(t));

        auto data = detail::build_pairs_for_batch(cfg, slices[t - 1], policy, iter_seed, t);

        auto split_sets = detail::stage(t, "partition", [&] { return partition(data.pairs, cfg.tau); });
        const auto& high = split_sets.high;
        const auto& low = split_sets.low;

        auto alloc = detail::stage(t, "allocate_budget", [&] {
            return allocate_budget(cfg.budget, static_cast<int>(low.size()), static_cast<int>(high.size()),
                                   cfg.split);
        });

        auto s_low = detail::stage(t, "select_low", [&] { return select_low(low, alloc.budget.low); });
        Rng fallback_rng(derive_seed(iter_seed, "high_fallback"));
        auto s_high = detail::stage(t, "select_high", [&] {
            return select_high(high, data.lookup, id_set, alloc.budget.high, cfg.k_nn, fallback_rng);
        });

        for (std::size_t i = 0; i < s_low.size(); ++i)
            detail::log_selection(report, "coact_low", s_low[i].instruction_id,
                                  s_low[i].chosen_consistency.value(), static_cast<int>(i), t);
        const std::string high_strategy = s_high.random_fallback ? "coact_high_random_fallback" : "coact_high_knn";
        for (std::size_t i = 0; i < s_high.selected.size(); ++i)
            detail::log_selection(report, high_strategy, s_high.selected[i].instruction_id,
                                  s_high.random_fallback ? std::numeric_limits<double>::quiet_NaN()
                                                         : s_high.scores[i],
                                  static_cast<int>(i), t);
        if (s_high.random_fallback)
            report.notes.push_back({{"iteration", t}, {"note", "select_high random fallback (ID set cold start)"}});

        std::vector<ScoredPair> selected = s_low;
        selected.insert(selected.end(), s_high.selected.begin(), s_high.selected.end());
        auto verdicts = detail::stage(t, "oracle", [&] { return detail::evaluate_all(cfg, selected, data.lookup, iter_seed); });
        std::vector<OracleVerdict> verdicts_high(verdicts.begin() + s_low.size(), verdicts.end());

        std::vector<ScoredPair> oracle_pairs;
        oracle_pairs.reserve(selected.size());
        for (std::size_t i = 0; i < selected.size(); ++i)
            oracle_pairs.push_back(apply_verdict(selected[i], verdicts[i]));
        for (std::size_t i = 0; i < selected.size(); ++i)
            report.verdict_log.push_back(verdict_to_json(verdicts[i], selected[i].instruction_id, t));

        // Verified-correct preferences from both subsets accumulate into the
        // ID reference set.
        id_set = detail::stage(t, "update_id_set",
                               [&] { return update_id_set(std::move(id_set), selected, verdicts, data.lookup); });

        auto correct_anchors = detail::stage(t, "extract_correct",
                                             [&] { return extract_correct(s_high.selected, verdicts_high); });

        std::vector<ScoredPair> augmented;
        int augmented_generated = 0;
        if (cfg.augmentation.enabled) {
            AugmentationConfig aug_cfg = cfg.augmentation;
            aug_cfg.n_new = cfg.effective_n_new();
            Rng gen_rng(derive_seed(iter_seed, "augment_generate"));
            auto generated = detail::stage(t, "augment", [&] {
                return generate_instructions(env, correct_anchors, aug_cfg, data.lookup,
                                             2000000000LL + 10000000LL * t, gen_rng);
            });
            if (generated.skipped) {
                report.notes.push_back({{"iteration", t}, {"note", "augmentation skipped (no correct anchors)"}});
            } else {
                augmented_generated = static_cast<int>(generated.instructions.size());
                for (const auto& ins : generated.instructions) {
                    data.lookup[ins.id] = ins;
                    report.augmented_instructions.push_back(ins);
                }
                Rng label_rng(derive_seed(iter_seed, "augment_label"));
                augmented = detail::stage(t, "augment", [&] {
                    return self_label_new(policy, generated.instructions, cfg.k, cfg.temperatures, cfg.tau,
                                          cfg.environment.length_model, label_rng);
                });
            }
        }

        auto d_ai = detail::stage(t, "assemble", [&] {
            if (cfg.self_label) return assemble_ai_dataset(high, s_high.selected, augmented);
            return augmented;
        });

        std::vector<ScoredPair> d_final = oracle_pairs;
        d_final.insert(d_final.end(), d_ai.begin(), d_ai.end());

        for (const auto& p : d_final) report.pair_log.push_back(pair_to_json(p, t));

        TrainStats stats;
        if (!d_final.empty()) {
            const Policy& reference =
                cfg.trainer.reference_mode == TrainConfig::ReferenceMode::initial ? policy_init : policy;
            Rng train_rng(derive_seed(iter_seed, "train"));
            policy = detail::stage(t, "train", [&] {
                return train_iteration(policy, reference, d_final, data.lookup, cfg.trainer, train_rng, &stats);
            });
        } else {
            report.notes.push_back({{"iteration", t}, {"note", "empty final dataset; training skipped"}});
        }

        auto m = detail::stage(t, "metrics",
                               [&] { return detail::evaluate_iteration(cfg, policy, testset, t, iter_seed); });
        m.oracle_spend = static_cast<int>(selected.size());
        m.ai_pairs = static_cast<int>(d_ai.size());
        m.augmented_pairs = static_cast<int>(augmented.size());

        // Incorrect rate of the k-NN pick vs a same-size uniform pick from
        // the high subset (ground-truth correctness; diagnostic only).
        if (!s_high.selected.empty() && !s_high.random_fallback) {
            m.knn_incorrect_rate = incorrect_rate(verdicts_high);
            Rng cf_rng(derive_seed(iter_seed, "random_counterfactual"));
            auto idx = cf_rng.sample_indices(high.size(), s_high.selected.size());
            OracleModel gt;  // correctness bits from ground truth regardless of the run oracle
            std::vector<OracleVerdict> cf;
            for (auto i : idx) {
                Rng vr(derive_seed(iter_seed, "random_counterfactual_verdict",
                                   static_cast<std::uint64_t>(high[i].instruction_id)));
                cf.push_back(evaluate_pair(gt, high[i], data.lookup, vr));
            }
            m.random_incorrect_rate = incorrect_rate(cf);
        }

        report.notes.push_back({{"iteration", t},
                                {"saturated", data.saturated},
                                {"high", high.size()},
                                {"low", low.size()},
                                {"budget_low", alloc.budget.low},
                                {"budget_high", alloc.budget.high},
                                {"budget_unspent", alloc.unspent},
                                {"augmented_generated", augmented_generated}});

        report.train_stats.push_back(stats);
        report.metrics.push_back(m);
        report.checkpoints.push_back(policy);
        report.wall_clock_seconds.push_back(std::chrono::duration<double>(clock::now() - started).count());
    }
    return report;
}

// Active-learning baselines: same loop, but acquisition picks instructions
// directly and every selected pair goes to the oracle; no self-labeled or
// augmented data is used.
inline RunReport run_baseline(const RunConfig& cfg) {
    if (cfg.strategy == Strategy::coact)
        throw std::invalid_argument("run_baseline: config strategy must not be coact");
    using clock = std::chrono::steady_clock;

    RunReport report;
    report.config_echo = config_to_json(cfg);

    Environment env = make_environment(cfg.environment);
    EnvironmentConfig test_cfg = cfg.environment;
    test_cfg.seed = derive_seed(cfg.environment.seed, "test");
    Environment test_env = make_environment(test_cfg);

    auto pool = generate_pool(env, cfg.effective_pool_size());
    auto testset = generate_pool(test_env, cfg.test_size, 1000000000LL);
    auto slices = detail::slice_pool(std::move(pool), cfg.iterations, derive_seed(cfg.seed, "slices"));

    Policy policy = detail::initial_policy(cfg, env);
    const Policy policy_init = policy;

    BaselineParams params;
    params.k = cfg.k;
    params.temperatures = cfg.temperatures;
    params.beta = cfg.trainer.beta;
    params.length_model = cfg.environment.length_model;

    for (int t = 1; t <= cfg.iterations; ++t) {
        auto started = clock::now();
        std::uint64_t iter_seed = derive_seed(cfg.seed, "iteration", static_cast<std::uint64_t>(t));

        Rng batch_rng(derive_seed(iter_seed, "batch"));
        auto batch = detail::stage(t, "sample_batch", [&] {
            return sample_batch(slices[t - 1], std::min(cfg.batch_size, slices[t - 1].size()), batch_rng).batch;
        });
        auto lookup = index_instructions(batch);

        int m = std::min<int>(cfg.budget, static_cast<int>(batch.size()));
        Rng select_rng(derive_seed(iter_seed, "baseline_select"));
        auto selection = detail::stage(t, "select_baseline", [&] {
            return select_baseline(cfg.strategy, batch, policy, policy_init, m, params, select_rng);
        });
        for (std::size_t i = 0; i < selection.instructions.size(); ++i)
            detail::log_selection(report, strategy_name(cfg.strategy), selection.instructions[i].id,
                                  i < selection.scores.size() ? selection.scores[i]
                                                              : std::numeric_limits<double>::quiet_NaN(),
                                  static_cast<int>(i), t);
        if (selection.filtered_to)
            report.notes.push_back(
                {{"iteration", t}, {"note", "pref_ent entropy filter"}, {"filtered_to", selection.filtered_to}});

        // Selected instructions run through the same pair construction; the
        // whole selection is oracle budget regardless of saturation.
        std::vector<ScoredPair> selected_pairs;
        int saturated = 0;
        detail::stage(t, "build_pairs", [&] {
            for (const auto& ins : selection.instructions) {
                Rng rng(derive_seed(iter_seed, "responses", static_cast<std::uint64_t>(ins.id)));
                auto responses =
                    sample_responses(policy, ins, cfg.k, cfg.temperatures, cfg.environment.length_model, rng);
                auto pair = build_pair(ins, responses);
                if (pair)
                    selected_pairs.push_back(*pair);
                else
                    ++saturated;
            }
            return 0;
        });

        auto verdicts =
            detail::stage(t, "oracle", [&] { return detail::evaluate_all(cfg, selected_pairs, lookup, iter_seed); });
        std::vector<ScoredPair> d_final;
        d_final.reserve(selected_pairs.size());
        for (std::size_t i = 0; i < selected_pairs.size(); ++i) {
            d_final.push_back(apply_verdict(selected_pairs[i], verdicts[i]));
            report.verdict_log.push_back(verdict_to_json(verdicts[i], selected_pairs[i].instruction_id, t));
        }
        for (const auto& p : d_final) report.pair_log.push_back(pair_to_json(p, t));

        TrainStats stats;
        if (!d_final.empty()) {
            const Policy& reference =
                cfg.trainer.reference_mode == TrainConfig::ReferenceMode::initial ? policy_init : policy;
            Rng train_rng(derive_seed(iter_seed, "train"));
            policy = detail::stage(t, "train", [&] {
                return train_iteration(policy, reference, d_final, lookup, cfg.trainer, train_rng, &stats);
            });
        } else {
            report.notes.push_back({{"iteration", t}, {"note", "empty final dataset; training skipped"}});
        }

        auto metrics = detail::stage(t, "metrics",
                                     [&] { return detail::evaluate_iteration(cfg, policy, testset, t, iter_seed); });
        metrics.oracle_spend = static_cast<int>(selection.instructions.size());
        metrics.ai_pairs = 0;
        metrics.augmented_pairs = 0;

        report.notes.push_back({{"iteration", t}, {"saturated", saturated}});
        report.train_stats.push_back(stats);
        report.metrics.push_back(metrics);
        report.checkpoints.push_back(policy);
        report.wall_clock_seconds.push_back(std::chrono::duration<double>(clock::now() - started).count());
    }
    return report;
}

inline RunReport run(const RunConfig& cfg) {
    return cfg.strategy == Strategy::coact ? run_coact(cfg) : run_baseline(cfg);
}

// Writes metrics.csv, the three stage logs, per-iteration policy
// checkpoints, the config echo, and a run summary. Everything except
// report.json (which carries wall-clock times) is byte-deterministic for
// a fixed config and seed.
inline std::vector<std::filesystem::path> write_report(const RunReport& report, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::path out(dir);
    fs::create_directories(out);
    std::vector<fs::path> paths;

    std::string metrics = metrics_csv_header() + "\n";
    for (const auto& m : report.metrics) metrics += metrics_csv_row(m) + "\n";
    write_text_file(out / "metrics.csv", metrics);
    paths.push_back(out / "metrics.csv");

    auto write_jsonl = [&](const char* name, const std::vector<nlohmann::json>& rows) {
        std::string body;
        for (const auto& r : rows) body += r.dump() + "\n";
        write_text_file(out / name, body);
        paths.push_back(out / name);
    };
    write_jsonl("selections.log", report.selection_log);
    write_jsonl("verdicts.log", report.verdict_log);
    write_jsonl("pairs.log", report.pair_log);

    for (std::size_t i = 0; i < report.checkpoints.size(); ++i) {
        fs::path p = out / ("policy_iter" + std::to_string(i + 1) + ".txt");
        write_text_file(p, policy_checkpoint(report.checkpoints[i], static_cast<int>(i + 1)));
        paths.push_back(p);
    }

    std::string curves = "iteration,epoch,mean_loss,mean_margin\n";
    for (std::size_t t = 0; t < report.train_stats.size(); ++t) {
        const auto& stats = report.train_stats[t];
        for (std::size_t e = 0; e < stats.epoch_mean_loss.size(); ++e)
            curves += std::to_string(t + 1) + "," + std::to_string(e + 1) + "," +
                      fmt_double(stats.epoch_mean_loss[e]) + "," +
                      fmt_double(stats.epoch_mean_margin[e]) + "\n";
    }
    write_text_file(out / "training_curves.csv", curves);
    paths.push_back(out / "training_curves.csv");

    write_text_file(out / "augmented.jsonl", pool_to_jsonl(report.augmented_instructions));
    paths.push_back(out / "augmented.jsonl");

    write_text_file(out / "config_echo.json", report.config_echo.dump(2) + "\n");
    paths.push_back(out / "config_echo.json");

    nlohmann::json summary{{"wall_clock_seconds", report.wall_clock_seconds}, {"notes", report.notes}};
    if (!report.checkpoints.empty())
        summary["final_checkpoint"] = (out / ("policy_iter" + std::to_string(report.checkpoints.size()) + ".txt")).string();
    write_text_file(out / "report.json", summary.dump(2) + "\n");
    paths.push_back(out / "report.json");
    return paths;
}

struct SweepCell {
    std::string param;
    std::string value;
    std::uint64_t seed = 0;
    IterationMetrics final_metrics;
};

// Grid over tau or the noisy-oracle flip rate; one final-iteration metrics
// row per (value, seed) cell.
inline std::vector<SweepCell> run_sweep(const RunConfig& base, const std::string& param,
                                        const std::vector<std::string>& values, int seeds) {
    if (param != "tau" && param != "epsilon") throw std::invalid_argument("run_sweep: param must be tau or epsilon");
    if (seeds < 1) throw std::invalid_argument("run_sweep: seeds must be >= 1");
    std::vector<SweepCell> cells;
    for (const auto& value : values) {
        for (int s = 0; s < seeds; ++s) {
            RunConfig cfg = base;
            cfg.seed = derive_seed(base.seed, "sweep", static_cast<std::uint64_t>(s));
            cfg.environment.seed = derive_seed(base.environment.seed, "sweep_env", static_cast<std::uint64_t>(s));
            if (param == "tau") {
                cfg.tau = parse_rational(value);
            } else {
                cfg.oracle.kind = OracleModel::Kind::noisy;
                cfg.oracle.flip_rate = std::stod(value);
            }
            auto report = run(cfg);
            cells.push_back({param, value, cfg.seed, report.metrics.back()});
        }
    }
    return cells;
}

inline std::string sweep_csv(const std::vector<SweepCell>& cells) {
    std::string out = "param,value,seed," + metrics_csv_header() + "\n";
    for (const auto& c : cells)
        out += c.param + "," + c.value + "," + std::to_string(c.seed) + "," + metrics_csv_row(c.final_metrics) + "\n";
    return out;
}

}  // namespace coact
