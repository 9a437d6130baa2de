// Acceptance suite: one pass/fail line per criterion, exit code 0 only if
// every criterion holds. Runs against the default experiment config in
// configs/default.json.

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "coact/harness.hpp"

using namespace coact;

namespace {

int g_failures = 0;

void report(int number, const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", number, name, detail.c_str());
    if (!pass) ++g_failures;
}

std::string default_config_path() {
#ifdef COACT_SOURCE_DIR
    return std::string(COACT_SOURCE_DIR) + "/configs/default.json";
#else
    return "configs/default.json";
#endif
}

// ---------------------------------------------------------------- C1 ----

// Independent brute-force route for the consistency core: recount with
// nested loops, pick extremes by explicit scans, partition by integer
// cross-multiplication.
struct BrutePair {
    bool saturated = false;
    int chosen_index = 0;
    int rejected_index = 0;
    long long chosen_count = 0;
};

BrutePair brute_pair(const std::vector<int>& answers) {
    const int k = static_cast<int>(answers.size());
    std::vector<long long> counts(k, 0);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            if (answers[j] == answers[i]) ++counts[i];
    BrutePair out;
    long long best = -1;
    for (int i = 0; i < k; ++i)
        if (counts[i] > best) {
            best = counts[i];
            out.chosen_index = i;
        }
    out.chosen_count = best;
    long long worst = k + 1;
    bool found = false;
    for (int i = 0; i < k; ++i) {
        if (answers[i] == answers[out.chosen_index]) continue;
        if (counts[i] < worst) {
            worst = counts[i];
            out.rejected_index = i;
            found = true;
        }
    }
    out.saturated = !found;
    return out;
}

void criterion_1() {
    bool pass = true;
    std::string detail = "all multisets matched";
    long long cases = 0;
    for (int k = 2; k <= 4 && pass; ++k) {
        for (int v = 2; v <= 3 && pass; ++v) {
            std::vector<int> answers(k, 0);
            for (;;) {
                ++cases;
                std::vector<Response> responses;
                for (int a : answers) {
                    Response r;
                    r.answer = a;
                    responses.push_back(r);
                }
                // consistency scores: count / k, exactly
                auto scores = consistency_scores(responses);
                std::vector<long long> counts(k, 0);
                for (int i = 0; i < k; ++i)
                    for (int j = 0; j < k; ++j)
                        if (answers[j] == answers[i]) ++counts[i];
                for (int i = 0; i < k; ++i)
                    if (scores[i].num != counts[i] || scores[i].den != k) pass = false;

                // build_pair against the brute scan
                Instruction ins;
                ins.id = cases;
                ins.features = {1.0};
                auto pair = build_pair(ins, responses);
                auto brute = brute_pair(answers);
                if (brute.saturated != !pair.has_value()) pass = false;
                if (pair) {
                    if (pair->chosen.answer != answers[brute.chosen_index] ||
                        pair->rejected.answer != answers[brute.rejected_index])
                        pass = false;
                    // partition across every tau = j/k plus a supra-1 value
                    for (int j = 1; j <= k + 1 && pass; ++j) {
                        Rational tau(j, k);
                        auto parts = partition({*pair}, tau);
                        bool brute_high = brute.chosen_count * tau.den >= tau.num * k;
                        if (brute_high != (parts.high.size() == 1)) pass = false;
                        if (parts.high.size() + parts.low.size() != 1) pass = false;
                    }
                }
                if (!pass) {
                    detail = "mismatch at k=" + std::to_string(k) + " v=" + std::to_string(v);
                    break;
                }
                int i = k - 1;
                while (i >= 0 && answers[i] == v - 1) answers[i--] = 0;
                if (i < 0) break;
                ++answers[i];
            }
        }
    }
    report(1, "consistency core matches brute force exactly", pass,
           detail + ", " + std::to_string(cases) + " multisets");
}

// ---------------------------------------------------------------- C2 ----

void criterion_2() {
    Rng rng(20260801);
    std::vector<Vec> features(10000, Vec(3));
    for (auto& x : features)
        for (double& v : x) v = rng.normal();
    Vec theta{0.8, -0.5, 0.3};
    bool pass = true;
    std::string detail;
    for (double eps : {0.0, 0.1, 0.25, 0.4}) {
        auto att = verify_attenuation(features, theta, eps);
        double bound = 1e-10 * att.clean_max_eig;
        char buf[64];
        std::snprintf(buf, sizeof buf, "eps=%.2f: %.2e  ", eps, att.max_eig_violation);
        detail += buf;
        if (!(att.max_eig_violation <= bound)) pass = false;
    }
    report(2, "Fisher attenuation holds in the Loewner order", pass, detail);
}

// ---------------------------------------------------------------- C3 ----

void criterion_3() {
    Vec theta_star{1.0, -0.5, 0.25};
    std::vector<double> ln_n, ln_err;
    for (long long n : {500LL, 2000LL, 8000LL}) {
        auto gap = run_mixed_vs_oracle(3, theta_star, n, 0, 0.0, 100,
                                       derive_seed(20260802, "rate", static_cast<std::uint64_t>(n)));
        ln_n.push_back(std::log(static_cast<double>(n)));
        ln_err.push_back(std::log(gap.empirical_oracle_error));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < ln_n.size(); ++i) {
        mx += ln_n[i];
        my += ln_err[i];
    }
    mx /= ln_n.size();
    my /= ln_n.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < ln_n.size(); ++i) {
        sxy += (ln_n[i] - mx) * (ln_err[i] - my);
        sxx += (ln_n[i] - mx) * (ln_n[i] - mx);
    }
    double slope = sxy / sxx;
    bool pass = slope >= -0.575 && slope <= -0.425;  // -1/2 within 15%
    report(3, "estimation error scales as N^(-1/2)", pass, "log-log slope " + std::to_string(slope));
}

// ---------------------------------------------------------------- C4 ----

void criterion_4() {
    Vec theta_star{1.0, -0.5, 0.25, 0.8, -0.3, 0.6, -0.7, 0.2};
    auto gap = run_mixed_vs_oracle(8, theta_star, 200, 800, 0.1, 100, 20260803);
    double ratio = gap.empirical_oracle_error / gap.empirical_mixed_error;
    bool pass = gap.mixed_wins_fraction >= 0.90 && ratio >= 1.4 && ratio <= 2.4 && gap.non_converged == 0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "wins=%.2f ratio=%.3f predicted=%.3f nonconverged=%d",
                  gap.mixed_wins_fraction, ratio, gap.predicted_ratio, gap.non_converged);
    report(4, "mixed supervision beats oracle-only as the theorem predicts", pass, buf);
}

// ---------------------------------------------------------------- C5 ----

void criterion_5() {
    Rng rng(20260804);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        int d = trial % 2 == 0 ? 2 : 5;
        int v = trial % 4 < 2 ? 2 : 4;
        Policy p, ref;
        p.weights = Mat(v, d);
        ref.weights = Mat(v, d);
        for (double& w : p.weights.data) w = rng.normal();
        for (double& w : ref.weights.data) w = rng.normal();
        Instruction ins;
        ins.id = 1;
        ins.features.resize(d);
        for (double& f : ins.features) f = rng.normal();
        InstructionMap map;
        map[1] = ins;

        ScoredPair pair;
        pair.instruction_id = 1;
        pair.chosen.answer = static_cast<int>(rng.uniform_int(v));
        pair.rejected.answer = (pair.chosen.answer + 1 + static_cast<int>(rng.uniform_int(v - 1))) % v;
        pair.chosen.length = 1 + static_cast<int>(rng.uniform_int(3));

        TrainConfig cfg;
        cfg.beta = 0.25 + rng.uniform();
        cfg.alpha = rng.uniform();

        Mat analytic = loss_gradient(p, ref, {pair}, map, cfg);
        Mat numeric(v, d);
        const double h = 1e-5;
        for (std::size_t idx = 0; idx < p.weights.data.size(); ++idx) {
            Policy plus = p, minus = p;
            plus.weights.data[idx] += h;
            minus.weights.data[idx] -= h;
            numeric.data[idx] = (dpo_nll_loss(plus, ref, pair, map, cfg) -
                                 dpo_nll_loss(minus, ref, pair, map, cfg)) /
                                (2.0 * h);
        }
        double num = 0, den = 0;
        for (std::size_t i = 0; i < analytic.data.size(); ++i) {
            num += (analytic.data[i] - numeric.data[i]) * (analytic.data[i] - numeric.data[i]);
            den += numeric.data[i] * numeric.data[i];
        }
        worst = std::max(worst, std::sqrt(num / den));
    }
    report(5, "analytic DPO gradient matches finite differences", worst <= 1e-5,
           "worst relative error " + std::to_string(worst));
}

// ---------------------------------------------------------------- C6 ----

double binomial_tail_at_least(int n, int k) {  // P(X >= k), X ~ Bin(n, 1/2)
    double total = 0.0;
    for (int i = k; i <= n; ++i) {
        double c = 1.0;
        for (int j = 0; j < i; ++j) c = c * (n - j) / (j + 1);
        total += c;
    }
    return total / std::pow(2.0, n);
}

void criterion_6(const RunConfig& base) {
    const int seeds = 20;
    int positive = 0, measured = 0;
    double diff_sum = 0.0;
    for (int s = 0; s < seeds; ++s) {
        RunConfig cfg = base;
        cfg.seed = 301 + s;
        auto rep = run_coact(cfg);
        const auto& m = rep.metrics[1];  // iteration 2: first ID-backed k-NN selection
        if (!m.knn_incorrect_rate || !m.random_incorrect_rate) continue;
        ++measured;
        double diff = *m.knn_incorrect_rate - *m.random_incorrect_rate;
        diff_sum += diff;
        if (diff > 0) ++positive;
    }
    double mean_diff = measured ? diff_sum / measured : 0.0;
    double p_value = measured ? binomial_tail_at_least(measured, positive) : 1.0;
    bool pass = measured == seeds && mean_diff >= 0.20 && p_value < 0.05;
    char buf[160];
    std::snprintf(buf, sizeof buf, "mean diff=%.3f, positive %d/%d, sign-test p=%.2g", mean_diff,
                  positive, measured, p_value);
    report(6, "k-NN selection finds more self-consistent errors than random", pass, buf);
}

// ----------------------------------------------------------- C7..C10 ----

struct SuiteRun {
    std::string name;
    std::vector<RunReport> reports;  // one per seed
    double mean_final = 0.0;
};

SuiteRun run_variant(const RunConfig& base, const std::string& name, Strategy strategy, bool aug,
                     bool self, int seeds, int first_seed) {
    SuiteRun out;
    out.name = name;
    for (int s = 0; s < seeds; ++s) {
        RunConfig cfg = base;
        cfg.seed = first_seed + s;
        cfg.strategy = strategy;
        cfg.augmentation.enabled = aug;
        cfg.self_label = self;
        out.reports.push_back(strategy == Strategy::coact ? run_coact(cfg) : run_baseline(cfg));
        out.mean_final += out.reports.back().metrics.back().accuracy;
    }
    out.mean_final /= seeds;
    return out;
}

void criteria_7_to_10(const RunConfig& base) {
    const int seeds = 5;
    const int first_seed = 101;

    SuiteRun coact_full = run_variant(base, "coact", Strategy::coact, true, true, seeds, first_seed);
    SuiteRun self_only = run_variant(base, "self_only", Strategy::coact, false, true, seeds, first_seed);
    SuiteRun aug_only = run_variant(base, "aug_only", Strategy::coact, true, false, seeds, first_seed);
    SuiteRun oracle_only = run_variant(base, "oracle_only", Strategy::coact, false, false, seeds, first_seed);
    SuiteRun random_run = run_variant(base, "random", Strategy::random, false, false, seeds, first_seed);
    SuiteRun entropy_run = run_variant(base, "entropy", Strategy::entropy, false, false, seeds, first_seed);
    SuiteRun pref_cert =
        run_variant(base, "pref_certainty", Strategy::pref_certainty, false, false, seeds, first_seed);
    SuiteRun pref_ent = run_variant(base, "pref_ent", Strategy::pref_ent, false, false, seeds, first_seed);

    // C7: consistency-accuracy correlation, seed mean per iteration
    {
        std::vector<double> mean_corr(base.iterations, 0.0);
        for (const auto& rep : coact_full.reports)
            for (int t = 0; t < base.iterations; ++t)
                mean_corr[t] += rep.metrics[t].pearson_consistency_accuracy / seeds;
        bool pass = mean_corr[0] >= 0.5;
        for (int t = 1; t < base.iterations; ++t)
            if (mean_corr[t] < mean_corr[t - 1] - 0.05) pass = false;
        std::string detail = "seed-mean corr:";
        for (double c : mean_corr) detail += " " + std::to_string(c).substr(0, 5);
        report(7, "consistency-accuracy correlation starts >= 0.5 and does not decay", pass, detail);
    }

    // C8: CoAct beats Random by >= 5 points and every other baseline
    {
        double gap = coact_full.mean_final - random_run.mean_final;
        bool pass = gap >= 0.05;
        for (const SuiteRun* b : {&entropy_run, &pref_cert, &pref_ent})
            if (coact_full.mean_final <= b->mean_final) pass = false;
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "coact=%.3f random=%.3f (gap %.1f pts) entropy=%.3f pref_certainty=%.3f pref_ent=%.3f",
                      coact_full.mean_final, random_run.mean_final, 100.0 * gap, entropy_run.mean_final,
                      pref_cert.mean_final, pref_ent.mean_final);
        report(8, "CoAct outperforms every baseline, Random by >= 5 points", pass, buf);
    }

    // C9: ablation ordering with 1-point tie tolerance
    {
        const double tie = 0.01;
        bool pass = oracle_only.mean_final <= aug_only.mean_final + tie &&
                    oracle_only.mean_final <= self_only.mean_final + tie &&
                    aug_only.mean_final <= coact_full.mean_final + tie &&
                    self_only.mean_final <= coact_full.mean_final + tie;
        char buf[160];
        std::snprintf(buf, sizeof buf, "oracle_only=%.3f aug_only=%.3f self_only=%.3f full=%.3f",
                      oracle_only.mean_final, aug_only.mean_final, self_only.mean_final,
                      coact_full.mean_final);
        report(9, "ablation accuracies are monotone in the components", pass, buf);
    }

    // C10: determinism, budget cap, oracle/AI disjointness
    {
        bool pass = true;
        std::string detail;

        RunConfig cfg = base;
        cfg.seed = first_seed;
        auto again = run_coact(cfg);
        std::string csv_a = metrics_csv_header() + "\n", csv_b = csv_a;
        for (const auto& m : coact_full.reports[0].metrics) csv_a += metrics_csv_row(m) + "\n";
        for (const auto& m : again.metrics) csv_b += metrics_csv_row(m) + "\n";
        if (csv_a != csv_b) {
            pass = false;
            detail += "metrics.csv not reproducible; ";
        }

        for (const SuiteRun* run : {&coact_full, &self_only, &aug_only, &oracle_only, &random_run,
                                    &entropy_run, &pref_cert, &pref_ent})
            for (const auto& rep : run->reports)
                for (const auto& m : rep.metrics)
                    if (m.oracle_spend > base.budget) {
                        pass = false;
                        detail += run->name + " overspent; ";
                    }

        for (const auto& rep : coact_full.reports) {
            std::map<int, std::set<std::int64_t>> oracle_ids, ai_ids;
            for (const auto& p : rep.pair_log) {
                int t = p.at("iteration").get<int>();
                auto prov = p.at("provenance").get<std::string>();
                auto id = p.at("instruction_id").get<std::int64_t>();
                if (prov == "oracle_kept" || prov == "oracle_flipped")
                    oracle_ids[t].insert(id);
                else
                    ai_ids[t].insert(id);
            }
            for (const auto& [t, ids] : ai_ids)
                for (auto id : ids)
                    if (oracle_ids[t].count(id)) {
                        pass = false;
                        detail += "oracle/AI overlap at iteration " + std::to_string(t) + "; ";
                    }
        }
        if (detail.empty()) detail = "byte-identical metrics, spend <= M, disjoint supervision";
        report(10, "determinism and budget invariants", pass, detail);
    }
}

}  // namespace

int main() {
    RunConfig base;
    try {
        base = load_config(default_config_path());
    } catch (const std::exception& e) {
        std::printf("[FAIL] cannot load default config: %s\n", e.what());
        return 1;
    }

    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6(base);
    criteria_7_to_10(base);

    if (g_failures == 0) {
        std::printf("all acceptance criteria passed\n");
        return 0;
    }
    std::printf("%d acceptance criteria FAILED\n", g_failures);
    return 1;
}
