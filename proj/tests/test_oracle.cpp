#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "coact/oracle.hpp"

using namespace coact;

namespace {

// One-instruction world: true answer is 0.
InstructionMap world() {
    Instruction ins;
    ins.id = 1;
    ins.features = {2.0, 1.0};
    ins.true_answer = 0;
    InstructionMap map;
    map[1] = ins;
    return map;
}

ScoredPair pair_of(int chosen_answer, int rejected_answer, double chosen_lp = -0.2,
                   double rejected_lp = -1.5) {
    ScoredPair p;
    p.instruction_id = 1;
    p.chosen.answer = chosen_answer;
    p.chosen.logprob = chosen_lp;
    p.rejected.answer = rejected_answer;
    p.rejected.logprob = rejected_lp;
    p.chosen_consistency = Rational(5, 8);
    p.rejected_consistency = Rational(1, 8);
    return p;
}

}  // namespace

TEST_CASE("ground-truth verdicts follow the protocol") {
    auto map = world();
    OracleModel gt;
    Rng rng(1);

    auto kept = evaluate_pair(gt, pair_of(0, 1), map, rng);
    REQUIRE(kept.chosen_correct);
    REQUIRE_FALSE(kept.rejected_correct);
    REQUIRE(kept.chosen_preferred);
    REQUIRE_FALSE(kept.noise_applied);

    auto flipped = evaluate_pair(gt, pair_of(1, 0), map, rng);
    REQUIRE_FALSE(flipped.chosen_correct);
    REQUIRE(flipped.rejected_correct);
    REQUIRE_FALSE(flipped.chosen_preferred);

    auto both_wrong = evaluate_pair(gt, pair_of(1, 2), map, rng);
    REQUIRE(both_wrong.chosen_preferred);  // keep_order default

    REQUIRE_THROWS_AS(evaluate_pair(gt, pair_of(1, 1), map, rng), std::invalid_argument);
}

TEST_CASE("protocol soundness across all four correctness combinations") {
    auto map = world();
    map[1].true_answer = 0;
    OracleModel gt;
    Rng rng(2);
    // (chosen, rejected) over answers {0,1,2}: enumerate correctness patterns
    struct Case {
        int c, r;
        bool exactly_one;
    };
    for (const Case& k : {Case{0, 1, true}, Case{1, 0, true}, Case{1, 2, false}, Case{2, 1, false}}) {
        auto verdict = evaluate_pair(gt, pair_of(k.c, k.r), map, rng);
        auto applied = apply_verdict(pair_of(k.c, k.r), verdict);
        if (k.exactly_one) {
            REQUIRE(applied.chosen.answer == 0);  // the correct response ends up chosen
        }
    }
}

TEST_CASE("logprob tie-break prefers the higher-logprob side") {
    auto map = world();
    OracleModel gt;
    gt.tie_break = OracleModel::TieBreak::chosen_logprob;
    Rng rng(3);
    auto keep = evaluate_pair(gt, pair_of(1, 2, -0.2, -1.5), map, rng);
    REQUIRE(keep.chosen_preferred);
    auto swap = evaluate_pair(gt, pair_of(1, 2, -2.0, -1.5), map, rng);
    REQUIRE_FALSE(swap.chosen_preferred);
}

TEST_CASE("noisy oracle with zero flip rate equals ground truth") {
    auto map = world();
    OracleModel noisy;
    noisy.kind = OracleModel::Kind::noisy;
    noisy.flip_rate = 0.0;
    OracleModel gt;
    for (int seed = 0; seed < 50; ++seed) {
        Rng r1(seed), r2(seed);
        auto a = evaluate_pair(noisy, pair_of(0, 1), map, r1);
        auto b = evaluate_pair(gt, pair_of(0, 1), map, r2);
        REQUIRE(a.chosen_preferred == b.chosen_preferred);
        REQUIRE_FALSE(a.noise_applied);
    }
}

TEST_CASE("noisy flip frequency calibrates to the flip rate") {
    auto map = world();
    OracleModel noisy;
    noisy.kind = OracleModel::Kind::noisy;
    noisy.flip_rate = 0.1;
    const int n = 100000;
    int flips = 0;
    Rng rng(7);
    for (int i = 0; i < n; ++i) flips += evaluate_pair(noisy, pair_of(0, 1), map, rng).noise_applied;
    double se = std::sqrt(0.1 * 0.9 / n);
    REQUIRE(std::abs(flips / static_cast<double>(n) - 0.1) <= 3.0 * se);
}

TEST_CASE("flip rate at or above one half is rejected") {
    auto map = world();
    OracleModel bad;
    bad.kind = OracleModel::Kind::noisy;
    bad.flip_rate = 0.5;
    Rng rng(8);
    REQUIRE_THROWS_AS(evaluate_pair(bad, pair_of(0, 1), map, rng), std::invalid_argument);
}

TEST_CASE("apply_verdict keeps or swaps and is involutive on flips") {
    auto p = pair_of(0, 1);

    OracleVerdict keep;
    keep.chosen_preferred = true;
    auto kept = apply_verdict(p, keep);
    REQUIRE(kept.chosen.answer == 0);
    REQUIRE(kept.provenance == Provenance::oracle_kept);
    auto kept_twice = apply_verdict(kept, keep);
    REQUIRE(kept_twice.chosen.answer == kept.chosen.answer);
    REQUIRE(kept_twice.chosen_consistency == kept.chosen_consistency);

    OracleVerdict flip;
    flip.chosen_preferred = false;
    auto flipped = apply_verdict(p, flip);
    REQUIRE(flipped.chosen.answer == 1);
    REQUIRE(flipped.chosen_consistency == Rational(1, 8));
    REQUIRE(flipped.rejected_consistency == Rational(5, 8));
    REQUIRE(flipped.provenance == Provenance::oracle_flipped);

    auto restored = apply_verdict(flipped, flip);
    REQUIRE(restored.chosen.answer == p.chosen.answer);
    REQUIRE(restored.rejected.answer == p.rejected.answer);
    REQUIRE(restored.chosen_consistency == p.chosen_consistency);
}

TEST_CASE("update_id_set keeps verified-correct features, deduplicated") {
    InstructionMap map;
    for (int i = 1; i <= 3; ++i) {
        Instruction ins;
        ins.id = i;
        ins.features = {static_cast<double>(i), 1.0};
        ins.true_answer = 0;
        map[i] = ins;
    }
    auto mk = [](std::int64_t id) {
        ScoredPair p;
        p.instruction_id = id;
        p.chosen.answer = 0;
        p.rejected.answer = 1;
        return p;
    };
    OracleVerdict good;
    good.chosen_correct = true;
    good.chosen_preferred = true;
    OracleVerdict bad;
    bad.chosen_correct = false;
    bad.chosen_preferred = false;

    IdFeatureSet set;
    set = update_id_set(std::move(set), {mk(1), mk(2), mk(3)}, {good, bad, good}, map);
    REQUIRE(set.size() == 2);
    REQUIRE(set.contains(1));
    REQUIRE_FALSE(set.contains(2));
    for (const auto& z : set.features) REQUIRE(std::abs(norm2(z) - 1.0) < 1e-9);

    // reprocessing the same verdicts changes nothing
    auto again = update_id_set(set, {mk(1), mk(3)}, {good, good}, map);
    REQUIRE(again.size() == 2);

    // all-incorrect round leaves the set unchanged
    auto unchanged = update_id_set(set, {mk(2)}, {bad}, map);
    REQUIRE(unchanged.size() == 2);

    REQUIRE_THROWS_AS(update_id_set(set, {mk(1)}, {}, map), std::invalid_argument);
}

TEST_CASE("incorrect_rate counts wrong chosen responses") {
    OracleVerdict right;
    right.chosen_correct = true;
    OracleVerdict wrong;
    wrong.chosen_correct = false;

    REQUIRE(incorrect_rate({right, right}) == 0.0);
    std::vector<OracleVerdict> vs(8, right);
    vs[2] = wrong;
    vs[5] = wrong;
    REQUIRE(incorrect_rate(vs) == Catch::Approx(0.25));
    REQUIRE_THROWS_AS(incorrect_rate({}), std::invalid_argument);
}
