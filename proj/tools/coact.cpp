// Command-line front end: `run` executes one configured experiment,
// `theory` runs the mixed-supervision verification suite, and `sweep`
// grids over tau or the oracle flip rate.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coact/config.hpp"
#include "coact/harness.hpp"
#include "coact/io.hpp"
#include "coact/theory.hpp"

namespace {

struct RunOverrides {
    std::string config_path;
    std::string strategy;
    std::string tau;
    std::string output_dir;
    std::uint64_t seed = 0;
    int iterations = 0;
    int budget = -1;
    int k_nn = 0;
    double flip_rate = -1.0;
    std::string oracle_kind;
    int augmentation = -1;  // tri-state: unset/-1, off/0, on/1
    int self_label = -1;
    bool seed_set = false;
};

coact::RunConfig apply_overrides(coact::RunConfig cfg, const RunOverrides& o) {
    if (!o.strategy.empty()) cfg.strategy = coact::parse_strategy(o.strategy);
    if (!o.tau.empty()) cfg.tau = coact::parse_rational(o.tau);
    if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
    if (o.seed_set) cfg.seed = o.seed;
    if (o.iterations > 0) cfg.iterations = o.iterations;
    if (o.budget >= 0) cfg.budget = o.budget;
    if (o.k_nn > 0) cfg.k_nn = o.k_nn;
    if (!o.oracle_kind.empty()) {
        if (o.oracle_kind == "ground_truth")
            cfg.oracle.kind = coact::OracleModel::Kind::ground_truth;
        else if (o.oracle_kind == "noisy")
            cfg.oracle.kind = coact::OracleModel::Kind::noisy;
        else
            throw std::runtime_error("unknown --oracle-kind '" + o.oracle_kind + "'");
    }
    if (o.flip_rate >= 0.0) cfg.oracle.flip_rate = o.flip_rate;
    if (o.augmentation >= 0) cfg.augmentation.enabled = o.augmentation != 0;
    if (o.self_label >= 0) cfg.self_label = o.self_label != 0;
    return cfg;
}

int cmd_run(const RunOverrides& o) {
    coact::RunConfig cfg = apply_overrides(coact::load_config(o.config_path), o);
    auto report = coact::run(cfg);
    auto paths = coact::write_report(report, cfg.output_dir);
    for (const auto& m : report.metrics)
        std::cout << "iteration " << m.iteration << ": accuracy=" << m.accuracy
                  << " majority_vote_share=" << m.majority_vote_share
                  << " oracle_spend=" << m.oracle_spend << " ai_pairs=" << m.ai_pairs << "\n";
    std::cout << "report written to " << cfg.output_dir << " (" << paths.size() << " files)\n";
    return 0;
}

int cmd_theory(int d, long long n_oracle, long long n_ai, double epsilon, int replications,
               std::uint64_t seed, const std::string& csv_path) {
    using namespace coact;

    // Attenuation check on seeded features at the requested epsilon plus a
    // small grid around it.
    Rng rng(derive_seed(seed, "theory_features"));
    std::vector<Vec> features(2000, Vec(d));
    Vec theta(d);
    for (auto& x : features)
        for (double& v : x) v = rng.normal();
    for (double& v : theta) v = rng.normal();
    for (double eps : {0.0, epsilon, 0.25, 0.4}) {
        if (eps >= 0.5) continue;
        auto att = verify_attenuation(features, theta, eps);
        std::cout << "attenuation eps=" << eps << ": max_eig_violation=" << att.max_eig_violation
                  << " (clean lambda_max=" << att.clean_max_eig << ")\n";
    }

    Vec theta_star(d);
    Rng star_rng(derive_seed(seed, "theory_theta_star"));
    for (double& v : theta_star) v = star_rng.normal();
    auto gap = run_mixed_vs_oracle(d, theta_star, n_oracle, n_ai, epsilon, replications,
                                   derive_seed(seed, "theory_gap"));
    std::cout << "mixed vs oracle: predicted_ratio=" << gap.predicted_ratio
              << " empirical_oracle_err=" << gap.empirical_oracle_error
              << " empirical_mixed_err=" << gap.empirical_mixed_error
              << " mixed_wins=" << gap.mixed_wins_fraction << "\n";
    if (gap.non_converged)
        std::cout << "warning: " << gap.non_converged
                  << " fits did not converge (max grad norm " << gap.max_grad_norm << ")\n";

    if (!csv_path.empty()) {
        bool fresh = !std::filesystem::exists(csv_path);
        std::ofstream out(csv_path, std::ios::app);
        if (!out) throw std::runtime_error("cannot open " + csv_path);
        if (fresh) out << gap_report_csv_header() << "\n";
        out << gap_report_csv_row(gap, seed) << "\n";
        std::cout << "gap report appended to " << csv_path << "\n";
    }
    return gap.non_converged ? 1 : 0;
}

int cmd_sweep(const RunOverrides& o, const std::string& param, const std::vector<std::string>& values,
              int seeds, const std::string& out_path) {
    coact::RunConfig cfg = apply_overrides(coact::load_config(o.config_path), o);
    auto cells = coact::run_sweep(cfg, param, values, seeds);
    std::string csv = coact::sweep_csv(cells);
    coact::write_text_file(out_path, csv);
    for (const auto& c : cells)
        std::cout << param << "=" << c.value << " seed=" << c.seed
                  << " final_accuracy=" << c.final_metrics.accuracy << "\n";
    std::cout << "sweep written to " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"co-active preference learning laboratory"};
    app.require_subcommand(1);

    RunOverrides o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "config file (JSON)")->required();
        sub->add_option("--strategy", o.strategy, "coact|random|entropy|pref_certainty|pref_ent");
        sub->add_option("--tau", o.tau, "consistency threshold, e.g. 4/8");
        sub->add_option("--output", o.output_dir, "output directory");
        sub->add_option("--seed", o.seed, "root seed")->each([&](const std::string&) { o.seed_set = true; });
        sub->add_option("--iterations", o.iterations, "iteration count");
        sub->add_option("--budget", o.budget, "oracle budget M");
        sub->add_option("--k-nn", o.k_nn, "k for the k-NN distance");
        sub->add_option("--oracle-kind", o.oracle_kind, "ground_truth|noisy");
        sub->add_option("--flip-rate", o.flip_rate, "noisy oracle flip rate");
        sub->add_flag_callback("--augmentation", [&o] { o.augmentation = 1; }, "enable instruction augmentation");
        sub->add_flag_callback("--no-augmentation", [&o] { o.augmentation = 0; }, "disable instruction augmentation");
        sub->add_flag_callback("--self-label", [&o] { o.self_label = 1; }, "enable self-labeled training data");
        sub->add_flag_callback("--no-self-label", [&o] { o.self_label = 0; }, "disable self-labeled training data");
    };

    auto* run_cmd = app.add_subcommand("run", "run one experiment");
    add_common(run_cmd);

    int d = 3;
    long long n_oracle = 200, n_ai = 800;
    double epsilon = 0.1;
    int replications = 100;
    std::uint64_t theory_seed = 0;
    std::string csv_path;
    auto* theory_cmd = app.add_subcommand("theory", "mixed-supervision verification suite");
    theory_cmd->add_option("--d", d, "parameter dimension");
    theory_cmd->add_option("--n-oracle", n_oracle, "clean sample count");
    theory_cmd->add_option("--n-ai", n_ai, "noisy sample count");
    theory_cmd->add_option("--epsilon", epsilon, "symmetric flip rate");
    theory_cmd->add_option("--replications", replications, "replication count");
    theory_cmd->add_option("--seed", theory_seed, "root seed");
    theory_cmd->add_option("--csv", csv_path, "append the gap report to this CSV");

    std::string sweep_param = "tau";
    std::vector<std::string> sweep_values;
    int sweep_seeds = 1;
    std::string sweep_out = "sweep.csv";
    auto* sweep_cmd = app.add_subcommand("sweep", "grid over tau or epsilon");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--param", sweep_param, "tau|epsilon")->required();
    sweep_cmd->add_option("--values", sweep_values, "grid values (e.g. 3/8 4/8 5/8)")->required();
    sweep_cmd->add_option("--seeds", sweep_seeds, "seeds per cell");
    sweep_cmd->add_option("--sweep-output", sweep_out, "sweep CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(o);
        if (theory_cmd->parsed())
            return cmd_theory(d, n_oracle, n_ai, epsilon, replications, theory_seed, csv_path);
        if (sweep_cmd->parsed()) return cmd_sweep(o, sweep_param, sweep_values, sweep_seeds, sweep_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
