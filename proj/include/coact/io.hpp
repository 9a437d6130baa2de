#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "coact/consistency.hpp"
#include "coact/metrics.hpp"
#include "coact/oracle.hpp"
#include "coact/synthworld.hpp"
#include "coact/theory.hpp"

namespace coact {

using json = nlohmann::json;

// Shortest round-trip decimal form; one code path for every double we
// serialize keeps same-seed outputs byte-identical.
inline std::string fmt_double(double x) {
    if (!std::isfinite(x)) return "nan";
    return json(x).dump();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

// --- instruction pools (JSONL: id, features, true_answer, ood[, origin]) ---

inline json instruction_to_json(const Instruction& ins) {
    json j{{"id", ins.id}, {"features", ins.features}, {"true_answer", ins.true_answer}, {"ood", ins.ood}};
    if (ins.origin >= 0) j["origin"] = ins.origin;
    return j;
}

inline Instruction instruction_from_json(const json& j) {
    Instruction ins;
    ins.id = j.at("id").get<std::int64_t>();
    ins.features = j.at("features").get<Vec>();
    ins.true_answer = j.at("true_answer").get<int>();
    ins.ood = j.at("ood").get<bool>();
    if (j.contains("origin")) ins.origin = j.at("origin").get<std::int64_t>();
    return ins;
}

inline std::string pool_to_jsonl(const std::vector<Instruction>& pool) {
    std::ostringstream out;
    for (const auto& ins : pool) out << instruction_to_json(ins).dump() << '\n';
    return out.str();
}

inline std::vector<Instruction> pool_from_jsonl(std::istream& in) {
    std::vector<Instruction> pool;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        pool.push_back(instruction_from_json(json::parse(line)));
    }
    return pool;
}

// --- pair records ---

inline json pair_to_json(const ScoredPair& pair, int iteration) {
    return json{{"iteration", iteration},
                {"instruction_id", pair.instruction_id},
                {"chosen_answer", pair.chosen.answer},
                {"rejected_answer", pair.rejected.answer},
                {"chosen_consistency", pair.chosen_consistency.str()},
                {"provenance", provenance_name(pair.provenance)}};
}

// --- verdict records (field names mirror the oracle evaluation schema) ---

inline json verdict_to_json(const OracleVerdict& v, std::int64_t instruction_id, int iteration) {
    return json{{"iteration", iteration},
                {"instruction_id", instruction_id},
                {"response1_correct", v.chosen_correct},
                {"response2_correct", v.rejected_correct},
                {"response1_preferred", v.chosen_preferred},
                {"noise_applied", v.noise_applied}};
}

// --- selection audit records ---

inline json selection_to_json(const std::string& strategy, std::int64_t instruction_id, double score,
                              int rank, int iteration) {
    json j{{"iteration", iteration}, {"strategy", strategy}, {"instruction_id", instruction_id}, {"rank", rank}};
    if (std::isfinite(score)) j["score"] = score;
    return j;
}

// --- metrics.csv ---

inline std::string metrics_csv_header() {
    return "iteration,accuracy,sampled_accuracy,majority_vote_share,pearson_consistency_accuracy,"
           "oracle_spend,ai_pairs,augmented_pairs,knn_incorrect_rate,random_incorrect_rate";
}

inline std::string metrics_csv_row(const IterationMetrics& m) {
    std::ostringstream out;
    out << m.iteration << ',' << fmt_double(m.accuracy) << ',' << fmt_double(m.sampled_accuracy) << ','
        << fmt_double(m.majority_vote_share) << ',' << fmt_double(m.pearson_consistency_accuracy) << ','
        << m.oracle_spend << ',' << m.ai_pairs << ',' << m.augmented_pairs << ','
        << (m.knn_incorrect_rate ? fmt_double(*m.knn_incorrect_rate) : "") << ','
        << (m.random_incorrect_rate ? fmt_double(*m.random_incorrect_rate) : "");
    return out.str();
}

// --- policy checkpoints (text matrix with a V d iteration header) ---

inline std::string policy_checkpoint(const Policy& policy, int iteration) {
    std::ostringstream out;
    out << policy.weights.rows << ' ' << policy.weights.cols << ' ' << iteration << '\n';
    for (std::size_t i = 0; i < policy.weights.rows; ++i) {
        for (std::size_t j = 0; j < policy.weights.cols; ++j) {
            if (j) out << ' ';
            out << fmt_double(policy.weights(i, j));
        }
        out << '\n';
    }
    return out.str();
}

inline Policy policy_from_checkpoint(std::istream& in, int* iteration = nullptr) {
    std::size_t rows = 0, cols = 0;
    int iter = 0;
    if (!(in >> rows >> cols >> iter)) throw std::runtime_error("bad checkpoint header");
    Policy p;
    p.weights = Mat(rows, cols);
    for (double& w : p.weights.data)
        if (!(in >> w)) throw std::runtime_error("truncated checkpoint");
    if (iteration) *iteration = iter;
    return p;
}

// --- theory gap reports ---

inline std::string gap_report_csv_header() {
    return "n_oracle,n_ai,epsilon,predicted_ratio,emp_oracle_err,emp_mixed_err,replications,seed";
}

inline std::string gap_report_csv_row(const GapReport& r, std::uint64_t seed) {
    std::ostringstream out;
    out << r.n_oracle << ',' << r.n_ai << ',' << fmt_double(r.epsilon) << ','
        << fmt_double(r.predicted_ratio) << ',' << fmt_double(r.empirical_oracle_error) << ','
        << fmt_double(r.empirical_mixed_error) << ',' << r.replications << ',' << seed;
    return out.str();
}

}  // namespace coact
