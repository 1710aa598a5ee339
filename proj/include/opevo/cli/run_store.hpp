#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "opevo/evolution.hpp"

namespace opevo::cli {

class RunStoreError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Writes a suite as <dir>/manifest.json plus one <instance id>.json each.
void write_suite_dir(const SuiteSpec& suite, const std::filesystem::path& dir);
SuiteSpec read_suite_dir(const std::filesystem::path& dir);

/// operators/gen_GG/op_NN for an id of the form gGG_opNN.
std::filesystem::path artifact_stem(const std::filesystem::path& run_dir, const std::string& id);

/// Serializes all writes to one run directory:
///   config.json, suite/, operators/gen_GG/op_NN.{src,meta.json},
///   scores.jsonl, events.jsonl, generations.jsonl, convergence.csv
class RunWriter {
public:
    /// Creates the directory, which must be absent or empty unless
    /// `overwrite` is set.
    RunWriter(std::filesystem::path root, bool overwrite = false);

    void write_config(const nlohmann::json& config);
    void write_suite(const SuiteSpec& suite);
    void artifact(const sandbox::OperatorArtifact& a, const std::string& stage);
    void scored(const evolution::OperatorCandidate& c, const std::vector<sandbox::EvaluationResult>& results,
                std::uint64_t run_seed);
    void event(const std::string& type, const nlohmann::json& data);
    void generation(std::size_t gen, const std::vector<evolution::OperatorCandidate>& population);
    void flush();

    const std::filesystem::path& root() const { return root_; }

    evolution::EvolutionHooks hooks(std::uint64_t run_seed);

private:
    std::filesystem::path root_;
    std::mutex mutex_;
    std::ofstream scores_;
    std::ofstream events_;
    std::ofstream generations_;
    std::size_t event_seq_ = 0;
};

/// generation,best_score,best_operator from generations.jsonl.
std::string convergence_csv(const std::filesystem::path& run_dir);

/// Writes convergence.csv and report/instance_<id>.csv (the best operator's
/// per-generation metric on each instance). Returns the written files.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& run_dir);

/// Fixed formatting for real values in persisted text files.
std::string format_real(double v);

} // namespace opevo::cli
