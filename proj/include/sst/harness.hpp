#pragma once

// Experiment driver: run a configuration over a corpus (optionally with
// utterance-level parallelism), aggregate quality and latency metrics, sweep
// parameter grids with paired feedback-rescoring ablations, and persist run
// logs (JSON lines) and summaries (TSV).

#include <filesystem>
#include <set>

#include "sst/engine.hpp"
#include "sst/metrics.hpp"
#include "sst/synthetic.hpp"

namespace sst {

struct RunConfig {
    PolicyConfig policy;
    BeamConfig beam{5, 0, 1.0};  // max_new_tokens 0: per-chunk task-aware cap
    CfmConfig cfm;
    int chunk_ms = 1000;
    std::string dataset_path;
    std::uint64_t seed = 1;
    int workers = 1;
    ClockMode clock = ClockMode::ideal;
    int bootstrap_resamples = 1000;
    double ci_level = 0.95;

    void validate() const;
};

// Rejects parameters that do not apply to the configured policy (e.g. alpha
// for AlignAtt). `set_params` holds the parameter names the user provided.
void check_policy_params(PolicyKind kind, const std::set<std::string>& set_params);

struct UtteranceResult {
    std::string id;
    std::vector<TokenId> reference;
    std::vector<TokenId> emitted;
    std::vector<EmissionEvent> events;
    std::vector<ChunkLog> chunks;
    double source_duration_ms = 0.0;
};

struct RunSummary {
    // Configuration echo (summary table columns).
    std::string policy;
    std::string param;  // policy trade-off parameter, "-" for local agreement
    int chunk_ms = 0;
    bool cfm_on = false;
    ClockMode clock = ClockMode::ideal;
    // Metrics.
    double bleu = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double laal_ideal_mean = 0.0;
    double laal_ca_mean = 0.0;
    double stall_rate = 0.0;
    int utterance_count = 0;

    std::vector<UtteranceResult> utterances;
};

// Loads the dataset named by cfg.dataset_path and evaluates it.
RunSummary run(const RunConfig& cfg);

// Same, with the corpus already in memory (the task must match it).
RunSummary run_on(const SyntheticTask& task, std::span<const Utterance> utterances,
                  const RunConfig& cfg);

// One JSON object per utterance, preceded by a header object carrying the
// fully resolved configuration.
void write_run_log(const std::filesystem::path& path, const RunConfig& cfg,
                   const RunSummary& summary);

// Recomputes a summary from a persisted run log. Concatenated logs pool
// their utterances; the first header provides the configuration echo.
RunSummary score(const std::filesystem::path& run_log_path);

struct SweepConfig {
    RunConfig base;
    // Grid axes: (RunConfig field name, values). The cartesian product is
    // evaluated; an empty grid runs the base configuration once.
    std::vector<std::pair<std::string, std::vector<double>>> grid;
    bool paired_ablation = true;  // evaluate each point with rescoring on and off
};

bool is_sweepable_field(const std::string& name);

// Rows sorted by ideal-clock latency.
std::vector<RunSummary> sweep(const SweepConfig& cfg);

std::string summary_tsv(std::span<const RunSummary> rows);
void write_summary_tsv(const std::filesystem::path& path, std::span<const RunSummary> rows);

}  // namespace sst
