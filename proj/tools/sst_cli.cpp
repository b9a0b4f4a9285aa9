// Command-line driver: generate synthetic corpora, run single evaluations,
// sweep parameter grids with paired rescoring ablations, and re-score
// persisted run logs.
//
// Exit codes: 0 success, 1 configuration error, 2 input error.

#include <iostream>
#include <set>

#include <CLI11.hpp>

#include "sst/harness.hpp"

namespace {

struct CliRunOptions {
    sst::RunConfig cfg;
    std::string policy = "la";
    std::string clock = "ideal";
    std::string cfm = "on";
    std::string log_path;
    std::string summary_path;
};

void add_run_options(CLI::App* cmd, CliRunOptions& opt) {
    cmd->add_option("--dataset", opt.cfg.dataset_path, "corpus JSONL produced by `gen`")
        ->required();
    cmd->add_option("--policy", opt.policy, "decision policy: la|hold_n|edatt|alignatt")
        ->capture_default_str();
    cmd->add_option("--f", opt.cfg.policy.f, "alignatt frontier window (frames)")
        ->capture_default_str();
    cmd->add_option("--alpha", opt.cfg.policy.alpha, "edatt attention threshold")
        ->capture_default_str();
    cmd->add_option("--lambda", opt.cfg.policy.lambda, "edatt frontier frames")
        ->capture_default_str();
    cmd->add_option("--n", opt.cfg.policy.n, "hold-n held-back tokens")->capture_default_str();
    cmd->add_option("--beam-size", opt.cfg.beam.beam_size, "beam width")->capture_default_str();
    cmd->add_option("--max-new-tokens", opt.cfg.beam.max_new_tokens,
                    "per-chunk generation cap (0 = task-aware automatic)")
        ->capture_default_str();
    cmd->add_option("--length-norm-alpha", opt.cfg.beam.length_norm_alpha,
                    "length normalization exponent")
        ->capture_default_str();
    cmd->add_option("--cfm", opt.cfm, "contrastive feedback rescoring: on|off")
        ->capture_default_str();
    cmd->add_option("--beta", opt.cfg.cfm.beta, "plausibility constraint factor")
        ->capture_default_str();
    cmd->add_flag(
        "--contrast-selection-only",
        [&opt](std::int64_t count) { opt.cfg.cfm.persist_contrast_in_score = count == 0; },
        "apply the contrast term to step-0 selection only, not the running beam score");
    cmd->add_option("--chunk-ms", opt.cfg.chunk_ms, "source chunk size in ms")
        ->capture_default_str();
    cmd->add_option("--seed", opt.cfg.seed, "run seed (bootstrap resampling)")
        ->capture_default_str();
    cmd->add_option("--workers", opt.cfg.workers, "utterance-level worker threads")
        ->capture_default_str();
    cmd->add_option("--clock", opt.clock, "latency clock: ideal|measured")
        ->capture_default_str();
    cmd->add_option("--resamples", opt.cfg.bootstrap_resamples, "bootstrap resamples")
        ->capture_default_str();
    cmd->add_option("--ci-level", opt.cfg.ci_level, "bootstrap confidence level")
        ->capture_default_str();
    cmd->add_option("--log", opt.log_path, "write the per-utterance run log (JSONL) here");
    cmd->add_option("--summary", opt.summary_path, "write the summary table (TSV) here");
    cmd->set_config("--config", "", "key=value configuration file; flags override it");
}

void finalize_run_config(const CLI::App* cmd, CliRunOptions& opt) {
    opt.cfg.policy.kind = sst::policy_kind_from_string(opt.policy);
    opt.cfg.clock = sst::clock_mode_from_string(opt.clock);
    if (opt.cfm == "on") {
        opt.cfg.cfm.enabled = true;
    } else if (opt.cfm == "off") {
        opt.cfg.cfm.enabled = false;
    } else {
        throw sst::ConfigError("--cfm must be on or off");
    }
    std::set<std::string> set_params;
    for (const char* name : {"--f", "--alpha", "--lambda", "--n"}) {
        if (cmd->count(name) > 0) set_params.insert(name + 2);
    }
    sst::check_policy_params(opt.cfg.policy.kind, set_params);
}

void print_summary(const std::vector<sst::RunSummary>& rows) {
    std::cout << sst::summary_tsv(rows);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simultaneous translation decoding engine with contrastive feedback "
                 "rescoring and quality-latency evaluation on synthetic streaming tasks."};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic corpus");
    sst::TaskSpec spec;
    std::string gen_out;
    gen->add_option("--out", gen_out, "output corpus path (JSONL)")->required();
    gen->add_option("--seed", spec.seed)->capture_default_str();
    gen->add_option("--vocab-size", spec.vocab_size)->capture_default_str();
    gen->add_option("--utterances", spec.utterance_count)->capture_default_str();
    gen->add_option("--len-min", spec.source_len_min)->capture_default_str();
    gen->add_option("--len-max", spec.source_len_max)->capture_default_str();
    gen->add_option("--frames-per-token", spec.frames_per_token)->capture_default_str();
    gen->add_option("--frame-ms", spec.frame_ms)->capture_default_str();
    gen->add_option("--ambiguity-rate", spec.ambiguity_rate)->capture_default_str();
    gen->add_option("--sticky-prior", spec.sticky_prior)->capture_default_str();
    gen->add_option("--attn-spread", spec.attn_spread)->capture_default_str();

    // run
    auto* run_cmd = app.add_subcommand("run", "evaluate one configuration over a corpus");
    CliRunOptions run_opt;
    add_run_options(run_cmd, run_opt);

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "evaluate a parameter grid");
    CliRunOptions sweep_opt;
    add_run_options(sweep_cmd, sweep_opt);
    std::vector<std::string> grid_specs;
    bool no_paired = false;
    sweep_cmd->add_option("--grid", grid_specs,
                          "axis as name=v1,v2,... (repeatable; cartesian product)");
    sweep_cmd->add_flag("--no-paired", no_paired, "skip the paired rescoring-off runs");

    // score
    auto* score_cmd = app.add_subcommand("score", "recompute metrics from a run log");
    std::string score_log;
    std::string score_summary;
    score_cmd->add_option("--log", score_log, "run log (JSONL) to score")->required();
    score_cmd->add_option("--summary", score_summary, "write the summary table (TSV) here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) {
            spec.validate();
            sst::SyntheticTask task(spec);
            const auto utterances = task.generate();
            sst::write_corpus_jsonl(gen_out, spec, utterances);
            const auto stats = sst::corpus_stats(utterances);
            std::cout << "wrote " << utterances.size() << " utterances to " << gen_out
                      << " (ambiguous positions: " << stats.ambiguous_positions
                      << ", alt-sense: " << stats.alt_sense_positions
                      << ", argmax-wrong at arrival: " << stats.argmax_wrong_at_arrival << ")\n";
        } else if (run_cmd->parsed()) {
            finalize_run_config(run_cmd, run_opt);
            const sst::RunSummary summary = sst::run(run_opt.cfg);
            if (!run_opt.log_path.empty()) {
                sst::write_run_log(run_opt.log_path, run_opt.cfg, summary);
            }
            std::vector<sst::RunSummary> rows;
            rows.push_back(summary);
            if (!run_opt.summary_path.empty()) {
                sst::write_summary_tsv(run_opt.summary_path, rows);
            }
            print_summary(rows);
        } else if (sweep_cmd->parsed()) {
            finalize_run_config(sweep_cmd, sweep_opt);
            sst::SweepConfig sweep_cfg;
            sweep_cfg.base = sweep_opt.cfg;
            sweep_cfg.paired_ablation = !no_paired;
            for (const auto& axis : grid_specs) {
                const auto eq = axis.find('=');
                if (eq == std::string::npos) {
                    throw sst::ConfigError("--grid expects name=v1,v2,...: " + axis);
                }
                std::pair<std::string, std::vector<double>> entry;
                entry.first = axis.substr(0, eq);
                std::string values = axis.substr(eq + 1);
                std::size_t start = 0;
                while (start <= values.size()) {
                    const auto comma = values.find(',', start);
                    const std::string item =
                        values.substr(start, comma == std::string::npos ? std::string::npos
                                                                        : comma - start);
                    if (item.empty()) throw sst::ConfigError("--grid has an empty value: " + axis);
                    try {
                        entry.second.push_back(std::stod(item));
                    } catch (const std::exception&) {
                        throw sst::ConfigError("--grid value is not a number: " + item);
                    }
                    if (comma == std::string::npos) break;
                    start = comma + 1;
                }
                sweep_cfg.grid.push_back(std::move(entry));
            }
            const auto rows = sst::sweep(sweep_cfg);
            if (!sweep_opt.summary_path.empty()) {
                sst::write_summary_tsv(sweep_opt.summary_path, rows);
            }
            print_summary(rows);
        } else if (score_cmd->parsed()) {
            const sst::RunSummary summary = sst::score(score_log);
            std::vector<sst::RunSummary> rows;
            rows.push_back(summary);
            if (!score_summary.empty()) {
                sst::write_summary_tsv(score_summary, rows);
            }
            print_summary(rows);
        }
    } catch (const sst::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const sst::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
