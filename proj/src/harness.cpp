#include "sst/harness.hpp"

#include <cstdio>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace sst {
namespace {

std::string format_double(const char* fmt, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, value);
    return buf;
}

std::string param_string(const PolicyConfig& policy) {
    switch (policy.kind) {
        case PolicyKind::alignatt: return std::to_string(policy.f);
        case PolicyKind::edatt: return format_double("%g", policy.alpha);
        case PolicyKind::hold_n: return std::to_string(policy.n);
        case PolicyKind::local_agreement: return "-";
    }
    return "-";
}

UtteranceResult run_one(const SyntheticTask& task, const Utterance& utt,
                        const EngineConfig& engine_cfg, int chunk_frames) {
    UtteranceResult res;
    res.id = utt.id;
    res.reference = utt.reference;
    res.source_duration_ms = utt.frames.duration_ms();
    StreamState state = run_stream(task, utt.frames, engine_cfg, chunk_frames);
    res.emitted = std::move(state.emitted);
    res.events = std::move(state.events);
    res.chunks = std::move(state.chunks);
    return res;
}

// Shared by live runs and log re-scoring so the two paths agree field for
// field.
RunSummary aggregate(std::vector<UtteranceResult> results, const RunConfig& cfg) {
    RunSummary summary;
    summary.policy = to_string(cfg.policy.kind);
    summary.param = param_string(cfg.policy);
    summary.chunk_ms = cfg.chunk_ms;
    summary.cfm_on = cfg.cfm.enabled;
    summary.clock = cfg.clock;
    summary.utterance_count = static_cast<int>(results.size());

    std::vector<std::vector<TokenId>> hyps;
    std::vector<std::vector<TokenId>> refs;
    hyps.reserve(results.size());
    refs.reserve(results.size());
    double laal_ideal_sum = 0.0;
    double laal_ca_sum = 0.0;
    long stalled = 0;
    long non_final_chunks = 0;
    for (const auto& res : results) {
        hyps.push_back(res.emitted);
        refs.push_back(res.reference);
        LatencyRecord rec{res.events, res.source_duration_ms,
                          static_cast<int>(res.reference.size())};
        laal_ideal_sum += laal(rec, /*computational_aware=*/false);
        laal_ca_sum += laal(rec, /*computational_aware=*/true);
        for (const auto& chunk : res.chunks) {
            if (chunk.is_final) continue;
            ++non_final_chunks;
            if (chunk.stable.empty()) ++stalled;
        }
    }
    summary.bleu = corpus_bleu(hyps, refs);
    const auto ci = bootstrap_ci(hyps, refs, cfg.bootstrap_resamples, cfg.seed, cfg.ci_level);
    summary.ci_low = ci.first;
    summary.ci_high = ci.second;
    const double n = static_cast<double>(results.size());
    summary.laal_ideal_mean = laal_ideal_sum / n;
    summary.laal_ca_mean = laal_ca_sum / n;
    summary.stall_rate = non_final_chunks == 0
                             ? 0.0
                             : static_cast<double>(stalled) / static_cast<double>(non_final_chunks);
    summary.utterances = std::move(results);
    return summary;
}

nlohmann::json config_to_json(const RunConfig& cfg) {
    return {{"policy", to_string(cfg.policy.kind)},
            {"f", cfg.policy.f},
            {"alpha", cfg.policy.alpha},
            {"lambda", cfg.policy.lambda},
            {"n", cfg.policy.n},
            {"beam_size", cfg.beam.beam_size},
            {"max_new_tokens", cfg.beam.max_new_tokens},
            {"length_norm_alpha", cfg.beam.length_norm_alpha},
            {"cfm", cfg.cfm.enabled},
            {"beta", cfg.cfm.beta},
            {"feedback_floor", cfg.cfm.feedback_floor},
            {"persist_contrast", cfg.cfm.persist_contrast_in_score},
            {"chunk_ms", cfg.chunk_ms},
            {"dataset", cfg.dataset_path},
            {"seed", cfg.seed},
            {"workers", cfg.workers},
            {"clock", to_string(cfg.clock)},
            {"bootstrap_resamples", cfg.bootstrap_resamples},
            {"ci_level", cfg.ci_level}};
}

RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig cfg;
    cfg.policy.kind = policy_kind_from_string(j.at("policy").get<std::string>());
    cfg.policy.f = j.at("f").get<int>();
    cfg.policy.alpha = j.at("alpha").get<double>();
    cfg.policy.lambda = j.at("lambda").get<int>();
    cfg.policy.n = j.at("n").get<int>();
    cfg.beam.beam_size = j.at("beam_size").get<int>();
    cfg.beam.max_new_tokens = j.at("max_new_tokens").get<int>();
    cfg.beam.length_norm_alpha = j.at("length_norm_alpha").get<double>();
    cfg.cfm.enabled = j.at("cfm").get<bool>();
    cfg.cfm.beta = j.at("beta").get<double>();
    cfg.cfm.feedback_floor = j.at("feedback_floor").get<double>();
    cfg.cfm.persist_contrast_in_score = j.at("persist_contrast").get<bool>();
    cfg.chunk_ms = j.at("chunk_ms").get<int>();
    cfg.dataset_path = j.at("dataset").get<std::string>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.workers = j.at("workers").get<int>();
    cfg.clock = clock_mode_from_string(j.at("clock").get<std::string>());
    cfg.bootstrap_resamples = j.at("bootstrap_resamples").get<int>();
    cfg.ci_level = j.at("ci_level").get<double>();
    return cfg;
}

nlohmann::json utterance_to_json(const UtteranceResult& res) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : res.events) {
        events.push_back(
            {{"token", e.token}, {"ideal_ms", e.ideal_delay_ms}, {"wall_ms", e.wall_ms}});
    }
    nlohmann::json chunks = nlohmann::json::array();
    for (const auto& c : res.chunks) {
        chunks.push_back({{"index", c.index},
                          {"frames", c.frames_consumed},
                          {"final", c.is_final},
                          {"cfm", c.cfm_applied},
                          {"hypothesis", c.hypothesis},
                          {"stable", c.stable},
                          {"unstable", c.unstable},
                          {"flush", c.flush}});
    }
    return {{"id", res.id},
            {"source_duration_ms", res.source_duration_ms},
            {"reference", res.reference},
            {"emitted", res.emitted},
            {"events", events},
            {"chunks", chunks}};
}

UtteranceResult utterance_from_json(const nlohmann::json& j) {
    UtteranceResult res;
    res.id = j.at("id").get<std::string>();
    res.source_duration_ms = j.at("source_duration_ms").get<double>();
    res.reference = j.at("reference").get<std::vector<TokenId>>();
    res.emitted = j.at("emitted").get<std::vector<TokenId>>();
    for (const auto& e : j.at("events")) {
        EmissionEvent ev;
        ev.token = e.at("token").get<TokenId>();
        ev.ideal_delay_ms = e.at("ideal_ms").get<double>();
        ev.wall_ms = e.at("wall_ms").get<double>();
        res.events.push_back(ev);
    }
    for (const auto& c : j.at("chunks")) {
        ChunkLog chunk;
        chunk.index = c.at("index").get<int>();
        chunk.frames_consumed = c.at("frames").get<int>();
        chunk.is_final = c.at("final").get<bool>();
        chunk.cfm_applied = c.at("cfm").get<bool>();
        chunk.hypothesis = c.at("hypothesis").get<std::vector<TokenId>>();
        chunk.stable = c.at("stable").get<std::vector<TokenId>>();
        chunk.unstable = c.at("unstable").get<std::vector<TokenId>>();
        chunk.flush = c.at("flush").get<bool>();
        res.chunks.push_back(std::move(chunk));
    }
    return res;
}

}  // namespace

void RunConfig::validate() const {
    policy.validate();
    cfm.validate();
    if (beam.beam_size < 1) throw ConfigError("beam_size must be >= 1");
    if (beam.max_new_tokens < 0) throw ConfigError("max_new_tokens must be >= 0");
    if (beam.length_norm_alpha < 0.0) throw ConfigError("length_norm_alpha must be >= 0");
    if (chunk_ms < 1) throw ConfigError("chunk_ms must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (bootstrap_resamples < 100) throw ConfigError("bootstrap_resamples must be >= 100");
    if (ci_level <= 0.0 || ci_level >= 1.0) throw ConfigError("ci_level must be in (0,1)");
}

void check_policy_params(PolicyKind kind, const std::set<std::string>& set_params) {
    static const std::set<std::string> policy_specific = {"f", "alpha", "lambda", "n"};
    std::set<std::string> allowed;
    switch (kind) {
        case PolicyKind::alignatt: allowed = {"f"}; break;
        case PolicyKind::edatt: allowed = {"alpha", "lambda"}; break;
        case PolicyKind::hold_n: allowed = {"n"}; break;
        case PolicyKind::local_agreement: allowed = {}; break;
    }
    for (const auto& name : set_params) {
        if (policy_specific.count(name) && !allowed.count(name)) {
            throw ConfigError("parameter '" + name + "' does not apply to policy " +
                              to_string(kind));
        }
    }
}

RunSummary run(const RunConfig& cfg) {
    cfg.validate();
    LoadedCorpus corpus = read_corpus_jsonl(cfg.dataset_path);
    SyntheticTask task(corpus.spec);
    return run_on(task, corpus.utterances, cfg);
}

RunSummary run_on(const SyntheticTask& task, std::span<const Utterance> utterances,
                  const RunConfig& cfg) {
    cfg.validate();
    const int frame_ms = task.spec().frame_ms;
    if (cfg.chunk_ms % frame_ms != 0) {
        throw ConfigError("chunk_ms must be a positive multiple of frame_ms (" +
                          std::to_string(frame_ms) + ")");
    }
    const int chunk_frames = cfg.chunk_ms / frame_ms;

    EngineConfig engine_cfg;
    engine_cfg.policy = cfg.policy;
    engine_cfg.beam = cfg.beam;
    engine_cfg.cfm = cfg.cfm;
    engine_cfg.frames_per_token = task.spec().frames_per_token;
    engine_cfg.clock = cfg.clock;

    std::vector<UtteranceResult> results(utterances.size());
    const int workers = std::min<int>(cfg.workers, std::max<std::size_t>(utterances.size(), 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < utterances.size(); ++i) {
            results[i] = run_one(task, utterances[i], engine_cfg, chunk_frames);
        }
    } else {
        std::vector<std::thread> threads;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            threads.emplace_back([&, w] {
                try {
                    for (std::size_t i = static_cast<std::size_t>(w); i < utterances.size();
                         i += static_cast<std::size_t>(workers)) {
                        results[i] = run_one(task, utterances[i], engine_cfg, chunk_frames);
                    }
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        }
        for (auto& t : threads) t.join();
        for (const auto& err : errors) {
            if (err) std::rethrow_exception(err);
        }
    }
    return aggregate(std::move(results), cfg);
}

void write_run_log(const std::filesystem::path& path, const RunConfig& cfg,
                   const RunSummary& summary) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open for writing: " + path.string());
    nlohmann::json header = {{"type", "header"}, {"config", config_to_json(cfg)}};
    out << header.dump() << "\n";
    for (const auto& res : summary.utterances) {
        out << utterance_to_json(res).dump() << "\n";
    }
    if (!out) throw InputError("write failed: " + path.string());
}

RunSummary score(const std::filesystem::path& run_log_path) {
    std::ifstream in(run_log_path);
    if (!in) throw InputError("cannot open run log: " + run_log_path.string());

    bool have_config = false;
    RunConfig cfg;
    std::vector<UtteranceResult> results;
    std::string line;
    int record = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++record;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            if (j.is_object() && j.value("type", "") == "header") {
                // Concatenated logs carry several headers; the first one
                // provides the configuration echo and metric settings.
                if (!have_config) {
                    cfg = config_from_json(j.at("config"));
                    have_config = true;
                }
                continue;
            }
            results.push_back(utterance_from_json(j));
        } catch (const nlohmann::json::exception& e) {
            throw InputError("run log " + run_log_path.string() + ": record " +
                             std::to_string(record) + ": " + e.what());
        }
    }
    if (!have_config) {
        throw InputError("run log " + run_log_path.string() + ": missing header record");
    }
    if (results.empty()) {
        throw InputError("run log " + run_log_path.string() + ": no utterance records");
    }
    return aggregate(std::move(results), cfg);
}

bool is_sweepable_field(const std::string& name) {
    static const std::set<std::string> fields = {"chunk_ms", "f", "alpha", "lambda",
                                                 "n", "beam_size", "length_norm_alpha", "beta"};
    return fields.count(name) > 0;
}

namespace {

void apply_sweep_field(RunConfig& cfg, const std::string& name, double value) {
    if (name == "chunk_ms") {
        cfg.chunk_ms = static_cast<int>(std::llround(value));
    } else if (name == "f") {
        cfg.policy.f = static_cast<int>(std::llround(value));
    } else if (name == "alpha") {
        cfg.policy.alpha = value;
    } else if (name == "lambda") {
        cfg.policy.lambda = static_cast<int>(std::llround(value));
    } else if (name == "n") {
        cfg.policy.n = static_cast<int>(std::llround(value));
    } else if (name == "beam_size") {
        cfg.beam.beam_size = static_cast<int>(std::llround(value));
    } else if (name == "length_norm_alpha") {
        cfg.beam.length_norm_alpha = value;
    } else if (name == "beta") {
        cfg.cfm.beta = value;
    } else {
        throw ConfigError("unknown sweep parameter: " + name);
    }
}

}  // namespace

std::vector<RunSummary> sweep(const SweepConfig& cfg) {
    cfg.base.validate();
    for (const auto& [name, values] : cfg.grid) {
        if (!is_sweepable_field(name)) {
            throw ConfigError("unknown sweep parameter: " + name);
        }
        if (values.empty()) {
            throw ConfigError("sweep parameter '" + name + "' has no values");
        }
        check_policy_params(cfg.base.policy.kind, {name});
    }

    std::vector<RunConfig> points{cfg.base};
    for (const auto& [name, values] : cfg.grid) {
        std::vector<RunConfig> expanded;
        expanded.reserve(points.size() * values.size());
        for (const auto& point : points) {
            for (double value : values) {
                RunConfig next = point;
                apply_sweep_field(next, name, value);
                expanded.push_back(std::move(next));
            }
        }
        points = std::move(expanded);
    }

    LoadedCorpus corpus = read_corpus_jsonl(cfg.base.dataset_path);
    SyntheticTask task(corpus.spec);

    std::vector<RunSummary> rows;
    for (const auto& point : points) {
        if (cfg.paired_ablation) {
            for (bool enabled : {false, true}) {
                RunConfig paired = point;
                paired.cfm.enabled = enabled;
                rows.push_back(run_on(task, corpus.utterances, paired));
            }
        } else {
            rows.push_back(run_on(task, corpus.utterances, point));
        }
    }

    std::sort(rows.begin(), rows.end(), [](const RunSummary& a, const RunSummary& b) {
        if (a.laal_ideal_mean != b.laal_ideal_mean) return a.laal_ideal_mean < b.laal_ideal_mean;
        if (a.policy != b.policy) return a.policy < b.policy;
        if (a.param != b.param) return a.param < b.param;
        if (a.chunk_ms != b.chunk_ms) return a.chunk_ms < b.chunk_ms;
        return a.cfm_on < b.cfm_on;
    });
    return rows;
}

std::string summary_tsv(std::span<const RunSummary> rows) {
    std::string out;
    for (const auto& row : rows) {
        if (row.clock == ClockMode::measured) {
            out += "# clock=measured: wall-clock timings are environment-dependent; "
                   "determinism guarantees do not apply\n";
            break;
        }
    }
    out += "policy\tparam\tchunk_ms\tcfm\tbleu\tbleu_ci_low\tbleu_ci_high\tlaal_ideal\t"
           "laal_ca\tstall_rate\n";
    for (const auto& row : rows) {
        out += row.policy;
        out += '\t';
        out += row.param;
        out += '\t';
        out += std::to_string(row.chunk_ms);
        out += '\t';
        out += row.cfm_on ? "on" : "off";
        out += '\t';
        out += format_double("%.4f", row.bleu);
        out += '\t';
        out += format_double("%.4f", row.ci_low);
        out += '\t';
        out += format_double("%.4f", row.ci_high);
        out += '\t';
        out += format_double("%.3f", row.laal_ideal_mean);
        out += '\t';
        out += format_double("%.3f", row.laal_ca_mean);
        out += '\t';
        out += format_double("%.4f", row.stall_rate);
        out += '\n';
    }
    return out;
}

void write_summary_tsv(const std::filesystem::path& path, std::span<const RunSummary> rows) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open for writing: " + path.string());
    out << summary_tsv(rows);
    if (!out) throw InputError("write failed: " + path.string());
}

}  // namespace sst
