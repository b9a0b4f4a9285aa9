#include "sst/synthetic.hpp"

#include <fstream>
#include <map>

#include <json.hpp>

namespace sst {
namespace {

constexpr double kMinorityLo = 0.1;
constexpr double kMinorityHi = 0.4;
// Half of the ambiguous draws get a planted disambiguator (alt sense).
constexpr double kAltSenseRate = 0.5;

// Uniform double in [0,1) from the raw engine; avoids stdlib distribution
// differences so corpora are bit-identical across toolchains.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

Vocabulary make_vocab(int vocab_size) {
    std::vector<std::string> surfaces;
    surfaces.reserve(static_cast<std::size_t>(vocab_size));
    surfaces.emplace_back("<s>");
    surfaces.emplace_back("</s>");
    for (int i = 2; i < vocab_size; ++i) {
        surfaces.push_back("w" + std::to_string(i));
    }
    return Vocabulary(std::move(surfaces), /*bos=*/0, /*eos=*/1);
}

struct SynthState {
    std::vector<int> symbols;  // one per fully received source token
};

}  // namespace

void TaskSpec::validate() const {
    if (vocab_size < 8) throw ConfigError("vocab_size must be >= 8");
    if (utterance_count < 1) throw ConfigError("utterance_count must be >= 1");
    if (source_len_min < 1 || source_len_max < source_len_min) {
        throw ConfigError("source length range must satisfy 1 <= min <= max");
    }
    if (frames_per_token < 1) throw ConfigError("frames_per_token must be >= 1");
    if (frame_ms < 1) throw ConfigError("frame_ms must be >= 1");
    if (ambiguity_rate < 0.0 || ambiguity_rate > 1.0) {
        throw ConfigError("ambiguity_rate must be in [0,1]");
    }
    if (sticky_prior <= 0.0 || sticky_prior >= 1.0) {
        throw ConfigError("sticky_prior must be in (0,1)");
    }
    if (attn_spread <= 0.0) throw ConfigError("attn_spread must be > 0");
}

SyntheticTask::SyntheticTask(TaskSpec spec)
    : spec_(std::move(spec)), vocab_(make_vocab(std::max(spec_.vocab_size, 8))) {
    spec_.validate();

    const int words = spec_.vocab_size - 2;
    const int amb = std::max(1, words / 4);
    plain_count_ = words - 2 * amb;

    std::mt19937_64 rng(spec_.seed);
    ambiguous_.reserve(static_cast<std::size_t>(amb));
    for (int k = 0; k < amb; ++k) {
        AmbiguousSymbolInfo info;
        info.symbol = plain_count_ + k;
        info.default_target = static_cast<TokenId>(2 + plain_count_ + 2 * k);
        info.alt_target = info.default_target + 1;
        // Stratified minority masses: low strata stay argmax-wrong under the
        // sticky prior, high strata recover on context alone.
        info.minority_mass =
            kMinorityLo + (kMinorityHi - kMinorityLo) * (k + uniform01(rng)) / amb;
        info.disamb_symbol = uniform_int(rng, 0, plain_count_ - 1);
        ambiguous_.push_back(info);
    }
}

TokenId SyntheticTask::plain_target(int symbol) const {
    if (symbol < 0 || symbol >= plain_count_) {
        throw std::invalid_argument("not a plain symbol: " + std::to_string(symbol));
    }
    return static_cast<TokenId>(2 + symbol);
}

double SyntheticTask::wrong_share(double minority_mass, int extra_context) const {
    double share = (1.0 - minority_mass) * spec_.sticky_prior;
    for (int i = 0; i < extra_context; ++i) share *= spec_.sticky_prior;
    return share;
}

std::vector<Utterance> SyntheticTask::generate() const {
    std::mt19937_64 rng(spec_.seed + 0x9E3779B97F4A7C15ULL);
    std::vector<Utterance> out;
    out.reserve(static_cast<std::size_t>(spec_.utterance_count));

    const int amb_count = static_cast<int>(ambiguous_.size());
    for (int u = 0; u < spec_.utterance_count; ++u) {
        const int len = uniform_int(rng, spec_.source_len_min, spec_.source_len_max);

        // Draw the symbol sequence, planting disambiguators for alt senses.
        std::vector<int> symbols(static_cast<std::size_t>(len), -1);
        std::map<int, int> pending;  // position -> plain symbol to place there
        for (int k = 0; k < len; ++k) {
            if (auto it = pending.find(k); it != pending.end()) {
                symbols[static_cast<std::size_t>(k)] = it->second;
                pending.erase(it);
                continue;
            }
            if (uniform01(rng) < spec_.ambiguity_rate) {
                const auto& info =
                    ambiguous_[static_cast<std::size_t>(uniform_int(rng, 0, amb_count - 1))];
                symbols[static_cast<std::size_t>(k)] = info.symbol;
                if (uniform01(rng) < kAltSenseRate) {
                    const int pos = k + uniform_int(rng, 1, 3);
                    if (pos < len && !pending.count(pos)) {
                        pending[pos] = info.disamb_symbol;
                    }
                }
            } else {
                symbols[static_cast<std::size_t>(k)] = uniform_int(rng, 0, plain_count_ - 1);
            }
        }

        // References follow the disambiguation rule on the final sequence, so
        // accidental disambiguators count exactly as planted ones do.
        Utterance utt;
        utt.id = "utt" + std::to_string(u);
        utt.reference.reserve(static_cast<std::size_t>(len));
        for (int k = 0; k < len; ++k) {
            const int sym = symbols[static_cast<std::size_t>(k)];
            if (sym < plain_count_) {
                utt.reference.push_back(plain_target(sym));
                continue;
            }
            const auto& info = ambiguous_[static_cast<std::size_t>(sym - plain_count_)];
            bool alt = false;
            for (int j = k + 1; j <= std::min(k + 3, len - 1); ++j) {
                if (symbols[static_cast<std::size_t>(j)] == info.disamb_symbol) {
                    alt = true;
                    break;
                }
            }
            utt.reference.push_back(alt ? info.alt_target : info.default_target);
            AmbiguityNote note;
            note.position = k;
            note.alt_sense = alt;
            note.argmax_wrong_at_arrival = alt && wrong_share(info.minority_mass, 0) > 0.5;
            utt.ambiguities.push_back(note);
        }

        std::vector<int> frames;
        frames.reserve(static_cast<std::size_t>(len * spec_.frames_per_token));
        for (int k = 0; k < len; ++k) {
            for (int g = 0; g < spec_.frames_per_token; ++g) {
                frames.push_back(symbols[static_cast<std::size_t>(k)]);
            }
        }
        utt.frames = SourcePrefix(std::move(frames), spec_.frame_ms);
        out.push_back(std::move(utt));
    }
    return out;
}

EncoderHandle SyntheticTask::encode(const SourcePrefix& prefix) const {
    auto state = std::make_shared<SynthState>();
    const int n_avail = static_cast<int>(prefix.frames.size()) / spec_.frames_per_token;
    state->symbols.reserve(static_cast<std::size_t>(n_avail));
    for (int k = 0; k < n_avail; ++k) {
        const int sym = prefix.frames[static_cast<std::size_t>(k * spec_.frames_per_token)];
        if (sym < 0 || sym >= symbol_count()) {
            throw std::invalid_argument("frame symbol out of range: " + std::to_string(sym));
        }
        state->symbols.push_back(sym);
    }
    EncoderHandle handle;
    handle.state = std::move(state);
    handle.frames_seen = static_cast<int>(prefix.frames.size());
    return handle;
}

ProbDist SyntheticTask::make_dist(std::span<const int> symbols, int n_avail, int pos) const {
    const int v = vocab_.size();
    // Smoothing mass is spread over every token except BOS.
    std::vector<double> probs(static_cast<std::size_t>(v), 0.0);
    const double smooth_each = kSmoothMass / static_cast<double>(v - 1);
    for (int t = 1; t < v; ++t) probs[static_cast<std::size_t>(t)] = smooth_each;

    const double structured = 1.0 - kSmoothMass;
    if (pos >= n_avail) {
        // Frontier: the source token for this position has not fully arrived.
        probs[static_cast<std::size_t>(vocab_.eos())] += structured;
        return ProbDist(std::move(probs));
    }

    const int sym = symbols[static_cast<std::size_t>(pos)];
    if (sym < plain_count_) {
        probs[static_cast<std::size_t>(plain_target(sym))] += structured;
        return ProbDist(std::move(probs));
    }

    const auto& info = ambiguous_[static_cast<std::size_t>(sym - plain_count_)];
    int disamb_at = -1;
    for (int j = pos + 1; j <= std::min(pos + 3, n_avail - 1); ++j) {
        if (symbols[static_cast<std::size_t>(j)] == info.disamb_symbol) {
            disamb_at = j;
            break;
        }
    }
    double wrong;
    if (disamb_at < 0) {
        wrong = 1.0 - info.minority_mass;
    } else {
        wrong = wrong_share(info.minority_mass, n_avail - 1 - disamb_at);
    }
    probs[static_cast<std::size_t>(info.default_target)] += structured * wrong;
    probs[static_cast<std::size_t>(info.alt_target)] += structured * (1.0 - wrong);
    return ProbDist(std::move(probs));
}

AttentionRow SyntheticTask::make_attention(int pos, int frames_seen) const {
    if (frames_seen == 0) return AttentionRow();
    const double g = static_cast<double>(spec_.frames_per_token);
    const double mu = pos * g + 0.5 * g;
    const double sigma = spec_.attn_spread * g;
    // Shift exponents so the closest frame gets weight 1; a center far past
    // the received frames would otherwise underflow the whole row to zero.
    const double closest = std::clamp(mu, 0.0, static_cast<double>(frames_seen - 1));
    const double z0 = (closest - mu) / sigma;
    const double shift = 0.5 * z0 * z0;
    std::vector<double> w(static_cast<std::size_t>(frames_seen));
    double sum = 0.0;
    for (int f = 0; f < frames_seen; ++f) {
        const double z = (f - mu) / sigma;
        w[static_cast<std::size_t>(f)] = std::exp(shift - 0.5 * z * z);
        sum += w[static_cast<std::size_t>(f)];
    }
    for (double& x : w) x /= sum;
    return AttentionRow(std::move(w));
}

StepOutput SyntheticTask::decode_step(const EncoderHandle& handle,
                                      std::span<const TokenId> target_prefix) const {
    require_target_prefix(target_prefix);
    const auto* state = static_cast<const SynthState*>(handle.state.get());
    if (state == nullptr) {
        throw std::invalid_argument("decode_step: handle was not produced by this model");
    }
    const int pos = static_cast<int>(target_prefix.size()) - 1;
    const int n_avail = static_cast<int>(state->symbols.size());
    StepOutput out{make_dist(state->symbols, n_avail, pos),
                   make_attention(pos, handle.frames_seen)};
    return out;
}

CorpusStats corpus_stats(std::span<const Utterance> utterances) {
    CorpusStats stats;
    for (const auto& utt : utterances) {
        for (const auto& note : utt.ambiguities) {
            ++stats.ambiguous_positions;
            if (note.alt_sense) ++stats.alt_sense_positions;
            if (note.argmax_wrong_at_arrival) ++stats.argmax_wrong_at_arrival;
        }
    }
    return stats;
}

namespace {

nlohmann::json spec_to_json(const TaskSpec& spec) {
    return {{"seed", spec.seed},
            {"vocab_size", spec.vocab_size},
            {"utterance_count", spec.utterance_count},
            {"source_len_min", spec.source_len_min},
            {"source_len_max", spec.source_len_max},
            {"frames_per_token", spec.frames_per_token},
            {"frame_ms", spec.frame_ms},
            {"ambiguity_rate", spec.ambiguity_rate},
            {"sticky_prior", spec.sticky_prior},
            {"attn_spread", spec.attn_spread}};
}

TaskSpec spec_from_json(const nlohmann::json& j) {
    TaskSpec spec;
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.vocab_size = j.at("vocab_size").get<int>();
    spec.utterance_count = j.at("utterance_count").get<int>();
    spec.source_len_min = j.at("source_len_min").get<int>();
    spec.source_len_max = j.at("source_len_max").get<int>();
    spec.frames_per_token = j.at("frames_per_token").get<int>();
    spec.frame_ms = j.at("frame_ms").get<int>();
    spec.ambiguity_rate = j.at("ambiguity_rate").get<double>();
    spec.sticky_prior = j.at("sticky_prior").get<double>();
    spec.attn_spread = j.at("attn_spread").get<double>();
    return spec;
}

}  // namespace

void write_corpus_jsonl(const std::filesystem::path& path, const TaskSpec& spec,
                        std::span<const Utterance> utterances) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open for writing: " + path.string());

    const CorpusStats stats = corpus_stats(utterances);
    nlohmann::json header = {
        {"type", "header"},
        {"spec", spec_to_json(spec)},
        {"stats",
         {{"ambiguous_positions", stats.ambiguous_positions},
          {"alt_sense_positions", stats.alt_sense_positions},
          {"argmax_wrong_at_arrival", stats.argmax_wrong_at_arrival}}}};
    out << header.dump() << "\n";

    for (const auto& utt : utterances) {
        nlohmann::json amb = nlohmann::json::array();
        for (const auto& note : utt.ambiguities) {
            amb.push_back({{"position", note.position},
                           {"alt_sense", note.alt_sense},
                           {"argmax_wrong_at_arrival", note.argmax_wrong_at_arrival}});
        }
        nlohmann::json j = {{"id", utt.id},
                            {"frames", utt.frames.frames},
                            {"frame_ms", utt.frames.frame_ms},
                            {"reference", utt.reference},
                            {"ambiguities", amb}};
        out << j.dump() << "\n";
    }
    if (!out) throw InputError("write failed: " + path.string());
}

LoadedCorpus read_corpus_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open corpus: " + path.string());

    LoadedCorpus corpus;
    std::string line;
    int line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw InputError("corpus " + path.string() + " line " + std::to_string(line_no) +
                             ": " + e.what());
        }
        try {
            if (j.is_object() && j.value("type", "") == "header") {
                corpus.spec = spec_from_json(j.at("spec"));
                const auto& stats = j.at("stats");
                corpus.stats.ambiguous_positions = stats.at("ambiguous_positions").get<int>();
                corpus.stats.alt_sense_positions = stats.at("alt_sense_positions").get<int>();
                corpus.stats.argmax_wrong_at_arrival =
                    stats.at("argmax_wrong_at_arrival").get<int>();
                saw_header = true;
                continue;
            }
            Utterance utt;
            utt.id = j.at("id").get<std::string>();
            utt.frames = SourcePrefix(j.at("frames").get<std::vector<int>>(),
                                      j.at("frame_ms").get<int>());
            utt.reference = j.at("reference").get<std::vector<TokenId>>();
            for (const auto& a : j.at("ambiguities")) {
                AmbiguityNote note;
                note.position = a.at("position").get<int>();
                note.alt_sense = a.at("alt_sense").get<bool>();
                note.argmax_wrong_at_arrival = a.at("argmax_wrong_at_arrival").get<bool>();
                utt.ambiguities.push_back(note);
            }
            corpus.utterances.push_back(std::move(utt));
        } catch (const nlohmann::json::exception& e) {
            throw InputError("corpus " + path.string() + " line " + std::to_string(line_no) +
                             ": " + e.what());
        }
    }
    if (!saw_header) {
        throw InputError("corpus " + path.string() + ": missing header line");
    }
    return corpus;
}

}  // namespace sst
