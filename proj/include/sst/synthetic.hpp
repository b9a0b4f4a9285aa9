#pragma once

// Deterministic synthetic translation task and model. The task is monotonic
// one-to-one: every source token maps to exactly one target token. A
// configurable fraction of source tokens are ambiguous: they carry two
// candidate senses, and the correct one depends on a disambiguator source
// token appearing 1-3 positions later. The model prefers the default sense
// until the disambiguator is received and keeps a sticky prior on it
// afterwards, so greedy decoding can stay wrong even with enough context
// while the probability ratios still reveal the correct sense.

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sst/model.hpp"

namespace sst {

struct TaskSpec {
    std::uint64_t seed = 1;
    int vocab_size = 64;
    int utterance_count = 100;
    int source_len_min = 8;
    int source_len_max = 20;
    int frames_per_token = 5;
    int frame_ms = 40;
    double ambiguity_rate = 0.3;
    double sticky_prior = 0.65;
    double attn_spread = 0.5;

    void validate() const;
};

struct AmbiguityNote {
    int position = 0;
    bool alt_sense = false;                // a disambiguator follows within 1-3 tokens
    bool argmax_wrong_at_arrival = false;  // sticky mass still beats the correct sense
                                           // when the disambiguator has just been received
};

struct Utterance {
    std::string id;
    SourcePrefix frames;
    std::vector<TokenId> reference;  // one target token per source token
    std::vector<AmbiguityNote> ambiguities;
};

struct CorpusStats {
    int ambiguous_positions = 0;
    int alt_sense_positions = 0;
    int argmax_wrong_at_arrival = 0;

    double argmax_wrong_fraction() const {
        return alt_sense_positions == 0
                   ? 0.0
                   : static_cast<double>(argmax_wrong_at_arrival) / alt_sense_positions;
    }
};

CorpusStats corpus_stats(std::span<const Utterance> utterances);

class SyntheticTask : public TranslationModel {
public:
    explicit SyntheticTask(TaskSpec spec);

    const TaskSpec& spec() const { return spec_; }

    // Deterministic for a fixed spec (seed included).
    std::vector<Utterance> generate() const;

    // TranslationModel interface.
    const Vocabulary& vocab() const override { return vocab_; }
    EncoderHandle encode(const SourcePrefix& prefix) const override;
    StepOutput decode_step(const EncoderHandle& handle,
                           std::span<const TokenId> target_prefix) const override;

    // Symbol tables, exposed for tests and oracles.
    struct AmbiguousSymbolInfo {
        int symbol = 0;
        TokenId default_target = 0;  // preferred without the disambiguator
        TokenId alt_target = 0;      // correct when the disambiguator follows
        int disamb_symbol = 0;       // plain symbol that flips the sense
        double minority_mass = 0.0;  // m: pre-disambiguation mass on the correct sense
    };
    int plain_symbol_count() const { return plain_count_; }
    int symbol_count() const { return plain_count_ + static_cast<int>(ambiguous_.size()); }
    const std::vector<AmbiguousSymbolInfo>& ambiguous_symbols() const { return ambiguous_; }
    TokenId plain_target(int symbol) const;

    // Share of structured mass left on the default (wrong) sense once the
    // disambiguator has been in context for `extra` additional source tokens.
    double wrong_share(double minority_mass, int extra_context) const;

    // Mass split between the two senses and the smoothing remainder; used by
    // tests to predict distributions in closed form.
    static constexpr double kSmoothMass = 0.02;

private:
    ProbDist make_dist(std::span<const int> symbols, int n_avail, int pos) const;
    AttentionRow make_attention(int pos, int frames_seen) const;

    TaskSpec spec_;
    Vocabulary vocab_;
    int plain_count_ = 0;
    std::vector<AmbiguousSymbolInfo> ambiguous_;
};

// Corpus persistence: JSON lines with a leading header object that carries
// the TaskSpec (so a run can rebuild the model) and generation-time stats.
void write_corpus_jsonl(const std::filesystem::path& path, const TaskSpec& spec,
                        std::span<const Utterance> utterances);

struct LoadedCorpus {
    TaskSpec spec;
    CorpusStats stats;
    std::vector<Utterance> utterances;
};

LoadedCorpus read_corpus_jsonl(const std::filesystem::path& path);

}  // namespace sst
