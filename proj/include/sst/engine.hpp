#pragma once

// Chunk-level simultaneous decoding loop: extend the source prefix, decode
// with the emitted target forced, rescore the first step with feedback when
// present, apply the decision policy, commit the stable tokens, and carry
// the new feedback to the next chunk. Emitted tokens are never retracted.

#include "sst/beam.hpp"
#include "sst/cfm.hpp"
#include "sst/policies.hpp"

namespace sst {

enum class ClockMode { ideal, measured };

const char* to_string(ClockMode mode);
ClockMode clock_mode_from_string(const std::string& name);

struct EngineConfig {
    PolicyConfig policy;
    BeamConfig beam;  // beam.max_new_tokens == 0 selects the task-aware cap
    CfmConfig cfm;
    int frames_per_token = 5;  // used by the automatic per-chunk length cap
    ClockMode clock = ClockMode::ideal;

    void validate() const {
        policy.validate();
        cfm.validate();
        if (beam.beam_size < 1) throw ConfigError("beam_size must be >= 1");
        if (beam.max_new_tokens < 0) throw ConfigError("max_new_tokens must be >= 0");
        if (beam.length_norm_alpha < 0.0) throw ConfigError("length_norm_alpha must be >= 0");
        if (frames_per_token < 1) throw ConfigError("frames_per_token must be >= 1");
    }
};

// What one chunk did, for run logs and debugging.
struct ChunkLog {
    int index = 0;
    int frames_consumed = 0;
    bool is_final = false;
    bool cfm_applied = false;
    std::vector<TokenId> hypothesis;  // generated continuation, EOS included
    std::vector<TokenId> stable;
    std::vector<TokenId> unstable;
    bool flush = false;
};

struct StreamState {
    std::vector<TokenId> emitted;
    FeedbackState feedback;
    std::vector<TokenId> prev_continuation;  // local agreement only
    int frames_consumed = 0;
    std::vector<EmissionEvent> events;
    std::vector<ChunkLog> chunks;
    bool closed = false;

    int frame_ms = 0;
    std::vector<int> source_frames;  // accumulated prefix
    double wall_done_ms = 0.0;       // pipeline clock: when processing finished
};

StreamState make_stream(int frame_ms);

// One step of the chunk loop. new_frames may be empty only on the final
// chunk; calling again after the final chunk is a usage error.
void step_chunk(StreamState& state, std::span<const int> new_frames,
                const TranslationModel& model, const EngineConfig& cfg, bool is_final);

// Feed a whole utterance in chunks of chunk_frames; the chunk that consumes
// the last frame is the final one.
StreamState run_stream(const TranslationModel& model, const SourcePrefix& source,
                       const EngineConfig& cfg, int chunk_frames);

}  // namespace sst
