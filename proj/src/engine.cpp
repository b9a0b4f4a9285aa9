#include "sst/engine.hpp"

#include <chrono>

namespace sst {

const char* to_string(ClockMode mode) {
    return mode == ClockMode::ideal ? "ideal" : "measured";
}

ClockMode clock_mode_from_string(const std::string& name) {
    if (name == "ideal") return ClockMode::ideal;
    if (name == "measured") return ClockMode::measured;
    throw ConfigError("unknown clock mode: " + name);
}

StreamState make_stream(int frame_ms) {
    if (frame_ms <= 0) throw std::invalid_argument("frame_ms must be > 0");
    StreamState state;
    state.frame_ms = frame_ms;
    return state;
}

void step_chunk(StreamState& state, std::span<const int> new_frames,
                const TranslationModel& model, const EngineConfig& cfg, bool is_final) {
    cfg.validate();
    if (state.closed) {
        throw std::logic_error("step_chunk: stream already received its final chunk");
    }
    if (new_frames.empty() && !is_final) {
        throw std::invalid_argument("step_chunk: empty chunk before the final one");
    }

    const auto t0 = std::chrono::steady_clock::now();

    state.source_frames.insert(state.source_frames.end(), new_frames.begin(), new_frames.end());
    state.frames_consumed = static_cast<int>(state.source_frames.size());
    const EncoderHandle handle =
        model.encode(SourcePrefix(state.source_frames, state.frame_ms));

    const Vocabulary& vocab = model.vocab();
    std::vector<TokenId> forced;
    forced.reserve(state.emitted.size() + 1);
    forced.push_back(vocab.bos());
    forced.insert(forced.end(), state.emitted.begin(), state.emitted.end());

    BeamConfig beam = cfg.beam;
    if (beam.max_new_tokens == 0) {
        beam.max_new_tokens = state.frames_consumed / cfg.frames_per_token + 10;
    }

    const bool apply_cfm = cfg.cfm.enabled && state.feedback.has();
    StepZeroRescorer rescorer;
    if (apply_cfm) rescorer = cfm::make_rescorer(state.feedback, cfg.cfm);

    const Hypothesis hyp =
        beam_decode(model, handle, forced, beam, apply_cfm ? &rescorer : nullptr);
    const Continuation cont = Continuation::of(hyp);

    const PolicyDecision decision =
        policies::apply(cfg.policy, cont, state.prev_continuation, is_final, vocab.eos());

    state.feedback = cfm::extract_feedback(cfg.policy.kind, decision.unstable);
    if (cfg.policy.kind == PolicyKind::local_agreement) {
        state.prev_continuation = decision.unstable_ids();
    }

    // Ideal clock: computation is free, emissions are stamped at the source
    // timestamp. Measured clock: the source arrives in real time and chunk
    // processing is serialized behind it, so the wall stamp is
    // max(arrival, previous chunk done) + compute.
    const double ideal_ms = static_cast<double>(state.frames_consumed) * state.frame_ms;
    double wall_stamp = ideal_ms;
    if (cfg.clock == ClockMode::measured) {
        const double compute_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        state.wall_done_ms = std::max(ideal_ms, state.wall_done_ms) + compute_ms;
        wall_stamp = state.wall_done_ms;
    } else {
        state.wall_done_ms = ideal_ms;
    }

    for (TokenId tok : decision.stable) {
        state.emitted.push_back(tok);
        state.events.push_back(EmissionEvent{tok, ideal_ms, wall_stamp});
    }

    ChunkLog log;
    log.index = static_cast<int>(state.chunks.size());
    log.frames_consumed = state.frames_consumed;
    log.is_final = is_final;
    log.cfm_applied = apply_cfm;
    log.hypothesis.assign(cont.tokens.begin(), cont.tokens.end());
    log.stable = decision.stable;
    log.unstable = decision.unstable_ids();
    log.flush = decision.source_exhausted_flush;
    state.chunks.push_back(std::move(log));

    state.closed = is_final;
}

StreamState run_stream(const TranslationModel& model, const SourcePrefix& source,
                       const EngineConfig& cfg, int chunk_frames) {
    if (chunk_frames < 1) throw ConfigError("chunk_frames must be >= 1");
    StreamState state = make_stream(source.frame_ms);
    const std::size_t total = source.frames.size();
    std::size_t consumed = 0;
    do {
        const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(chunk_frames),
                                                       total - consumed);
        const bool is_final = consumed + take == total;
        step_chunk(state,
                   std::span<const int>(source.frames).subspan(consumed, take), model, cfg,
                   is_final);
        consumed += take;
    } while (consumed < total);
    return state;
}

}  // namespace sst
