#pragma once

// Abstract incremental translation model. The engine re-encodes the full
// source prefix each chunk (re-translation paradigm) and decodes step by
// step with the emitted target forced as a prefix. Implementations must be
// deterministic and side-effect free so streams can replay and evaluation
// workers can share one instance read-only.

#include <memory>
#include <span>

#include "sst/core.hpp"

namespace sst {

// Opaque frame symbols plus the duration of one frame.
struct SourcePrefix {
    std::vector<int> frames;
    int frame_ms = 0;

    SourcePrefix() = default;
    SourcePrefix(std::vector<int> f, int ms) : frames(std::move(f)), frame_ms(ms) {
        if (frame_ms <= 0) throw std::invalid_argument("frame_ms must be > 0");
    }

    double duration_ms() const { return static_cast<double>(frames.size()) * frame_ms; }
};

// State produced by encoding a source prefix; valid for decode_step with any
// target prefix. `state` is model-defined.
struct EncoderHandle {
    std::shared_ptr<const void> state;
    int frames_seen = 0;
};

struct StepOutput {
    ProbDist dist;
    AttentionRow attn;  // length == frames_seen, already layer-selected and head-averaged
};

class TranslationModel {
public:
    virtual ~TranslationModel() = default;

    virtual const Vocabulary& vocab() const = 0;

    virtual EncoderHandle encode(const SourcePrefix& prefix) const = 0;

    // target_prefix must be non-empty and begin with BOS.
    virtual StepOutput decode_step(const EncoderHandle& handle,
                                   std::span<const TokenId> target_prefix) const = 0;

protected:
    void require_target_prefix(std::span<const TokenId> target_prefix) const {
        if (target_prefix.empty()) {
            throw std::invalid_argument("decode_step: empty target prefix");
        }
        if (target_prefix.front() != vocab().bos()) {
            throw std::invalid_argument("decode_step: target prefix must begin with BOS");
        }
    }
};

}  // namespace sst
