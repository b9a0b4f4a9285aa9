#pragma once

// Stable-hypothesis-detection decision policies. Each policy splits the
// chunk's continuation (the generated part of the best hypothesis) into a
// stable prefix to emit now and an unstable suffix to hold. EOS is never
// emitted mid-stream: if a policy's stable prefix would cover the generated
// EOS, emission stops right before it and the rest becomes unstable.

#include <span>

#include "sst/core.hpp"

namespace sst {

enum class PolicyKind { local_agreement, hold_n, edatt, alignatt };

const char* to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& name);

struct PolicyConfig {
    PolicyKind kind = PolicyKind::local_agreement;
    int f = 4;            // AlignAtt: frames in the frontier window
    double alpha = 0.1;   // EDAtt: attention-mass threshold
    int lambda = 2;       // EDAtt: frames summed at the frontier
    int n = 2;            // Hold-n: tokens held back

    void validate() const {
        if (f < 0) throw ConfigError("alignatt f must be >= 0");
        if (alpha <= 0.0 || alpha > 1.0) throw ConfigError("edatt alpha must be in (0,1]");
        if (lambda < 1) throw ConfigError("edatt lambda must be >= 1");
        if (n < 0) throw ConfigError("hold-n n must be >= 0");
    }
};

// View over a hypothesis continuation: one distribution and one attention
// row per token.
struct Continuation {
    std::span<const TokenId> tokens;
    std::span<const ProbDist> dists;
    std::span<const AttentionRow> attn;

    static Continuation of(const Hypothesis& hyp) {
        return Continuation{hyp.generated(), hyp.step_dists, hyp.step_attn};
    }
};

namespace policies {

// Emit the longest common prefix of the previous chunk's unstable
// continuation and the current one. An empty prev (first chunk) emits
// nothing.
PolicyDecision local_agreement(std::span<const TokenId> prev_continuation,
                               const Continuation& curr, TokenId eos);

// Hold back the last n tokens.
PolicyDecision hold_n(const Continuation& curr, int n, TokenId eos);

// Stop emission at the first token whose attention argmax falls in the last
// f received frames.
PolicyDecision alignatt(const Continuation& curr, int f, TokenId eos);

// Stop emission at the first token whose attention mass on the last lambda
// frames exceeds alpha.
PolicyDecision edatt(const Continuation& curr, double alpha, int lambda, TokenId eos);

// Source exhausted: emit everything up to (excluding) EOS.
PolicyDecision finalize_flush(const Continuation& curr, TokenId eos);

// Dispatch on the configured policy; routes to finalize_flush when the
// source is fully received.
PolicyDecision apply(const PolicyConfig& cfg, const Continuation& curr,
                     std::span<const TokenId> prev_continuation, bool source_exhausted,
                     TokenId eos);

}  // namespace policies
}  // namespace sst
