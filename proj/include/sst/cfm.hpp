#pragma once

// Contrastive feedback rescoring. The unstable suffix of a chunk's
// hypothesis is distilled into a feedback distribution P_f; the next chunk's
// first decoding step then scores each plausible candidate y as
//
//     score(y) = log p_c(y) + log(p_c(y) / max(p_f(y), eps))
//              = 2 log p_c(y) - log max(p_f(y), eps)
//
// and suppresses everything outside the plausibility set V_beta to -inf.
// Natural logs are used throughout; rankings are invariant to the log base
// because the scores differ only by a positive scalar factor.

#include <span>

#include "sst/beam.hpp"
#include "sst/policies.hpp"

namespace sst {

struct CfmConfig {
    double beta = 0.1;             // plausibility constraint factor
    double feedback_floor = 1e-12; // eps floor on p_f
    bool enabled = true;
    bool persist_contrast_in_score = true;  // keep the contrast term in the beam score

    void validate() const {
        if (beta <= 0.0 || beta > 1.0) throw ConfigError("cfm beta must be in (0,1]");
        if (feedback_floor <= 0.0) throw ConfigError("cfm feedback_floor must be > 0");
    }
};

namespace cfm {

// Feedback selection per policy: attention-based policies (and Hold-n, as an
// extension) average the unstable distributions; local agreement takes the
// first unstable distribution. Empty unstable yields no feedback, which
// skips rescoring on the next chunk.
FeedbackState extract_feedback(PolicyKind kind,
                               std::span<const std::pair<TokenId, ProbDist>> unstable);

// V_beta = { y : p_c(y) >= beta * max_w p_c(w) }, ascending token ids.
std::vector<TokenId> plausible_set(const ProbDist& p_c, double beta);

// Length-V score vector; -inf outside V_beta.
std::vector<double> cfm_score(const ProbDist& p_c, const ProbDist& p_f, const CfmConfig& cfg);

// Step-0 rescorer wired for beam_decode. The feedback must be present.
StepZeroRescorer make_rescorer(const FeedbackState& feedback, const CfmConfig& cfg);

}  // namespace cfm
}  // namespace sst
