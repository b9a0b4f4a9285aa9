#pragma once

// Incremental prefix-forced beam search over one chunk. The already emitted
// target (plus BOS) is teacher-forced and contributes no score; every newly
// generated step adds its log probability to the cumulative score. An
// optional rescorer replaces the scores of the first generated step, which
// is where contrastive feedback plugs in.

#include <functional>
#include <span>

#include "sst/model.hpp"

namespace sst {

struct BeamConfig {
    int beam_size = 5;
    int max_new_tokens = 1;
    double length_norm_alpha = 1.0;  // applied at final ranking only

    void validate() const {
        if (beam_size < 1) throw std::invalid_argument("beam_size must be >= 1");
        if (max_new_tokens < 1) throw std::invalid_argument("max_new_tokens must be >= 1");
        if (length_norm_alpha < 0.0) {
            throw std::invalid_argument("length_norm_alpha must be >= 0");
        }
    }
};

// Per-token scores for the first generated step. Entries may be -inf, which
// removes the token from the step-0 frontier entirely. When
// `persist_in_score` is set the returned score replaces the step-0 log
// probability in the cumulative beam score; otherwise it only drives the
// step-0 selection and the cumulative score keeps the plain log probability.
struct StepZeroRescorer {
    std::function<std::vector<double>(const ProbDist&)> score;
    bool persist_in_score = true;
};

// Returns the best finished-or-length-capped hypothesis. Score of the result
// is the cumulative log score divided by generated_length^length_norm_alpha.
// Ties in pruning are broken by lower token id, then by earlier insertion.
Hypothesis beam_decode(const TranslationModel& model, const EncoderHandle& handle,
                       std::span<const TokenId> forced_prefix, const BeamConfig& cfg,
                       const StepZeroRescorer* step0_rescorer = nullptr);

}  // namespace sst
