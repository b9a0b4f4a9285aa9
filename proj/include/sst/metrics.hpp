#pragma once

// Latency and quality metrics: length-adaptive average lagging (LAAL) in
// ideal and computational-aware variants, corpus BLEU over token ids, and a
// percentile bootstrap confidence interval for BLEU.

#include <array>
#include <cstdint>
#include <span>
#include <utility>

#include "sst/core.hpp"

namespace sst {

struct LatencyRecord {
    std::vector<EmissionEvent> events;
    double source_duration_ms = 0.0;
    int ref_len = 0;
};

// With delays d_i (wall clock when computational_aware, else source
// consumed), r = T / max(|Y|, ref_len) and tau the first index with
// d_i >= T (else |Y|):  LAAL = (1/tau) * sum_{i<=tau} (d_i - (i-1) * r).
double laal(const LatencyRecord& rec, bool computational_aware);

// Per-sentence n-gram statistics, accumulated for corpus BLEU and reused by
// the bootstrap resampler.
struct BleuStats {
    std::array<long, 4> matches{0, 0, 0, 0};
    std::array<long, 4> totals{0, 0, 0, 0};
    long hyp_len = 0;
    long ref_len = 0;

    BleuStats& operator+=(const BleuStats& other);
};

BleuStats sentence_bleu_stats(std::span<const TokenId> hyp, std::span<const TokenId> ref);

// Corpus BLEU in [0,100] from accumulated statistics. Zero matches for an
// order n >= 2 are smoothed as 1 / (2 * totals[n]); zero unigram matches
// floor the score to 0.
double bleu_from_stats(const BleuStats& stats);

double corpus_bleu(std::span<const std::vector<TokenId>> hyps,
                   std::span<const std::vector<TokenId>> refs);

// Percentile bootstrap over sentence resamples; deterministic for a fixed
// seed. Bounds are widened to include the point estimate when the percentile
// interval would exclude it.
std::pair<double, double> bootstrap_ci(std::span<const std::vector<TokenId>> hyps,
                                       std::span<const std::vector<TokenId>> refs,
                                       int resamples, std::uint64_t seed, double level);

}  // namespace sst
