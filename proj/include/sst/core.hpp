#pragma once

// Core value types for the simultaneous translation engine: vocabulary,
// probability distributions, attention rows, hypotheses, policy decisions
// and emission events. Everything here is an immutable value after
// construction and validates its invariants eagerly, so downstream code can
// assume well-formed inputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sst {

using TokenId = std::int32_t;

// Probability vector failed non-negativity or normalization.
struct InvalidDistributionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Bad run/sweep configuration (CLI exit code 1).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unreadable or malformed input file (CLI exit code 2).
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Probabilities are stored in linear space; logs are taken at scoring sites
// with this floor so that zero-probability entries stay finite.
inline constexpr double kLogFloor = 1e-12;

inline double floored_log(double p) {
    return std::log(std::max(p, kLogFloor));
}

// Dense token-id vocabulary. Ids are the indices 0..V-1.
class Vocabulary {
public:
    Vocabulary(std::vector<std::string> surfaces, TokenId bos, TokenId eos);

    int size() const { return static_cast<int>(surfaces_.size()); }
    TokenId bos() const { return bos_; }
    TokenId eos() const { return eos_; }
    const std::string& surface(TokenId id) const;

private:
    std::vector<std::string> surfaces_;
    TokenId bos_;
    TokenId eos_;
};

// Normalized distribution over the target vocabulary (sum == 1 within 1e-9).
class ProbDist {
public:
    explicit ProbDist(std::vector<double> probs);

    int size() const { return static_cast<int>(probs_.size()); }
    double operator[](TokenId id) const { return probs_[static_cast<std::size_t>(id)]; }
    std::span<const double> probs() const { return probs_; }

    // Lowest token id wins ties.
    TokenId argmax() const;
    double max_prob() const;

    bool operator==(const ProbDist& other) const { return probs_ == other.probs_; }

private:
    std::vector<double> probs_;
};

// Rescale a non-negative score vector to a distribution.
ProbDist normalize(std::span<const double> raw_scores);

// Arithmetic mean of normalized distributions (itself normalized).
ProbDist mean_dist(std::span<const ProbDist> dists);

// Cross-attention weights over the encoder frames received so far.
// An empty row is permitted (no frames yet); non-empty rows must be
// non-negative and sum to 1 within 1e-6.
class AttentionRow {
public:
    AttentionRow() = default;
    explicit AttentionRow(std::vector<double> weights);

    int frames() const { return static_cast<int>(weights_.size()); }
    double operator[](int frame) const { return weights_[static_cast<std::size_t>(frame)]; }
    std::span<const double> weights() const { return weights_; }

    // Lowest frame index wins ties; -1 for an empty row.
    int argmax_frame() const;

    // Sum of the last `last_k` weights (whole row if last_k >= frames()).
    double tail_mass(int last_k) const;

    bool operator==(const AttentionRow& other) const { return weights_ == other.weights_; }

private:
    std::vector<double> weights_;
};

// A scored target sequence: the forced prefix plus generated continuation,
// with one distribution and one attention row per generated step.
struct Hypothesis {
    std::vector<TokenId> tokens;            // forced prefix ++ generated tokens
    std::size_t prefix_len = 0;             // length of the forced prefix
    double score = 0.0;                     // final length-normalized score
    std::vector<ProbDist> step_dists;       // per generated step
    std::vector<AttentionRow> step_attn;    // per generated step
    bool finished = false;                  // EOS was generated

    std::span<const TokenId> generated() const {
        return std::span<const TokenId>(tokens).subspan(prefix_len);
    }

    // Appends one generated token together with its step distribution and
    // attention row. Throws if the hypothesis already generated EOS.
    void extend(TokenId token, ProbDist dist, AttentionRow attn);
};

// Stable/unstable split of a chunk's continuation. Outside of a final-source
// flush, stable ++ unstable token ids reconstruct the continuation exactly;
// a flush strips the trailing EOS and leaves unstable empty.
struct PolicyDecision {
    std::vector<TokenId> stable;
    std::vector<std::pair<TokenId, ProbDist>> unstable;
    bool source_exhausted_flush = false;

    std::vector<TokenId> unstable_ids() const;
};

// Distribution carried from one chunk to the next (absent before the first
// policy decision and whenever the unstable set was empty).
struct FeedbackState {
    std::optional<ProbDist> dist;

    bool has() const { return dist.has_value(); }
};

// One committed token with its source-side and wall-clock delays.
struct EmissionEvent {
    TokenId token = 0;
    double ideal_delay_ms = 0.0;  // source consumed when committed
    double wall_ms = 0.0;         // elapsed (simulated) wall clock when committed
};

}  // namespace sst
