#include "sst/policies.hpp"

#include <algorithm>

namespace sst {

const char* to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::local_agreement: return "la";
        case PolicyKind::hold_n: return "hold_n";
        case PolicyKind::edatt: return "edatt";
        case PolicyKind::alignatt: return "alignatt";
    }
    return "?";
}

PolicyKind policy_kind_from_string(const std::string& name) {
    if (name == "la" || name == "local_agreement") return PolicyKind::local_agreement;
    if (name == "hold_n" || name == "hold-n") return PolicyKind::hold_n;
    if (name == "edatt") return PolicyKind::edatt;
    if (name == "alignatt") return PolicyKind::alignatt;
    throw ConfigError("unknown policy: " + name);
}

namespace policies {
namespace {

// Build a decision that emits tokens [0, stop) and holds the rest, never
// letting EOS into the stable prefix.
PolicyDecision split_at(const Continuation& curr, std::size_t stop, TokenId eos) {
    for (std::size_t i = 0; i < stop; ++i) {
        if (curr.tokens[i] == eos) {
            stop = i;
            break;
        }
    }
    PolicyDecision d;
    d.stable.assign(curr.tokens.begin(), curr.tokens.begin() + static_cast<std::ptrdiff_t>(stop));
    d.unstable.reserve(curr.tokens.size() - stop);
    for (std::size_t i = stop; i < curr.tokens.size(); ++i) {
        d.unstable.emplace_back(curr.tokens[i], curr.dists[i]);
    }
    return d;
}

}  // namespace

PolicyDecision local_agreement(std::span<const TokenId> prev_continuation,
                               const Continuation& curr, TokenId eos) {
    const std::size_t limit = std::min(prev_continuation.size(), curr.tokens.size());
    std::size_t lcp = 0;
    while (lcp < limit && prev_continuation[lcp] == curr.tokens[lcp]) ++lcp;
    return split_at(curr, lcp, eos);
}

PolicyDecision hold_n(const Continuation& curr, int n, TokenId eos) {
    if (n < 0) throw std::invalid_argument("hold_n: n must be >= 0");
    const std::size_t len = curr.tokens.size();
    const std::size_t held = std::min<std::size_t>(static_cast<std::size_t>(n), len);
    return split_at(curr, len - held, eos);
}

PolicyDecision alignatt(const Continuation& curr, int f, TokenId eos) {
    std::size_t stop = curr.tokens.size();
    for (std::size_t i = 0; i < curr.tokens.size(); ++i) {
        const AttentionRow& row = curr.attn[i];
        if (row.frames() > 0 && row.argmax_frame() >= row.frames() - f) {
            stop = i;
            break;
        }
    }
    return split_at(curr, stop, eos);
}

PolicyDecision edatt(const Continuation& curr, double alpha, int lambda, TokenId eos) {
    std::size_t stop = curr.tokens.size();
    for (std::size_t i = 0; i < curr.tokens.size(); ++i) {
        if (curr.attn[i].tail_mass(lambda) > alpha) {
            stop = i;
            break;
        }
    }
    return split_at(curr, stop, eos);
}

PolicyDecision finalize_flush(const Continuation& curr, TokenId eos) {
    PolicyDecision d;
    for (TokenId tok : curr.tokens) {
        if (tok == eos) break;
        d.stable.push_back(tok);
    }
    d.source_exhausted_flush = true;
    return d;
}

PolicyDecision apply(const PolicyConfig& cfg, const Continuation& curr,
                     std::span<const TokenId> prev_continuation, bool source_exhausted,
                     TokenId eos) {
    cfg.validate();
    if (source_exhausted) return finalize_flush(curr, eos);
    switch (cfg.kind) {
        case PolicyKind::local_agreement: return local_agreement(prev_continuation, curr, eos);
        case PolicyKind::hold_n: return hold_n(curr, cfg.n, eos);
        case PolicyKind::edatt: return edatt(curr, cfg.alpha, cfg.lambda, eos);
        case PolicyKind::alignatt: return alignatt(curr, cfg.f, eos);
    }
    throw std::logic_error("unreachable policy kind");
}

}  // namespace policies
}  // namespace sst
