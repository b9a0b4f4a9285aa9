#include "sst/cfm.hpp"

#include <cmath>
#include <limits>

namespace sst::cfm {

FeedbackState extract_feedback(PolicyKind kind,
                               std::span<const std::pair<TokenId, ProbDist>> unstable) {
    if (unstable.empty()) return FeedbackState{};
    if (kind == PolicyKind::local_agreement) {
        return FeedbackState{unstable.front().second};
    }
    std::vector<ProbDist> dists;
    dists.reserve(unstable.size());
    for (const auto& [tok, dist] : unstable) dists.push_back(dist);
    return FeedbackState{mean_dist(dists)};
}

std::vector<TokenId> plausible_set(const ProbDist& p_c, double beta) {
    const double threshold = beta * p_c.max_prob();
    std::vector<TokenId> members;
    for (TokenId y = 0; y < p_c.size(); ++y) {
        if (p_c[y] >= threshold) members.push_back(y);
    }
    return members;
}

std::vector<double> cfm_score(const ProbDist& p_c, const ProbDist& p_f, const CfmConfig& cfg) {
    cfg.validate();
    if (p_c.size() != p_f.size()) {
        throw std::invalid_argument("cfm_score: vocabulary size mismatch");
    }
    const double threshold = cfg.beta * p_c.max_prob();
    std::vector<double> scores(static_cast<std::size_t>(p_c.size()),
                               -std::numeric_limits<double>::infinity());
    for (TokenId y = 0; y < p_c.size(); ++y) {
        if (p_c[y] < threshold) continue;
        const double log_pc = floored_log(p_c[y]);
        const double log_pf = std::log(std::max(p_f[y], cfg.feedback_floor));
        scores[static_cast<std::size_t>(y)] = 2.0 * log_pc - log_pf;
    }
    return scores;
}

StepZeroRescorer make_rescorer(const FeedbackState& feedback, const CfmConfig& cfg) {
    if (!feedback.has()) {
        throw std::logic_error("make_rescorer: feedback is absent");
    }
    StepZeroRescorer rescorer;
    rescorer.persist_in_score = cfg.persist_contrast_in_score;
    rescorer.score = [p_f = *feedback.dist, cfg](const ProbDist& p_c) {
        return cfm_score(p_c, p_f, cfg);
    };
    return rescorer;
}

}  // namespace sst::cfm
