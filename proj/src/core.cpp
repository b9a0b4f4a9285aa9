#include "sst/core.hpp"

#include <numeric>
#include <unordered_set>

namespace sst {

Vocabulary::Vocabulary(std::vector<std::string> surfaces, TokenId bos, TokenId eos)
    : surfaces_(std::move(surfaces)), bos_(bos), eos_(eos) {
    const auto v = static_cast<TokenId>(surfaces_.size());
    if (v < 2) {
        throw std::invalid_argument("vocabulary needs at least BOS and EOS");
    }
    if (bos_ < 0 || bos_ >= v || eos_ < 0 || eos_ >= v || bos_ == eos_) {
        throw std::invalid_argument("BOS/EOS ids must be distinct and within the vocabulary");
    }
    std::unordered_set<std::string> seen;
    for (const auto& s : surfaces_) {
        if (!seen.insert(s).second) {
            throw std::invalid_argument("duplicate surface form: " + s);
        }
    }
}

const std::string& Vocabulary::surface(TokenId id) const {
    if (id < 0 || id >= size()) {
        throw std::out_of_range("token id out of range");
    }
    return surfaces_[static_cast<std::size_t>(id)];
}

ProbDist::ProbDist(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) {
        throw InvalidDistributionError("empty probability vector");
    }
    double sum = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0)) {  // rejects negatives and NaN
            throw InvalidDistributionError("negative or NaN probability entry");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw InvalidDistributionError("probabilities sum to " + std::to_string(sum) +
                                       ", expected 1");
    }
}

TokenId ProbDist::argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs_.size(); ++i) {
        if (probs_[i] > probs_[best]) best = i;
    }
    return static_cast<TokenId>(best);
}

double ProbDist::max_prob() const {
    return probs_[static_cast<std::size_t>(argmax())];
}

ProbDist normalize(std::span<const double> raw_scores) {
    if (raw_scores.empty()) {
        throw InvalidDistributionError("cannot normalize an empty vector");
    }
    double sum = 0.0;
    for (double s : raw_scores) {
        if (!(s >= 0.0)) {
            throw InvalidDistributionError("negative or NaN entry in raw scores");
        }
        sum += s;
    }
    if (sum <= 0.0) {
        throw InvalidDistributionError("all-zero raw scores");
    }
    std::vector<double> out(raw_scores.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = raw_scores[i] / sum;
    }
    return ProbDist(std::move(out));
}

ProbDist mean_dist(std::span<const ProbDist> dists) {
    if (dists.empty()) {
        throw InvalidDistributionError("mean of zero distributions");
    }
    std::vector<double> acc(static_cast<std::size_t>(dists.front().size()), 0.0);
    for (const auto& d : dists) {
        if (static_cast<std::size_t>(d.size()) != acc.size()) {
            throw InvalidDistributionError("mixed vocabulary sizes in mean_dist");
        }
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += d[static_cast<TokenId>(i)];
    }
    const double inv = 1.0 / static_cast<double>(dists.size());
    for (double& a : acc) a *= inv;
    return ProbDist(std::move(acc));
}

AttentionRow::AttentionRow(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) return;  // empty row: no frames received yet
    double sum = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0)) {
            throw InvalidDistributionError("negative or NaN attention weight");
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw InvalidDistributionError("attention weights sum to " + std::to_string(sum) +
                                       ", expected 1");
    }
}

int AttentionRow::argmax_frame() const {
    if (weights_.empty()) return -1;
    std::size_t best = 0;
    for (std::size_t i = 1; i < weights_.size(); ++i) {
        if (weights_[i] > weights_[best]) best = i;
    }
    return static_cast<int>(best);
}

double AttentionRow::tail_mass(int last_k) const {
    if (last_k <= 0 || weights_.empty()) return 0.0;
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(last_k), weights_.size());
    return std::accumulate(weights_.end() - static_cast<std::ptrdiff_t>(k), weights_.end(), 0.0);
}

void Hypothesis::extend(TokenId token, ProbDist dist, AttentionRow attn) {
    if (finished) {
        throw std::logic_error("cannot extend a finished hypothesis");
    }
    if (step_dists.size() != tokens.size() - prefix_len ||
        step_attn.size() != tokens.size() - prefix_len) {
        throw std::logic_error("hypothesis step bookkeeping out of sync");
    }
    tokens.push_back(token);
    step_dists.push_back(std::move(dist));
    step_attn.push_back(std::move(attn));
}

std::vector<TokenId> PolicyDecision::unstable_ids() const {
    std::vector<TokenId> ids;
    ids.reserve(unstable.size());
    for (const auto& [tok, dist] : unstable) ids.push_back(tok);
    return ids;
}

}  // namespace sst
