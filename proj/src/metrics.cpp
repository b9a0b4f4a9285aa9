#include "sst/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace sst {

double laal(const LatencyRecord& rec, bool computational_aware) {
    if (rec.events.empty()) {
        throw std::invalid_argument("laal: no emission events");
    }
    if (rec.source_duration_ms <= 0.0) {
        throw std::invalid_argument("laal: source duration must be > 0");
    }
    const std::size_t hyp_len = rec.events.size();
    const double denom = static_cast<double>(
        std::max<std::size_t>(hyp_len, static_cast<std::size_t>(std::max(rec.ref_len, 0))));
    const double r = rec.source_duration_ms / denom;

    auto delay = [&](std::size_t i) {
        return computational_aware ? rec.events[i].wall_ms : rec.events[i].ideal_delay_ms;
    };

    std::size_t tau = hyp_len;
    for (std::size_t i = 0; i < hyp_len; ++i) {
        if (delay(i) >= rec.source_duration_ms) {
            tau = i + 1;
            break;
        }
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < tau; ++i) {
        sum += delay(i) - static_cast<double>(i) * r;
    }
    return sum / static_cast<double>(tau);
}

BleuStats& BleuStats::operator+=(const BleuStats& other) {
    for (int n = 0; n < 4; ++n) {
        matches[static_cast<std::size_t>(n)] += other.matches[static_cast<std::size_t>(n)];
        totals[static_cast<std::size_t>(n)] += other.totals[static_cast<std::size_t>(n)];
    }
    hyp_len += other.hyp_len;
    ref_len += other.ref_len;
    return *this;
}

BleuStats sentence_bleu_stats(std::span<const TokenId> hyp, std::span<const TokenId> ref) {
    BleuStats stats;
    stats.hyp_len = static_cast<long>(hyp.size());
    stats.ref_len = static_cast<long>(ref.size());
    for (int n = 1; n <= 4; ++n) {
        if (static_cast<std::size_t>(n) > hyp.size()) break;
        std::map<std::vector<TokenId>, long> ref_counts;
        if (static_cast<std::size_t>(n) <= ref.size()) {
            for (std::size_t i = 0; i + n <= ref.size(); ++i) {
                ref_counts[std::vector<TokenId>(ref.begin() + static_cast<std::ptrdiff_t>(i),
                                                ref.begin() + static_cast<std::ptrdiff_t>(i + n))]++;
            }
        }
        long total = 0;
        long matched = 0;
        std::map<std::vector<TokenId>, long> hyp_counts;
        for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
            hyp_counts[std::vector<TokenId>(hyp.begin() + static_cast<std::ptrdiff_t>(i),
                                            hyp.begin() + static_cast<std::ptrdiff_t>(i + n))]++;
            ++total;
        }
        for (const auto& [gram, count] : hyp_counts) {
            auto it = ref_counts.find(gram);
            if (it != ref_counts.end()) matched += std::min(count, it->second);
        }
        stats.totals[static_cast<std::size_t>(n - 1)] = total;
        stats.matches[static_cast<std::size_t>(n - 1)] = matched;
    }
    return stats;
}

double bleu_from_stats(const BleuStats& stats) {
    if (stats.hyp_len == 0) return 0.0;
    if (stats.matches[0] == 0) return 0.0;  // no unigram overlap: floored
    double log_precision = 0.0;
    for (int n = 0; n < 4; ++n) {
        const long total = stats.totals[static_cast<std::size_t>(n)];
        const long matched = stats.matches[static_cast<std::size_t>(n)];
        double p;
        if (total == 0) {
            // Corpus shorter than n tokens everywhere; treat as a full miss.
            p = kLogFloor;
        } else if (matched == 0) {
            p = 1.0 / (2.0 * static_cast<double>(total));
        } else {
            p = static_cast<double>(matched) / static_cast<double>(total);
        }
        log_precision += std::log(p);
    }
    double bp = 1.0;
    if (stats.hyp_len < stats.ref_len) {
        bp = std::exp(1.0 - static_cast<double>(stats.ref_len) /
                                static_cast<double>(stats.hyp_len));
    }
    return 100.0 * bp * std::exp(log_precision / 4.0);
}

namespace {

std::vector<BleuStats> per_sentence_stats(std::span<const std::vector<TokenId>> hyps,
                                          std::span<const std::vector<TokenId>> refs) {
    if (hyps.size() != refs.size()) {
        throw std::invalid_argument("corpus_bleu: hypothesis/reference count mismatch");
    }
    if (hyps.empty()) {
        throw std::invalid_argument("corpus_bleu: empty corpus");
    }
    std::vector<BleuStats> stats;
    stats.reserve(hyps.size());
    for (std::size_t i = 0; i < hyps.size(); ++i) {
        stats.push_back(sentence_bleu_stats(hyps[i], refs[i]));
    }
    return stats;
}

}  // namespace

double corpus_bleu(std::span<const std::vector<TokenId>> hyps,
                   std::span<const std::vector<TokenId>> refs) {
    BleuStats total;
    for (const auto& s : per_sentence_stats(hyps, refs)) total += s;
    return bleu_from_stats(total);
}

std::pair<double, double> bootstrap_ci(std::span<const std::vector<TokenId>> hyps,
                                       std::span<const std::vector<TokenId>> refs,
                                       int resamples, std::uint64_t seed, double level) {
    if (resamples < 100) {
        throw std::invalid_argument("bootstrap_ci: resamples must be >= 100");
    }
    if (level <= 0.0 || level >= 1.0) {
        throw std::invalid_argument("bootstrap_ci: level must be in (0,1)");
    }
    const std::vector<BleuStats> stats = per_sentence_stats(hyps, refs);

    BleuStats total;
    for (const auto& s : stats) total += s;
    const double point = bleu_from_stats(total);

    std::mt19937_64 rng(seed);
    const std::size_t n = stats.size();
    std::vector<double> scores;
    scores.reserve(static_cast<std::size_t>(resamples));
    for (int r = 0; r < resamples; ++r) {
        BleuStats acc;
        for (std::size_t i = 0; i < n; ++i) {
            acc += stats[rng() % n];
        }
        scores.push_back(bleu_from_stats(acc));
    }
    std::sort(scores.begin(), scores.end());

    auto percentile = [&](double q) {
        const double pos = q * static_cast<double>(scores.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, scores.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return scores[lo] * (1.0 - frac) + scores[hi] * frac;
    };

    const double tail = (1.0 - level) / 2.0;
    double low = percentile(tail);
    double high = percentile(1.0 - tail);
    // Percentile intervals can exclude the point estimate on skewed
    // resamples; widen so the bounds always bracket it.
    low = std::min(low, point);
    high = std::max(high, point);
    return {low, high};
}

}  // namespace sst
