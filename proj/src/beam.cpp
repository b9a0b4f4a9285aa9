#include "sst/beam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sst {
namespace {

struct Live {
    std::vector<TokenId> gen;
    double cum = 0.0;
    std::vector<ProbDist> dists;
    std::vector<AttentionRow> attn;
};

struct Candidate {
    int parent = 0;
    TokenId token = 0;
    double selection = 0.0;  // parent cum + step selection score
    double recorded = 0.0;   // addition to the cumulative score if kept
};

double normalized_score(const Live& l, double alpha) {
    return l.cum / std::pow(static_cast<double>(l.gen.size()), alpha);
}

}  // namespace

Hypothesis beam_decode(const TranslationModel& model, const EncoderHandle& handle,
                       std::span<const TokenId> forced_prefix, const BeamConfig& cfg,
                       const StepZeroRescorer* step0_rescorer) {
    cfg.validate();
    const Vocabulary& vocab = model.vocab();
    if (forced_prefix.empty() || forced_prefix.front() != vocab.bos()) {
        throw std::invalid_argument("beam_decode: forced prefix must begin with BOS");
    }
    const TokenId eos = vocab.eos();
    const int v = vocab.size();

    std::vector<Live> live(1);
    std::vector<Live> finished;
    std::vector<TokenId> prefix_buf;

    for (int step = 0; step < cfg.max_new_tokens && !live.empty(); ++step) {
        std::vector<StepOutput> outs;
        outs.reserve(live.size());
        for (const Live& l : live) {
            prefix_buf.assign(forced_prefix.begin(), forced_prefix.end());
            prefix_buf.insert(prefix_buf.end(), l.gen.begin(), l.gen.end());
            outs.push_back(model.decode_step(handle, prefix_buf));
        }

        const bool rescored = step == 0 && step0_rescorer != nullptr && step0_rescorer->score;
        std::vector<Candidate> cands;
        cands.reserve(live.size() * static_cast<std::size_t>(v));
        for (std::size_t i = 0; i < live.size(); ++i) {
            const ProbDist& dist = outs[i].dist;
            std::vector<double> rescore;
            if (rescored) {
                rescore = step0_rescorer->score(dist);
                if (static_cast<int>(rescore.size()) != v) {
                    throw std::logic_error("step-0 rescorer returned a wrong-sized vector");
                }
            }
            for (TokenId y = 0; y < v; ++y) {
                const double plain = floored_log(dist[y]);
                const double sel = rescored ? rescore[static_cast<std::size_t>(y)] : plain;
                if (std::isinf(sel) && sel < 0.0) continue;  // token excluded at step 0
                const double rec = rescored && step0_rescorer->persist_in_score ? sel : plain;
                cands.push_back(Candidate{static_cast<int>(i), y, live[i].cum + sel, rec});
            }
        }
        if (cands.empty()) break;

        const std::size_t keep = std::min<std::size_t>(cands.size(),
                                                       static_cast<std::size_t>(cfg.beam_size));
        std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep),
                          cands.end(), [](const Candidate& a, const Candidate& b) {
                              if (a.selection != b.selection) return a.selection > b.selection;
                              if (a.token != b.token) return a.token < b.token;
                              return a.parent < b.parent;
                          });
        cands.resize(keep);

        std::vector<Live> next;
        next.reserve(keep);
        for (const Candidate& c : cands) {
            Live nl = live[static_cast<std::size_t>(c.parent)];
            nl.gen.push_back(c.token);
            nl.cum += c.recorded;
            nl.dists.push_back(outs[static_cast<std::size_t>(c.parent)].dist);
            nl.attn.push_back(outs[static_cast<std::size_t>(c.parent)].attn);
            if (c.token == eos) {
                finished.push_back(std::move(nl));
            } else {
                next.push_back(std::move(nl));
            }
        }
        live = std::move(next);
    }

    // Rank finished hypotheses against the length-capped survivors.
    std::vector<Live>& pool = finished;
    for (Live& l : live) pool.push_back(std::move(l));
    if (pool.empty()) {
        throw std::logic_error("beam_decode: no viable hypothesis (everything excluded)");
    }
    std::size_t best = 0;
    double best_score = normalized_score(pool[0], cfg.length_norm_alpha);
    for (std::size_t i = 1; i < pool.size(); ++i) {
        const double s = normalized_score(pool[i], cfg.length_norm_alpha);
        if (s > best_score ||
            (s == best_score &&
             std::lexicographical_compare(pool[i].gen.begin(), pool[i].gen.end(),
                                          pool[best].gen.begin(), pool[best].gen.end()))) {
            best = i;
            best_score = s;
        }
    }

    Live& winner = pool[best];
    Hypothesis hyp;
    hyp.tokens.assign(forced_prefix.begin(), forced_prefix.end());
    hyp.tokens.insert(hyp.tokens.end(), winner.gen.begin(), winner.gen.end());
    hyp.prefix_len = forced_prefix.size();
    hyp.score = best_score;
    hyp.step_dists = std::move(winner.dists);
    hyp.step_attn = std::move(winner.attn);
    hyp.finished = !winner.gen.empty() && winner.gen.back() == eos;
    return hyp;
}

}  // namespace sst
