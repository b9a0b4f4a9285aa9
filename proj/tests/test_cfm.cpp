#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "sst/cfm.hpp"

using namespace sst;

namespace {

ProbDist random_dist(std::mt19937_64& rng, int v) {
    std::vector<double> raw(static_cast<std::size_t>(v));
    for (double& x : raw) x = 0.001 + static_cast<double>(rng() % 10000);
    return normalize(raw);
}

// Ranking of the finite entries, ties broken by token id.
std::vector<TokenId> finite_ranking(const std::vector<double>& scores) {
    std::vector<TokenId> ids;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (std::isfinite(scores[i])) ids.push_back(static_cast<TokenId>(i));
    }
    std::sort(ids.begin(), ids.end(), [&](TokenId a, TokenId b) {
        const double sa = scores[static_cast<std::size_t>(a)];
        const double sb = scores[static_cast<std::size_t>(b)];
        if (sa != sb) return sa > sb;
        return a < b;
    });
    return ids;
}

}  // namespace

TEST_SUITE_BEGIN("cfm");

TEST_CASE("feedback extraction per policy") {
    std::vector<std::pair<TokenId, ProbDist>> unstable;
    unstable.emplace_back(0, ProbDist({0.6, 0.4}));
    unstable.emplace_back(1, ProbDist({0.2, 0.8}));

    SUBCASE("attention policies average the unstable distributions") {
        for (PolicyKind kind : {PolicyKind::alignatt, PolicyKind::edatt, PolicyKind::hold_n}) {
            auto fb = cfm::extract_feedback(kind, unstable);
            REQUIRE(fb.has());
            CHECK((*fb.dist)[0] == doctest::Approx(0.4));
            CHECK((*fb.dist)[1] == doctest::Approx(0.6));
        }
    }
    SUBCASE("local agreement takes the first unstable distribution") {
        auto fb = cfm::extract_feedback(PolicyKind::local_agreement, unstable);
        REQUIRE(fb.has());
        CHECK((*fb.dist)[0] == doctest::Approx(0.6));
        CHECK((*fb.dist)[1] == doctest::Approx(0.4));
    }
    SUBCASE("empty unstable yields no feedback") {
        auto fb = cfm::extract_feedback(PolicyKind::alignatt, {});
        CHECK(!fb.has());
    }
}

TEST_CASE("plausibility set") {
    ProbDist pc({0.5, 0.3, 0.15, 0.04, 0.01});
    CHECK(cfm::plausible_set(pc, 0.1) == std::vector<TokenId>{0, 1, 2});  // threshold 0.05
    CHECK(cfm::plausible_set(pc, 1.0) == std::vector<TokenId>{0});
    ProbDist uniform({0.25, 0.25, 0.25, 0.25});
    CHECK(cfm::plausible_set(uniform, 0.1).size() == 4);
}

TEST_CASE("plausibility set matches a brute-force threshold scan") {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 1000; ++i) {
        const int v = 3 + static_cast<int>(rng() % 30);
        ProbDist pc = random_dist(rng, v);
        const double beta = 0.01 + 0.99 * static_cast<double>(rng() % 100) / 100.0;
        double max_p = 0.0;
        for (TokenId y = 0; y < v; ++y) max_p = std::max(max_p, pc[y]);
        std::vector<TokenId> brute;
        for (TokenId y = 0; y < v; ++y) {
            if (pc[y] >= beta * max_p) brute.push_back(y);
        }
        REQUIRE(cfm::plausible_set(pc, beta) == brute);
    }
}

TEST_CASE("the worked contrast example: 1e-3 against 1e-9") {
    // A flat distribution keeps the 1e-3 candidate inside V_beta.
    const int v = 1000;
    std::vector<double> pc_raw(v, 0.0);
    pc_raw[0] = 0.009;
    pc_raw[1] = 1e-3;
    for (int y = 2; y < v; ++y) pc_raw[static_cast<std::size_t>(y)] = 0.99 / (v - 2);
    ProbDist pc(std::move(pc_raw));

    std::vector<double> pf_raw(v, (1.0 - 1e-9) / (v - 1));
    pf_raw[1] = 1e-9;
    ProbDist pf(std::move(pf_raw));

    CfmConfig cfg;
    auto scores = cfm::cfm_score(pc, pf, cfg);
    REQUIRE(std::isfinite(scores[1]));
    const double contrast_nat = scores[1] - std::log(1e-3);
    CHECK(std::abs(contrast_nat - std::log(1e6)) < 1e-9);
    CHECK(std::abs(contrast_nat / std::log(10.0) - 6.0) < 1e-9);
}

TEST_CASE("identical feedback gives zero contrast on the plausible set") {
    ProbDist pc({0.7, 0.2, 0.1});
    CfmConfig cfg;
    auto scores = cfm::cfm_score(pc, pc, cfg);
    for (TokenId y = 0; y < 3; ++y) {
        REQUIRE(std::isfinite(scores[static_cast<std::size_t>(y)]));
        CHECK(scores[static_cast<std::size_t>(y)] ==
              doctest::Approx(std::log(pc[y])).epsilon(1e-12));
    }
}

TEST_CASE("the hand-evaluated three-token example flips the argmax") {
    ProbDist pc({0.7, 0.2, 0.1});
    ProbDist pf({0.7, 0.05, 0.25});
    CfmConfig cfg;
    auto scores = cfm::cfm_score(pc, pf, cfg);
    CHECK(scores[0] == doctest::Approx(-0.3567).epsilon(1e-3));
    CHECK(scores[1] == doctest::Approx(-0.2231).epsilon(1e-3));
    CHECK(scores[2] == doctest::Approx(-3.2189).epsilon(1e-3));
    CHECK(pc.argmax() == 0);
    const auto ranking = finite_ranking(scores);
    CHECK(ranking.front() == 1);  // contrast picks b over a
}

TEST_CASE("tokens below the plausibility threshold are suppressed regardless of feedback") {
    // p_c(y) tiny, p_f(y) tinier: without the constraint the contrast would
    // hand y a huge reward.
    ProbDist pc({0.9, 0.099, 1e-3});
    std::vector<double> pf_raw{0.5, 0.5 - 1e-9, 1e-9};
    ProbDist pf(std::move(pf_raw));
    CfmConfig cfg;  // beta = 0.1 -> threshold 0.09
    auto scores = cfm::cfm_score(pc, pf, cfg);
    CHECK(std::isinf(scores[2]));
    CHECK(scores[2] < 0);
    CHECK(std::isfinite(scores[0]));
    CHECK(std::isfinite(scores[1]));
}

TEST_CASE("rescoring invariances on random distribution pairs") {
    std::mt19937_64 rng(7);
    CfmConfig cfg;
    for (int i = 0; i < 2000; ++i) {
        const int v = 4 + static_cast<int>(rng() % 40);
        ProbDist pc = random_dist(rng, v);
        ProbDist pf = random_dist(rng, v);

        auto scores = cfm::cfm_score(pc, pf, cfg);

        // The plain argmax is always plausible, so scores are never all -inf.
        REQUIRE(std::isfinite(scores[static_cast<std::size_t>(pc.argmax())]));

        // Log-base invariance: scaling by 1/ln(10) preserves the ranking.
        std::vector<double> base10 = scores;
        for (double& s : base10) {
            if (std::isfinite(s)) s /= std::log(10.0);
        }
        REQUIRE(finite_ranking(scores) == finite_ranking(base10));

        // Uniform feedback: ranking on V_beta equals the plain ranking.
        ProbDist uniform(std::vector<double>(static_cast<std::size_t>(v), 1.0 / v));
        auto neutral = cfm::cfm_score(pc, uniform, cfg);
        std::vector<double> plain(static_cast<std::size_t>(v),
                                  -std::numeric_limits<double>::infinity());
        for (TokenId y : cfm::plausible_set(pc, cfg.beta)) {
            plain[static_cast<std::size_t>(y)] = std::log(pc[y]);
        }
        REQUIRE(finite_ranking(neutral) == finite_ranking(plain));
    }
}

TEST_CASE("config validation") {
    CfmConfig cfg;
    cfg.beta = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.beta = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.beta = 0.1;
    cfg.feedback_floor = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_SUITE_END();
