#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "sst/synthetic.hpp"

using namespace sst;

namespace {

TaskSpec small_spec() {
    TaskSpec spec;
    spec.seed = 11;
    spec.vocab_size = 32;
    spec.utterance_count = 30;
    spec.source_len_min = 4;
    spec.source_len_max = 12;
    return spec;
}

std::string file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE_BEGIN("model_synthetic");

TEST_CASE("encode echoes the prefix length") {
    SyntheticTask task(small_spec());
    CHECK(task.encode(SourcePrefix({}, 40)).frames_seen == 0);
    std::vector<int> frames(25, 0);
    CHECK(task.encode(SourcePrefix(frames, 40)).frames_seen == 25);
}

TEST_CASE("decode_step contract checks") {
    SyntheticTask task(small_spec());
    auto utts = task.generate();
    auto handle = task.encode(utts[0].frames);
    CHECK_THROWS_AS(task.decode_step(handle, std::span<const TokenId>{}),
                    std::invalid_argument);
    const TokenId not_bos[] = {5};
    CHECK_THROWS_AS(task.decode_step(handle, not_bos), std::invalid_argument);
}

TEST_CASE("decode_step is pure: randomized replays are identical") {
    SyntheticTask task(small_spec());
    auto utts = task.generate();
    std::mt19937_64 rng(3);
    for (int i = 0; i < 1000; ++i) {
        const auto& utt = utts[rng() % utts.size()];
        const std::size_t cut = rng() % (utt.frames.frames.size() + 1);
        SourcePrefix prefix(
            std::vector<int>(utt.frames.frames.begin(),
                             utt.frames.frames.begin() + static_cast<std::ptrdiff_t>(cut)),
            utt.frames.frame_ms);
        auto h1 = task.encode(prefix);
        auto h2 = task.encode(prefix);
        std::vector<TokenId> target{task.vocab().bos()};
        const std::size_t len = rng() % 6;
        for (std::size_t j = 0; j < len; ++j) {
            target.push_back(static_cast<TokenId>(2 + rng() % (task.vocab().size() - 2)));
        }
        auto a = task.decode_step(h1, target);
        auto b = task.decode_step(h2, target);
        REQUIRE(a.dist == b.dist);
        REQUIRE(a.attn == b.attn);
        REQUIRE(a.attn.frames() == static_cast<int>(cut));
    }
}

TEST_CASE("same seed generates identical corpora") {
    SyntheticTask task(small_spec());
    auto a = task.generate();
    auto b = task.generate();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].frames.frames == b[i].frames.frames);
        CHECK(a[i].reference == b[i].reference);
    }
}

TEST_CASE("reference length equals source token count") {
    SyntheticTask task(small_spec());
    for (const auto& utt : task.generate()) {
        CHECK(utt.reference.size() * static_cast<std::size_t>(task.spec().frames_per_token) ==
              utt.frames.frames.size());
    }
}

TEST_CASE("zero ambiguity decodes greedily left to right") {
    TaskSpec spec = small_spec();
    spec.ambiguity_rate = 0.0;
    SyntheticTask task(spec);
    for (const auto& utt : task.generate()) {
        CHECK(utt.ambiguities.empty());
        auto handle = task.encode(utt.frames);
        std::vector<TokenId> target{task.vocab().bos()};
        for (TokenId want : utt.reference) {
            auto out = task.decode_step(handle, target);
            REQUIRE(out.dist.argmax() == want);
            target.push_back(want);
        }
    }
}

TEST_CASE("full ambiguity and length >= 4 puts an ambiguity in every utterance") {
    TaskSpec spec = small_spec();
    spec.ambiguity_rate = 1.0;
    spec.source_len_min = 4;
    SyntheticTask task(spec);
    auto utts = task.generate();
    REQUIRE(!utts.empty());
    for (const auto& utt : utts) {
        CHECK(!utt.ambiguities.empty());
    }
}

TEST_CASE("ambiguous distributions follow the generator closed form") {
    TaskSpec spec = small_spec();
    SyntheticTask task(spec);
    REQUIRE(task.ambiguous_symbols().size() >= 2);
    const auto& info = task.ambiguous_symbols()[0];
    // Pick fillers that cannot accidentally disambiguate.
    const int filler = info.disamb_symbol == 0 ? 1 : 0;

    // Source: [filler, ambiguous, filler, disambiguator, filler]
    std::vector<int> symbols{filler, info.symbol, filler, info.disamb_symbol, filler};
    std::vector<int> frames;
    for (int s : symbols) {
        for (int g = 0; g < spec.frames_per_token; ++g) frames.push_back(s);
    }
    const double structured = 1.0 - SyntheticTask::kSmoothMass;
    const double m = info.minority_mass;

    auto dist_at = [&](int tokens_received, int pos) {
        SourcePrefix prefix(
            std::vector<int>(frames.begin(),
                             frames.begin() + tokens_received * spec.frames_per_token),
            spec.frame_ms);
        auto handle = task.encode(prefix);
        std::vector<TokenId> target{task.vocab().bos()};
        for (int i = 0; i < pos; ++i) target.push_back(2);  // content irrelevant
        return task.decode_step(handle, target).dist;
    };

    SUBCASE("before the disambiguator: (1-m) on the default sense") {
        auto d = dist_at(3, 1);
        CHECK(d[info.default_target] == doctest::Approx(structured * (1.0 - m)));
        CHECK(d[info.alt_target] == doctest::Approx(structured * m));
    }
    SUBCASE("at arrival: default decays to sticky * (1-m)") {
        auto d = dist_at(4, 1);
        const double wrong = spec.sticky_prior * (1.0 - m);
        CHECK(d[info.default_target] == doctest::Approx(structured * wrong));
        CHECK(d[info.alt_target] == doctest::Approx(structured * (1.0 - wrong)));
    }
    SUBCASE("extra context decays the sticky mass further") {
        auto d = dist_at(5, 1);
        const double wrong = spec.sticky_prior * spec.sticky_prior * (1.0 - m);
        CHECK(d[info.default_target] == doctest::Approx(structured * wrong));
    }
    SUBCASE("plain token under full context is confidently correct") {
        auto d = dist_at(5, 0);
        CHECK(d[task.plain_target(filler)] >= 0.9);
    }
    SUBCASE("frontier positions lean on EOS") {
        auto d = dist_at(3, 3);
        CHECK(d.argmax() == task.vocab().eos());
    }
}

TEST_CASE("attention rows are the discretized Gaussian of the spec") {
    TaskSpec spec = small_spec();
    SyntheticTask task(spec);
    auto utts = task.generate();
    const auto& utt = utts[0];
    auto handle = task.encode(utt.frames);
    const int frames_seen = handle.frames_seen;
    const double g = spec.frames_per_token;
    const double sigma = spec.attn_spread * g;

    std::vector<TokenId> target{task.vocab().bos()};
    int prev_argmax = -1;
    for (std::size_t pos = 0; pos < utt.reference.size(); ++pos) {
        auto out = task.decode_step(handle, target);
        REQUIRE(out.attn.frames() == frames_seen);
        // Independent evaluation of the Gaussian.
        const double mu = static_cast<double>(pos) * g + 0.5 * g;
        std::vector<double> expect(static_cast<std::size_t>(frames_seen));
        double sum = 0.0;
        for (int f = 0; f < frames_seen; ++f) {
            expect[static_cast<std::size_t>(f)] =
                std::exp(-0.5 * (f - mu) / sigma * ((f - mu) / sigma));
            sum += expect[static_cast<std::size_t>(f)];
        }
        for (int f = 0; f < frames_seen; ++f) {
            CHECK(out.attn[f] == doctest::Approx(expect[static_cast<std::size_t>(f)] / sum));
        }
        CHECK(out.attn.argmax_frame() >= prev_argmax);  // monotone alignment
        prev_argmax = out.attn.argmax_frame();
        target.push_back(utt.reference[pos]);
    }
}

TEST_CASE("constructed rescoring win: sticky-wrong argmax flips on the probability ratios") {
    TaskSpec spec;  // defaults: vocab 64 gives a stratified ambiguity table
    SyntheticTask task(spec);
    bool found_sticky = false;
    for (const auto& info : task.ambiguous_symbols()) {
        const double wrong_arrival = task.wrong_share(info.minority_mass, 0);
        if (wrong_arrival <= 0.5) continue;
        found_sticky = true;
        // Closed-form chunk distributions at the ambiguous position: P_f is
        // the pre-disambiguation distribution, P_c the arrival one.
        const double structured = 1.0 - SyntheticTask::kSmoothMass;
        const double pf_wrong = structured * (1.0 - info.minority_mass);
        const double pf_correct = structured * info.minority_mass;
        const double pc_wrong = structured * wrong_arrival;
        const double pc_correct = structured * (1.0 - wrong_arrival);
        CHECK(pc_wrong > pc_correct);  // plain argmax stays wrong
        const double score_correct = 2.0 * std::log(pc_correct) - std::log(pf_correct);
        const double score_wrong = 2.0 * std::log(pc_wrong) - std::log(pf_wrong);
        CHECK(score_correct > score_wrong);  // the contrast flips it
    }
    CHECK(found_sticky);
}

TEST_CASE("generation records which ambiguities stay argmax-wrong at arrival") {
    TaskSpec spec;
    spec.utterance_count = 200;
    spec.seed = 5;
    SyntheticTask task(spec);
    auto utts = task.generate();
    auto stats = corpus_stats(utts);
    REQUIRE(stats.alt_sense_positions > 0);
    // Defaults target roughly half; allow a generous band.
    CHECK(stats.argmax_wrong_fraction() > 0.25);
    CHECK(stats.argmax_wrong_fraction() < 0.6);
}

TEST_CASE("corpus JSONL round trip is bit exact for a fixed seed") {
    TaskSpec spec = small_spec();
    SyntheticTask task(spec);
    auto utts = task.generate();
    const auto dir = std::filesystem::temp_directory_path();
    const auto p1 = dir / "sst_corpus_a.jsonl";
    const auto p2 = dir / "sst_corpus_b.jsonl";
    write_corpus_jsonl(p1, spec, utts);
    write_corpus_jsonl(p2, spec, task.generate());
    CHECK(file_bytes(p1) == file_bytes(p2));

    auto loaded = read_corpus_jsonl(p1);
    CHECK(loaded.spec.seed == spec.seed);
    CHECK(loaded.spec.vocab_size == spec.vocab_size);
    REQUIRE(loaded.utterances.size() == utts.size());
    for (std::size_t i = 0; i < utts.size(); ++i) {
        CHECK(loaded.utterances[i].frames.frames == utts[i].frames.frames);
        CHECK(loaded.utterances[i].reference == utts[i].reference);
    }
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("corpus reader reports the offending line") {
    const auto p = std::filesystem::temp_directory_path() / "sst_corpus_bad.jsonl";
    {
        std::ofstream out(p);
        out << "{\"type\":\"header\",\"spec\":{}}\n";  // incomplete spec
    }
    CHECK_THROWS_AS(read_corpus_jsonl(p), InputError);
    try {
        read_corpus_jsonl(p);
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
    std::filesystem::remove(p);
}

TEST_SUITE_END();
