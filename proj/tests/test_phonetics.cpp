#include "test_support.hpp"
#include "vedicthg/error.hpp"
#include "vedicthg/phonetics.hpp"

#include <doctest.h>

#include <random>

using namespace vthg;

namespace {

std::vector<std::string> labels(const Pronunciation& p) {
    std::vector<std::string> out;
    for (const auto& l : p) out.push_back(l.str());
    return out;
}

using Strings = std::vector<std::string>;

ValidationError::Reason reason_of(const std::string& json) {
    try {
        ingest_alignment(json);
    } catch (const ValidationError& e) {
        return e.reason();
    }
    FAIL("expected a ValidationError for " << json);
    return ValidationError::Reason::malformed;
}

std::size_t index_of(const std::string& json) {
    try {
        ingest_alignment(json);
    } catch (const ValidationError& e) {
        return e.index();
    }
    return 999;
}

}  // namespace

TEST_CASE("phoneme labels normalize case and stress") {
    CHECK(PhonemeLabel::parse("AH0").str() == "AH");
    CHECK(PhonemeLabel::parse("ow1").str() == "OW");
    CHECK(PhonemeLabel::parse("NG").str() == "NG");
    CHECK_THROWS_AS(PhonemeLabel::parse(""), ValidationError);
    CHECK_THROWS_AS(PhonemeLabel::parse("ABCD"), ValidationError);
    CHECK_THROWS_AS(PhonemeLabel::parse("A-B"), ValidationError);
    CHECK(is_vowel(PhonemeLabel::parse("AA1")));
    CHECK_FALSE(is_vowel(PhonemeLabel::parse("B")));
    CHECK(is_silence(PhonemeLabel::parse("sp")));
}

TEST_CASE("lexicon parsing") {
    const auto lex = parse_lexicon(";;; comment\nHELLO  HH AH0 L OW1\nREAD  R IY1 D\nREAD(2)  R EH1 D\n");
    CHECK(labels(lookup_pronunciation(lex, "HELLO")) == Strings{"HH", "AH", "L", "OW"});
    CHECK(labels(lookup_pronunciation(lex, "hello")) == Strings{"HH", "AH", "L", "OW"});
    CHECK(lex.size() == 2);
    const auto reads = lex.pronunciations("READ");
    REQUIRE(reads.size() == 2);
    CHECK(labels(reads[1]) == Strings{"R", "EH", "D"});

    SUBCASE("comment only") { CHECK(parse_lexicon(";;; nothing here\n").size() == 0); }

    SUBCASE("line without phonemes reports its line number") {
        try {
            parse_lexicon("HELLO  HH AH0 L OW1\nBROKEN\n");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
        }
    }

    SUBCASE("unknown word is OOV") {
        try {
            lookup_pronunciation(lex, "ZZXQ");
            FAIL("expected OovError");
        } catch (const OovError& e) {
            CHECK(e.word() == "ZZXQ");
        }
    }
}

TEST_CASE("real CMUdict excerpt") {
    const auto text = test::slurp(test::test_data_dir() / "cmudict_excerpt.dict");
    REQUIRE_FALSE(text.empty());
    const auto lex = parse_lexicon(text);
    // cmudict 1.1.3: "read R EH1 D" then "read(2) R IY1 D".
    const auto reads = lex.pronunciations("read");
    REQUIRE(reads.size() == 2);
    CHECK(labels(reads[0]) == Strings{"R", "EH", "D"});
    CHECK(labels(reads[1]) == Strings{"R", "IY", "D"});
    CHECK(labels(lookup_pronunciation(lex, "hello")) == Strings{"HH", "AH", "L", "OW"});
    // Trailing "# place, ..." comments in the real file are not phonemes.
    CHECK(labels(lookup_pronunciation(lex, "aalborg")) == Strings{"AO", "L", "B", "AO", "R", "G"});
    CHECK(lex.pronunciations("a").size() == 2);
}

TEST_CASE("lexicon serialize/parse round trip") {
    const auto lex = parse_lexicon(test::slurp(test::test_data_dir() / "cmudict_excerpt.dict"));
    CHECK(parse_lexicon(serialize_lexicon(lex)) == lex);

    // Random entries, including alternates.
    std::mt19937_64 rng(11);
    const auto& phones = supported_phonemes();
    std::uniform_int_distribution<std::size_t> pick(0, phones.size() - 1);
    std::uniform_int_distribution<int> count(1, 7);
    Lexicon random;
    for (int w = 0; w < 200; ++w) {
        const std::string word = "W" + std::to_string(w % 150);
        Pronunciation p;
        for (int i = count(rng); i > 0; --i) p.push_back(PhonemeLabel::parse(phones[pick(rng)]));
        random.add(word, p);
    }
    CHECK(parse_lexicon(serialize_lexicon(random)) == random);
}

TEST_CASE("alignment ingestion") {
    const auto s = ingest_alignment(R"([{"phoneme":"P","start":0.00,"end":0.08},{"phoneme":"AA","start":0.08,"end":0.20}])");
    REQUIRE(s.size() == 2);
    CHECK(s.total_duration_s() == doctest::Approx(0.20));
    CHECK(s.segments()[1].phoneme.str() == "AA");

    const auto sil = ingest_alignment(R"([{"phoneme":"SIL","start":0,"end":0.1},{"phoneme":"sp","start":0.1,"end":0.2}])");
    CHECK(sil.segments()[0].phoneme.str() == "SIL");
    CHECK(sil.segments()[1].phoneme.str() == "SP");

    CHECK(ingest_alignment(serialize_alignment(s)).segments().size() == 2);
    CHECK(serialize_alignment(ingest_alignment(serialize_alignment(s))) == serialize_alignment(s));
}

TEST_CASE("malformed timing fixtures are rejected with their error class") {
    using R = ValidationError::Reason;
    CHECK(reason_of(R"([{"phoneme":"P","start":0.10,"end":0.05}])") == R::empty_interval);
    CHECK(reason_of(R"([{"phoneme":"P","start":0.10,"end":0.10}])") == R::empty_interval);
    CHECK(reason_of(R"([{"phoneme":"AA","start":0.0,"end":0.1},{"phoneme":"B","start":0.05,"end":0.2}])") == R::overlap);
    CHECK(index_of(R"([{"phoneme":"AA","start":0.0,"end":0.1},{"phoneme":"B","start":0.05,"end":0.2}])") == 1);
    CHECK(reason_of(R"([{"phoneme":"AA","start":-0.1,"end":0.1}])") == R::negative_time);
    CHECK(reason_of(R"([{"phoneme":"AA","start":0.5,"end":0.6},{"phoneme":"B","start":0.1,"end":0.2}])") == R::unsorted);
    CHECK(reason_of(R"([{"phoneme":"AA","start":0.0}])") == R::malformed);
    CHECK(reason_of(R"([{"phoneme":"A1B2C3","start":0.0,"end":0.1}])") == R::malformed);
    CHECK(reason_of(R"([{"phoneme":"AA","start":"x","end":0.1}])") == R::malformed);
    CHECK_THROWS_AS(ingest_alignment("[{"), ParseError);

    std::vector<PhonemeSegment> inf{{PhonemeLabel::parse("AA"), 0.0, std::numeric_limits<double>::infinity()}};
    try {
        PhonemeStream::create(inf);
        FAIL("expected non_finite");
    } catch (const ValidationError& e) {
        CHECK(e.reason() == R::non_finite);
    }
    std::vector<PhonemeSegment> long_seg{{PhonemeLabel::parse("AA"), 0.0, 2.0}};
    try {
        PhonemeStream::create(long_seg, 1.0);
        FAIL("expected out_of_range");
    } catch (const ValidationError& e) {
        CHECK(e.reason() == R::out_of_range);
    }
}

TEST_CASE("stream shift") {
    const auto s = ingest_alignment(R"([{"phoneme":"P","start":0.0,"end":0.1}])");
    const auto t = s.shifted(0.5);
    CHECK(t.segments()[0].start_s == doctest::Approx(0.5));
    CHECK(t.total_duration_s() == doctest::Approx(0.6));
    CHECK_THROWS_AS(s.shifted(-1.0), ValidationError);
}

TEST_CASE("proportional alignment") {
    Lexicon lex;
    lex.add("GO", {PhonemeLabel::parse("G"), PhonemeLabel::parse("OW1")});
    lex.add("A", {PhonemeLabel::parse("AH0")});
    lex.add("CAT", {PhonemeLabel::parse("K"), PhonemeLabel::parse("AE1"), PhonemeLabel::parse("T")});

    SUBCASE("weighted split by hand") {
        const TimedWord go{"go", 0.0, 0.25};
        const auto s = proportional_align(std::span(&go, 1), lex);
        REQUIRE(s.size() == 2);
        // weights 1.0 and 1.5: the first phoneme takes 1/2.5 of 0.25 s.
        CHECK(s.segments()[0].end_s == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(s.segments()[1].start_s == s.segments()[0].end_s);
        CHECK(s.segments()[1].end_s == 0.25);
    }
    SUBCASE("single phoneme") {
        const TimedWord a{"A", 0.0, 0.2};
        const auto s = proportional_align(std::span(&a, 1), lex);
        REQUIRE(s.size() == 1);
        CHECK(s.segments()[0].start_s == 0.0);
        CHECK(s.segments()[0].end_s == 0.2);
    }
    SUBCASE("empty word list") {
        const auto s = proportional_align(std::span<const TimedWord>{}, lex);
        CHECK(s.empty());
        CHECK(s.total_duration_s() == 0.0);
    }
    SUBCASE("errors") {
        const TimedWord oov{"zzxq", 0.0, 0.2};
        CHECK_THROWS_AS(proportional_align(std::span(&oov, 1), lex), OovError);
        const TimedWord zero{"go", 0.3, 0.3};
        CHECK_THROWS_AS(proportional_align(std::span(&zero, 1), lex), ValidationError);
    }
    SUBCASE("boundaries tile each word exactly") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> len(0.05, 0.7);
        std::uniform_real_distribution<double> gap(0.0, 0.2);
        std::vector<TimedWord> words;
        double t = 0.013;
        const char* names[] = {"go", "a", "cat"};
        for (int i = 0; i < 300; ++i) {
            const double e = t + len(rng);
            words.push_back({names[i % 3], t, e});
            t = e + (i % 4 == 0 ? gap(rng) : 0.0);
        }
        const auto s = proportional_align(words, lex);
        std::size_t k = 0;
        for (const auto& w : words) {
            const std::size_t n = lookup_pronunciation(lex, w.word).size();
            CHECK(s.segments()[k].start_s == w.start_s);
            for (std::size_t i = 0; i + 1 < n; ++i) {
                CHECK(s.segments()[k + i].end_s == s.segments()[k + i + 1].start_s);
                CHECK(s.segments()[k + i].start_s < s.segments()[k + i].end_s);
            }
            CHECK(s.segments()[k + n - 1].end_s == w.end_s);
            k += n;
        }
        CHECK(k == s.size());
    }
}

TEST_CASE("word timing file") {
    const auto words = parse_word_timings(test::slurp(test::data_dir() / "sample" / "words.json"));
    CHECK(words.size() >= 20);
    const auto lex = parse_lexicon(test::slurp(test::data_dir() / "lexicon" / "cmudict_excerpt.dict"));
    const auto s = proportional_align(words, lex);
    CHECK(s.total_duration_s() == words.back().end_s);
}
