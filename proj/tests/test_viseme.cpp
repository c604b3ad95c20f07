#include "test_support.hpp"
#include "vedicthg/error.hpp"
#include "vedicthg/viseme.hpp"

#include <doctest.h>

#include <set>

using namespace vthg;

namespace {

std::string name_of(const VisemeMap& m, const char* ph) {
    return m.inventory().name(m.lookup(PhonemeLabel::parse(ph)));
}

PhonemeStream stream_of(std::vector<std::tuple<const char*, double, double>> segs,
                        std::optional<double> total = std::nullopt) {
    std::vector<PhonemeSegment> out;
    for (auto [p, s, e] : segs) out.push_back({PhonemeLabel::parse(p), s, e});
    return PhonemeStream::create(std::move(out), total);
}

std::string full_map_text() { return VisemeMap::builtin_jeffers().serialize(); }

}  // namespace

TEST_CASE("builtin viseme map") {
    const auto m = VisemeMap::builtin_jeffers();
    CHECK(name_of(m, "P") == "BILABIAL");
    CHECK(name_of(m, "B") == "BILABIAL");
    CHECK(name_of(m, "M") == "BILABIAL");
    CHECK(name_of(m, "SIL") == "NEUTRAL");
    CHECK(name_of(m, "AA") == "OPEN_VOWEL");
    CHECK(name_of(m, "S") == "FRICATIVE_S");
    CHECK(m.inventory().size() == 14);
    CHECK(m.inventory().size() >= 12);
    CHECK(m.inventory().size() <= 20);
    CHECK(m.inventory().name(m.default_viseme()) == "NEUTRAL");

    // Totality over the 39 ARPAbet phonemes plus SIL/SP.
    CHECK(supported_phonemes().size() == 41);
    for (const auto& p : supported_phonemes()) {
        CHECK(m.find(PhonemeLabel::parse(p)).has_value());
    }
    CHECK_FALSE(m.find(PhonemeLabel::parse("XX")).has_value());
    CHECK(name_of(m, "XX") == "NEUTRAL");
}

TEST_CASE("viseme map files") {
    SUBCASE("round trip") {
        const auto m = VisemeMap::parse(full_map_text());
        CHECK(m.inventory() == VisemeInventory::jeffers());
        CHECK(m.serialize() == full_map_text());
        CHECK(VisemeMap::load("jeffers").serialize() == full_map_text());
        CHECK(VisemeMap::load("builtin:jeffers").serialize() == full_map_text());
    }
    SUBCASE("duplicate phoneme") {
        CHECK_THROWS_AS(VisemeMap::parse("P BILABIAL\nP LABIODENTAL\n"), ParseError);
    }
    SUBCASE("gaps are listed") {
        try {
            VisemeMap::parse("# partial\nP BILABIAL\n");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("AA") != std::string::npos);
            CHECK(msg.find("ZH") != std::string::npos);
        }
    }
    SUBCASE("custom inventory keeps NEUTRAL first") {
        std::string text;
        for (const auto& p : supported_phonemes()) {
            text += p + (p == "SIL" || p == "SP" ? " NEUTRAL\n" : (is_vowel(PhonemeLabel::parse(p)) ? " OPEN\n" : " CLOSED\n"));
        }
        const auto m = VisemeMap::parse(text);
        CHECK(m.inventory().names() == std::vector<std::string>{"NEUTRAL", "CLOSED", "OPEN"});
        CHECK(m.default_viseme().value == 0);
    }
}

TEST_CASE("param bank") {
    const auto bank = ParamBank::builtin_default();
    const auto& inv = bank.inventory();
    CHECK(bank.at(inv.id("NEUTRAL")) == VisemeParams{});
    CHECK(bank.at(inv.id("BILABIAL"))[jaw_open] == 0.0);
    CHECK(bank.at(inv.id("BILABIAL"))[lip_width] == 0.45);
    CHECK(bank.at(inv.id("OPEN_VOWEL"))[jaw_open] == 0.9);

    // Round trip through the bundled data file.
    const auto file = ParamBank::parse(test::slurp(test::data_dir() / "rig" / "params_default.json"), inv);
    for (std::size_t i = 0; i < inv.size(); ++i) {
        const VisemeId id{static_cast<std::uint16_t>(i)};
        CHECK(file.at(id) == bank.at(id));
    }
    CHECK(ParamBank::parse(bank.serialize(), inv).serialize() == bank.serialize());

    CHECK_THROWS(ParamBank::parse(R"({"dimension": 4, "visemes": {}})", inv));
    CHECK_THROWS(ParamBank::parse(R"({"dimension": 8, "visemes": {"NEUTRAL": [0,0,0,0,0,0,0,0]}})", inv));
    CHECK_THROWS(bank.at(VisemeId{99}));
}

TEST_CASE("phoneme stream to viseme schedule") {
    const auto map = VisemeMap::builtin_jeffers();
    const auto bank = ParamBank::builtin_default();
    const auto& inv = map.inventory();

    SUBCASE("direct lookup") {
        const auto s = map_phonemes_to_visemes(stream_of({{"P", 0.0, 0.1}, {"AA", 0.1, 0.3}}), map, bank, false);
        REQUIRE(s.events().size() == 2);
        CHECK(s.events()[0] == VisemeEvent{inv.id("BILABIAL"), 0.0, 0.1});
        CHECK(s.events()[1] == VisemeEvent{inv.id("OPEN_VOWEL"), 0.1, 0.3});
    }
    SUBCASE("same-class merge") {
        const auto s = map_phonemes_to_visemes(stream_of({{"P", 0.0, 0.1}, {"B", 0.1, 0.2}}), map, bank, true);
        REQUIRE(s.events().size() == 1);
        CHECK(s.events()[0] == VisemeEvent{inv.id("BILABIAL"), 0.0, 0.2});
        CHECK(map_phonemes_to_visemes(stream_of({{"P", 0.0, 0.1}, {"B", 0.1, 0.2}}), map, bank, false)
                  .events()
                  .size() == 2);
    }
    SUBCASE("gaps become NEUTRAL and tile the duration") {
        const auto s = map_phonemes_to_visemes(stream_of({{"AA", 0.0, 0.1}, {"S", 0.2, 0.3}}, 0.4), map, bank, false);
        REQUIRE(s.events().size() == 4);
        CHECK(s.events()[0] == VisemeEvent{inv.id("OPEN_VOWEL"), 0.0, 0.1});
        CHECK(s.events()[1] == VisemeEvent{inv.id("NEUTRAL"), 0.1, 0.2});
        CHECK(s.events()[2] == VisemeEvent{inv.id("FRICATIVE_S"), 0.2, 0.3});
        CHECK(s.events()[3] == VisemeEvent{inv.id("NEUTRAL"), 0.3, 0.4});
        for (std::size_t i = 0; i + 1 < s.events().size(); ++i) {
            CHECK(s.events()[i].end_s == s.events()[i + 1].start_s);
        }
    }
    SUBCASE("leading silence") {
        const auto s = map_phonemes_to_visemes(stream_of({{"AA", 0.25, 0.5}}), map, bank, false);
        REQUIRE(s.events().size() == 2);
        CHECK(s.events()[0] == VisemeEvent{inv.id("NEUTRAL"), 0.0, 0.25});
    }
    SUBCASE("unknown phonemes") {
        const auto st = stream_of({{"XX", 0.0, 0.1}});
        CHECK(map_phonemes_to_visemes(st, map, bank, false).events()[0].viseme == inv.id("NEUTRAL"));
        CHECK_THROWS_AS(map_phonemes_to_visemes(st, map, bank, false, UnknownPhoneme::reject), ValidationError);
    }
    SUBCASE("inventory mismatch") {
        ParamBank small(VisemeInventory({"NEUTRAL", "X"}), {VisemeParams{}, VisemeParams{}});
        CHECK_THROWS_AS(map_phonemes_to_visemes(stream_of({{"AA", 0.0, 0.1}}), map, small, false), ConfigError);
    }
    SUBCASE("params_for") {
        const auto s = map_phonemes_to_visemes(stream_of({{"AA", 0.0, 0.1}}), map, bank, false);
        CHECK(params_for(s, inv.id("OPEN_VOWEL"))[jaw_open] == 0.9);
        CHECK(params_for(s, inv.id("NEUTRAL")) == VisemeParams{});
        CHECK_THROWS(params_for(s, VisemeId{200}));
    }
}

TEST_CASE("boundary preservation and determinism on random streams") {
    const auto map = VisemeMap::builtin_jeffers();
    const auto bank = ParamBank::builtin_default();
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto st = test::random_stream(rng, 5.0);
        const auto plain = map_phonemes_to_visemes(st, map, bank, false);
        REQUIRE(plain.events().size() == st.size());
        std::multiset<double> input_bounds;
        for (std::size_t i = 0; i < st.size(); ++i) {
            CHECK(plain.events()[i].start_s == st.segments()[i].start_s);
            CHECK(plain.events()[i].end_s == st.segments()[i].end_s);
            input_bounds.insert(st.segments()[i].start_s);
            input_bounds.insert(st.segments()[i].end_s);
        }
        const auto merged = map_phonemes_to_visemes(st, map, bank, true);
        for (std::size_t i = 0; i < merged.events().size(); ++i) {
            CHECK(input_bounds.count(merged.events()[i].start_s) > 0);
            CHECK(input_bounds.count(merged.events()[i].end_s) > 0);
            if (i > 0) CHECK(merged.events()[i].viseme != merged.events()[i - 1].viseme);
        }
        CHECK(map_phonemes_to_visemes(st, map, bank, true).events() == merged.events());
    }
}

TEST_CASE("schedule validation and lookup") {
    const auto bank = ParamBank::builtin_default();
    const auto id = bank.inventory().id("BILABIAL");
    CHECK_THROWS_AS(VisemeSchedule::create({{id, 0.2, 0.1}}, bank), ValidationError);
    CHECK_THROWS_AS(VisemeSchedule::create({{id, 0.0, 0.2}, {id, 0.1, 0.3}}, bank), ValidationError);
    CHECK_THROWS_AS(VisemeSchedule::create({{VisemeId{77}, 0.0, 0.2}}, bank), ValidationError);

    const auto s = test::make_schedule({{"BILABIAL", 0.0, 0.1}, {"OPEN_VOWEL", 0.1, 0.3}});
    CHECK(s.event_at(0.0) == 0u);
    CHECK(s.event_at(0.1) == 1u);
    CHECK(s.event_at(0.3) == 1u);
    CHECK_FALSE(s.event_at(0.31).has_value());
    CHECK_FALSE(s.event_at(-0.01).has_value());
}
