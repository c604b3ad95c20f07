#include "vedicthg/phonetics.hpp"

#include "vedicthg/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <sstream>

namespace vthg {

namespace {

using json = nlohmann::json;

constexpr std::array<std::string_view, 15> kVowels = {
    "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY", "IH", "IY", "OW", "OY", "UH", "UW"};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) {
            ++i;
        }
        const std::size_t start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) {
            ++i;
        }
        if (i > start) {
            out.push_back(s.substr(start, i - start));
        }
    }
    return out;
}

// Strips a trailing "(n)" alternate marker.
std::string_view base_word(std::string_view token) {
    if (token.size() > 3 && token.back() == ')') {
        const auto open = token.rfind('(');
        if (open != std::string_view::npos && open > 0 && open + 2 < token.size()) {
            const auto digits = token.substr(open + 1, token.size() - open - 2);
            if (std::all_of(digits.begin(), digits.end(),
                            [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
                return token.substr(0, open);
            }
        }
    }
    return token;
}

double require_number(const json& obj, const char* key, std::size_t index) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_number()) {
        throw ValidationError(ValidationError::Reason::malformed, index,
                              std::string("missing numeric field '") + key + "'");
    }
    const double v = it->get<double>();
    if (!std::isfinite(v)) {
        throw ValidationError(ValidationError::Reason::non_finite, index,
                              std::string("field '") + key + "' is not finite");
    }
    return v;
}

std::string require_string(const json& obj, const char* key, std::size_t index) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw ValidationError(ValidationError::Reason::malformed, index,
                              std::string("missing string field '") + key + "'");
    }
    return it->get<std::string>();
}

json parse_json_array(std::string_view text, const char* what) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(0, std::string(what) + ": " + e.what());
    }
    if (!doc.is_array()) {
        throw ParseError(0, std::string(what) + ": expected a JSON array");
    }
    return doc;
}

}  // namespace

PhonemeLabel PhonemeLabel::parse(std::string_view raw) {
    std::string symbol;
    symbol.reserve(raw.size());
    for (char c : trim(raw)) {
        symbol.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    while (!symbol.empty() && symbol.back() >= '0' && symbol.back() <= '9') {
        symbol.pop_back();
    }
    const bool ok = !symbol.empty() && symbol.size() <= 3 &&
                    std::all_of(symbol.begin(), symbol.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
    if (!ok) {
        throw ValidationError(ValidationError::Reason::malformed, 0,
                              "invalid phoneme symbol '" + std::string(raw) + "'");
    }
    return PhonemeLabel(std::move(symbol));
}

bool is_vowel(const PhonemeLabel& label) noexcept {
    return std::find(kVowels.begin(), kVowels.end(), label.str()) != kVowels.end();
}

bool is_silence(const PhonemeLabel& label) noexcept {
    return label.str() == "SIL" || label.str() == "SP";
}

PhonemeStream PhonemeStream::create(std::vector<PhonemeSegment> segments,
                                    std::optional<double> total_duration_s) {
    using Reason = ValidationError::Reason;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& seg = segments[i];
        if (!std::isfinite(seg.start_s) || !std::isfinite(seg.end_s)) {
            throw ValidationError(Reason::non_finite, i, "segment time is not finite");
        }
        if (seg.start_s < 0.0 || seg.end_s < 0.0) {
            throw ValidationError(Reason::negative_time, i, "segment time is negative");
        }
        if (!(seg.start_s < seg.end_s)) {
            throw ValidationError(Reason::empty_interval, i,
                                  "segment " + seg.phoneme.str() + " has start >= end");
        }
        if (i > 0) {
            const auto& prev = segments[i - 1];
            if (seg.start_s < prev.start_s) {
                throw ValidationError(Reason::unsorted, i, "segments not sorted by start time");
            }
            if (seg.start_s < prev.end_s) {
                throw ValidationError(Reason::overlap, i, "segment overlaps its predecessor");
            }
        }
    }
    const double last_end = segments.empty() ? 0.0 : segments.back().end_s;
    const double total = total_duration_s.value_or(last_end);
    if (!std::isfinite(total) || total < last_end) {
        throw ValidationError(Reason::out_of_range, segments.empty() ? 0 : segments.size() - 1,
                              "segment ends after the stream duration");
    }
    PhonemeStream stream;
    stream.segments_ = std::move(segments);
    stream.total_duration_s_ = total;
    return stream;
}

PhonemeStream PhonemeStream::shifted(double offset_s) const {
    auto segs = segments_;
    for (auto& s : segs) {
        s.start_s += offset_s;
        s.end_s += offset_s;
    }
    return create(std::move(segs), total_duration_s_ + offset_s);
}

std::string normalize_word(std::string_view word) {
    std::string out;
    out.reserve(word.size());
    for (char c : trim(word)) {
        out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    return out;
}

void Lexicon::add(std::string_view word, Pronunciation pronunciation) {
    if (pronunciation.empty()) {
        throw ValidationError(ValidationError::Reason::malformed, 0,
                              "pronunciation for '" + std::string(word) + "' is empty");
    }
    entries_[normalize_word(word)].push_back(std::move(pronunciation));
}

std::span<const Pronunciation> Lexicon::pronunciations(std::string_view word) const {
    const auto it = entries_.find(normalize_word(word));
    if (it == entries_.end()) {
        return {};
    }
    return it->second;
}

Lexicon parse_lexicon(std::string_view text) {
    Lexicon lex;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
        ++line_no;

        auto line = trim(raw);
        if (line.empty() || line.starts_with(";;;")) {
            continue;
        }
        // cmudict.dict annotates some entries with a trailing "# comment".
        if (const auto hash = line.find(" #"); hash != std::string_view::npos) {
            line = trim(line.substr(0, hash));
        }
        const auto tokens = split_ws(line);
        if (tokens.size() < 2) {
            throw ParseError(line_no, "entry '" + std::string(tokens.empty() ? line : tokens[0]) +
                                          "' has no phonemes");
        }
        Pronunciation pron;
        pron.reserve(tokens.size() - 1);
        for (std::size_t i = 1; i < tokens.size(); ++i) {
            try {
                pron.push_back(PhonemeLabel::parse(tokens[i]));
            } catch (const ValidationError&) {
                throw ParseError(line_no, "invalid phoneme '" + std::string(tokens[i]) + "'");
            }
        }
        lex.add(base_word(tokens[0]), std::move(pron));
    }
    return lex;
}

std::string serialize_lexicon(const Lexicon& lexicon) {
    std::ostringstream out;
    for (const auto& [word, prons] : lexicon.entries()) {
        for (std::size_t n = 0; n < prons.size(); ++n) {
            out << word;
            if (n > 0) {
                out << '(' << (n + 1) << ')';
            }
            out << ' ';
            for (const auto& ph : prons[n]) {
                out << ' ' << ph.str();
            }
            out << '\n';
        }
    }
    return out.str();
}

const Pronunciation& lookup_pronunciation(const Lexicon& lexicon, std::string_view word) {
    if (trim(word).empty()) {
        throw ValidationError(ValidationError::Reason::malformed, 0, "empty word");
    }
    const auto prons = lexicon.pronunciations(word);
    if (prons.empty()) {
        throw OovError(normalize_word(word));
    }
    return prons.front();
}

PhonemeStream ingest_alignment(std::string_view json_text) {
    const json doc = parse_json_array(json_text, "timing file");
    std::vector<PhonemeSegment> segments;
    segments.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& item = doc[i];
        if (!item.is_object()) {
            throw ValidationError(ValidationError::Reason::malformed, i, "expected an object");
        }
        const auto symbol = require_string(item, "phoneme", i);
        const double start = require_number(item, "start", i);
        const double end = require_number(item, "end", i);
        PhonemeLabel label = [&] {
            try {
                return PhonemeLabel::parse(symbol);
            } catch (const ValidationError&) {
                throw ValidationError(ValidationError::Reason::malformed, i,
                                      "invalid phoneme symbol '" + std::string(symbol) + "'");
            }
        }();
        segments.push_back({std::move(label), start, end});
    }
    return PhonemeStream::create(std::move(segments));
}

std::string serialize_alignment(const PhonemeStream& stream) {
    json doc = json::array();
    for (const auto& seg : stream.segments()) {
        doc.push_back({{"phoneme", seg.phoneme.str()}, {"start", seg.start_s}, {"end", seg.end_s}});
    }
    return doc.dump(1) + "\n";
}

std::vector<TimedWord> parse_word_timings(std::string_view json_text) {
    const json doc = parse_json_array(json_text, "word timing file");
    std::vector<TimedWord> words;
    words.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& item = doc[i];
        if (!item.is_object()) {
            throw ValidationError(ValidationError::Reason::malformed, i, "expected an object");
        }
        words.push_back({require_string(item, "word", i), require_number(item, "start", i),
                         require_number(item, "end", i)});
    }
    return words;
}

PhonemeStream proportional_align(std::span<const TimedWord> words, const Lexicon& lexicon,
                                 const DurationWeights& weights) {
    using Reason = ValidationError::Reason;
    if (!(weights.vowel > 0.0) || !(weights.consonant > 0.0)) {
        throw ConfigError("duration weights must be positive");
    }
    std::vector<PhonemeSegment> segments;
    for (std::size_t i = 0; i < words.size(); ++i) {
        const auto& w = words[i];
        if (!std::isfinite(w.start_s) || !std::isfinite(w.end_s)) {
            throw ValidationError(Reason::non_finite, i, "word time is not finite");
        }
        if (w.start_s < 0.0) {
            throw ValidationError(Reason::negative_time, i, "word '" + w.word + "' starts before 0");
        }
        if (!(w.start_s < w.end_s)) {
            throw ValidationError(Reason::empty_interval, i, "word '" + w.word + "' has zero length");
        }
        if (i > 0 && w.start_s < words[i - 1].end_s) {
            throw ValidationError(Reason::overlap, i, "word '" + w.word + "' overlaps its predecessor");
        }

        const auto& pron = lookup_pronunciation(lexicon, w.word);
        std::vector<double> cumulative;
        cumulative.reserve(pron.size());
        double total = 0.0;
        for (const auto& ph : pron) {
            total += is_vowel(ph) ? weights.vowel : weights.consonant;
            cumulative.push_back(total);
        }
        const double span = w.end_s - w.start_s;
        double cursor = w.start_s;
        for (std::size_t j = 0; j < pron.size(); ++j) {
            const bool last = (j + 1 == pron.size());
            const double end = last ? w.end_s : w.start_s + span * (cumulative[j] / total);
            segments.push_back({pron[j], cursor, end});
            cursor = end;
        }
    }
    return PhonemeStream::create(std::move(segments));
}

}  // namespace vthg
