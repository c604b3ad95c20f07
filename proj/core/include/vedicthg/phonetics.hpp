#pragma once

// Time-aligned phoneme streams: lexicon handling, aligner-output ingestion,
// and the proportional fallback aligner for word-timed transcripts.

#include <compare>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vthg {

// ARPAbet symbol with stress digits removed, e.g. "AH0" -> "AH".
class PhonemeLabel {
public:
    // Uppercases, strips trailing stress digits and validates [A-Z]{1,3}.
    // Throws ValidationError(malformed) on anything else.
    static PhonemeLabel parse(std::string_view raw);

    const std::string& str() const noexcept { return symbol_; }

    friend auto operator<=>(const PhonemeLabel&, const PhonemeLabel&) = default;

private:
    explicit PhonemeLabel(std::string symbol) : symbol_(std::move(symbol)) {}
    std::string symbol_;
};

bool is_vowel(const PhonemeLabel& label) noexcept;
bool is_silence(const PhonemeLabel& label) noexcept;

struct PhonemeSegment {
    PhonemeLabel phoneme;
    double start_s = 0.0;
    double end_s = 0.0;

    double duration_s() const noexcept { return end_s - start_s; }
};

// Sorted, non-overlapping segments. Gaps are allowed and mean silence.
class PhonemeStream {
public:
    PhonemeStream() = default;

    // Validates every invariant; total defaults to the last segment end.
    static PhonemeStream create(std::vector<PhonemeSegment> segments,
                                std::optional<double> total_duration_s = std::nullopt);

    const std::vector<PhonemeSegment>& segments() const noexcept { return segments_; }
    double total_duration_s() const noexcept { return total_duration_s_; }
    bool empty() const noexcept { return segments_.empty(); }
    std::size_t size() const noexcept { return segments_.size(); }

    // Same stream with every time shifted by offset_s (must stay >= 0).
    PhonemeStream shifted(double offset_s) const;

private:
    std::vector<PhonemeSegment> segments_;
    double total_duration_s_ = 0.0;
};

using Pronunciation = std::vector<PhonemeLabel>;

class Lexicon {
public:
    // Appends a pronunciation; alternates keep insertion order.
    void add(std::string_view word, Pronunciation pronunciation);

    // All pronunciations of a word (case-insensitive); empty span if absent.
    std::span<const Pronunciation> pronunciations(std::string_view word) const;

    const std::map<std::string, std::vector<Pronunciation>>& entries() const noexcept {
        return entries_;
    }
    std::size_t size() const noexcept { return entries_.size(); }

    friend bool operator==(const Lexicon&, const Lexicon&) = default;

private:
    std::map<std::string, std::vector<Pronunciation>> entries_;
};

std::string normalize_word(std::string_view word);

// CMUdict plain text: `WORD  PH1 PH2 ...`, `;;;` comments, `WORD(n)` alternates.
Lexicon parse_lexicon(std::string_view text);
std::string serialize_lexicon(const Lexicon& lexicon);

// First pronunciation of a word; throws OovError when missing.
const Pronunciation& lookup_pronunciation(const Lexicon& lexicon, std::string_view word);

// JSON array of {"phoneme", "start", "end"} objects, seconds.
PhonemeStream ingest_alignment(std::string_view json_text);
std::string serialize_alignment(const PhonemeStream& stream);

struct TimedWord {
    std::string word;
    double start_s = 0.0;
    double end_s = 0.0;
};

// JSON array of {"word", "start", "end"} objects.
std::vector<TimedWord> parse_word_timings(std::string_view json_text);

struct DurationWeights {
    double vowel = 1.5;
    double consonant = 1.0;
};

// Splits each word interval among its phonemes by class weight. Segment
// boundaries tile every word exactly; the last segment ends on word end.
PhonemeStream proportional_align(std::span<const TimedWord> words, const Lexicon& lexicon,
                                 const DurationWeights& weights = {});

}  // namespace vthg
