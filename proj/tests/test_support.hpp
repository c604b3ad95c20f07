#pragma once

// Shared fixtures: data paths, random phoneme streams, schedule builders.

#include "vedicthg/viseme.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace vthg::test {

inline std::filesystem::path data_dir() { return VEDICTHG_DATA_DIR; }
inline std::filesystem::path test_data_dir() { return VEDICTHG_TEST_DATA_DIR; }

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Contiguous stream of speech phonemes with lengths uniform in [lo, hi].
inline PhonemeStream random_stream(std::mt19937_64& rng, double total_s, double lo = 0.040, double hi = 0.400) {
    std::vector<std::string> pool;
    for (const auto& p : supported_phonemes()) {
        if (p != "SIL" && p != "SP") pool.push_back(p);
    }
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::uniform_real_distribution<double> len(lo, hi);
    std::vector<PhonemeSegment> segs;
    double t = 0.0;
    while (t < total_s) {
        // Millisecond grid keeps boundaries exactly representable in text.
        const double e = std::round((t + len(rng)) * 1000.0) / 1000.0;
        segs.push_back({PhonemeLabel::parse(pool[pick(rng)]), t, e});
        t = e;
    }
    return PhonemeStream::create(std::move(segs));
}

using EventSpec = std::tuple<const char*, double, double>;

inline VisemeSchedule make_schedule(const std::vector<EventSpec>& spec, ParamBank bank = ParamBank::builtin_default()) {
    std::vector<VisemeEvent> events;
    for (const auto& [name, s, e] : spec) {
        events.push_back({bank.inventory().id(name), s, e});
    }
    return VisemeSchedule::create(std::move(events), std::move(bank));
}

}  // namespace vthg::test
