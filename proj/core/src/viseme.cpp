#include "vedicthg/viseme.hpp"

#include "vedicthg/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace vthg {

namespace {

using ordered_json = nlohmann::ordered_json;

// Grouping follows the usual visual-similarity classes; HH takes the
// relaxed open-back shape of VELAR, glides join their nearest vowel class.
const std::vector<std::pair<std::string_view, std::string_view>>& jeffers_table() {
    static const std::vector<std::pair<std::string_view, std::string_view>> table = {
        {"SIL", "NEUTRAL"},      {"SP", "NEUTRAL"},
        {"P", "BILABIAL"},       {"B", "BILABIAL"},         {"M", "BILABIAL"},
        {"F", "LABIODENTAL"},    {"V", "LABIODENTAL"},
        {"TH", "DENTAL"},        {"DH", "DENTAL"},
        {"T", "ALVEOLAR"},       {"D", "ALVEOLAR"},         {"N", "ALVEOLAR"},
        {"L", "ALVEOLAR"},
        {"CH", "POSTALVEOLAR"},  {"JH", "POSTALVEOLAR"},    {"SH", "POSTALVEOLAR"},
        {"ZH", "POSTALVEOLAR"},
        {"K", "VELAR"},          {"G", "VELAR"},            {"NG", "VELAR"},
        {"HH", "VELAR"},
        {"S", "FRICATIVE_S"},    {"Z", "FRICATIVE_S"},
        {"AA", "OPEN_VOWEL"},    {"AE", "OPEN_VOWEL"},      {"AH", "OPEN_VOWEL"},
        {"EH", "MID_VOWEL"},     {"ER", "MID_VOWEL"},       {"EY", "MID_VOWEL"},
        {"IH", "CLOSE_VOWEL"},   {"IY", "CLOSE_VOWEL"},     {"Y", "CLOSE_VOWEL"},
        {"AO", "ROUNDED"},       {"OW", "ROUNDED"},         {"OY", "ROUNDED"},
        {"UH", "ROUNDED"},       {"UW", "ROUNDED"},         {"W", "ROUNDED"},
        {"R", "ROUNDED"},
        {"AW", "DIPHTHONG_AW"},
        {"AY", "DIPHTHONG_AY"},
    };
    return table;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace

const std::array<ComponentRange, kRigDim>& rig_ranges() noexcept {
    static const std::array<ComponentRange, kRigDim> ranges = {{
        {0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0},
        {-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0},
    }};
    return ranges;
}

VisemeParams clamp_to_rig(const VisemeParams& p) noexcept {
    const auto& ranges = rig_ranges();
    VisemeParams out;
    for (std::size_t i = 0; i < kRigDim; ++i) {
        out[i] = std::clamp(p[i], ranges[i].lo, ranges[i].hi);
    }
    return out;
}

VisemeInventory::VisemeInventory(std::vector<std::string> names) : names_(std::move(names)) {
    std::set<std::string_view> seen;
    for (const auto& n : names_) {
        if (n.empty() || !seen.insert(n).second) {
            throw ConfigError("viseme inventory has an empty or duplicate name '" + n + "'");
        }
    }
}

VisemeInventory VisemeInventory::jeffers() {
    return VisemeInventory({"NEUTRAL", "BILABIAL", "LABIODENTAL", "DENTAL", "ALVEOLAR",
                            "POSTALVEOLAR", "VELAR", "FRICATIVE_S", "OPEN_VOWEL", "MID_VOWEL",
                            "CLOSE_VOWEL", "ROUNDED", "DIPHTHONG_AW", "DIPHTHONG_AY"});
}

const std::string& VisemeInventory::name(VisemeId id) const {
    if (id.value >= names_.size()) {
        throw ValidationError(ValidationError::Reason::out_of_range, id.value, "viseme id out of range");
    }
    return names_[id.value];
}

std::optional<VisemeId> VisemeInventory::find(std::string_view name) const noexcept {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) {
        return std::nullopt;
    }
    return VisemeId{static_cast<std::uint16_t>(it - names_.begin())};
}

VisemeId VisemeInventory::id(std::string_view name) const {
    if (auto v = find(name)) {
        return *v;
    }
    throw ConfigError("unknown viseme '" + std::string(name) + "'");
}

const std::vector<std::string>& supported_phonemes() {
    static const std::vector<std::string> phonemes = [] {
        std::vector<std::string> out;
        for (const auto& [ph, _] : jeffers_table()) {
            out.emplace_back(ph);
        }
        return out;
    }();
    return phonemes;
}

VisemeMap VisemeMap::builtin_jeffers() {
    VisemeMap map;
    map.inventory_ = VisemeInventory::jeffers();
    for (const auto& [ph, vis] : jeffers_table()) {
        map.table_.emplace(std::string(ph), map.inventory_.id(vis));
    }
    map.default_ = map.inventory_.id(kNeutralViseme);
    return map;
}

VisemeMap VisemeMap::parse(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> pairs;
    std::unordered_map<std::string, std::size_t> first_line;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        std::istringstream fields{std::string(line)};
        std::string ph;
        std::string vis;
        std::string extra;
        if (!(fields >> ph >> vis) || (fields >> extra)) {
            throw ParseError(line_no, "expected `PHONEME VISEME_NAME`");
        }
        std::string symbol;
        try {
            symbol = PhonemeLabel::parse(ph).str();
        } catch (const ValidationError&) {
            throw ParseError(line_no, "invalid phoneme '" + ph + "'");
        }
        if (auto [it, inserted] = first_line.emplace(symbol, line_no); !inserted) {
            throw ParseError(line_no, "phoneme " + symbol + " mapped twice (first on line " +
                                          std::to_string(it->second) + ")");
        }
        pairs.emplace_back(std::move(symbol), std::move(vis));
    }

    std::vector<std::string> missing;
    for (const auto& ph : supported_phonemes()) {
        if (!first_line.contains(ph)) {
            missing.push_back(ph);
        }
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) {
            list += (list.empty() ? "" : " ") + m;
        }
        throw ParseError(0, "viseme map leaves phonemes unmapped: " + list);
    }

    const auto jeffers = VisemeInventory::jeffers();
    const bool all_jeffers = std::all_of(pairs.begin(), pairs.end(),
                                         [&](const auto& p) { return jeffers.find(p.second).has_value(); });
    VisemeMap map;
    if (all_jeffers) {
        map.inventory_ = jeffers;
    } else {
        std::vector<std::string> names{std::string(kNeutralViseme)};
        for (const auto& [_, vis] : pairs) {
            if (std::find(names.begin(), names.end(), vis) == names.end()) {
                names.push_back(vis);
            }
        }
        map.inventory_ = VisemeInventory(std::move(names));
    }
    for (const auto& [ph, vis] : pairs) {
        map.table_.emplace(ph, map.inventory_.id(vis));
    }
    map.default_ = map.inventory_.id(kNeutralViseme);
    return map;
}

VisemeMap VisemeMap::load(std::string_view builtin_name_or_text) {
    const auto t = trim(builtin_name_or_text);
    if (t == "jeffers" || t == "builtin:jeffers") {
        return builtin_jeffers();
    }
    return parse(builtin_name_or_text);
}

std::optional<VisemeId> VisemeMap::find(const PhonemeLabel& phoneme) const noexcept {
    const auto it = table_.find(phoneme.str());
    if (it == table_.end()) {
        return std::nullopt;
    }
    return it->second;
}

VisemeId VisemeMap::lookup(const PhonemeLabel& phoneme) const noexcept {
    return find(phoneme).value_or(default_);
}

std::string VisemeMap::serialize() const {
    std::ostringstream out;
    out << "# phoneme viseme\n";
    for (const auto& ph : supported_phonemes()) {
        out << ph << ' ' << inventory_.name(table_.at(ph)) << '\n';
    }
    return out.str();
}

ParamBank::ParamBank(VisemeInventory inventory, std::vector<VisemeParams> params)
    : inventory_(std::move(inventory)), params_(std::move(params)) {
    if (params_.size() != inventory_.size()) {
        throw ConfigError("parameter bank size does not match the viseme inventory");
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
        for (double v : params_[i].values) {
            if (!std::isfinite(v)) {
                throw ConfigError("parameter bank entry " + inventory_.names()[i] + " is not finite");
            }
        }
    }
}

ParamBank ParamBank::builtin_default() {
    // jaw_open, lip_width, lip_protrusion, mouth_bank_blend, warp[4]
    auto p = [](double jaw, double width, double protrusion, double blend) {
        return VisemeParams{{jaw, width, protrusion, blend, 0.0, 0.0, 0.0, 0.0}};
    };
    return ParamBank(VisemeInventory::jeffers(), {
        p(0.00, 0.00, 0.00, 0.0),  // NEUTRAL
        p(0.00, 0.45, 0.10, 1.0),  // BILABIAL
        p(0.10, 0.50, 0.00, 1.0),  // LABIODENTAL
        p(0.20, 0.50, 0.00, 1.0),  // DENTAL
        p(0.25, 0.50, 0.00, 1.0),  // ALVEOLAR
        p(0.20, 0.40, 0.60, 1.0),  // POSTALVEOLAR
        p(0.35, 0.50, 0.00, 1.0),  // VELAR
        p(0.10, 0.65, 0.00, 1.0),  // FRICATIVE_S
        p(0.90, 0.55, 0.00, 1.0),  // OPEN_VOWEL
        p(0.50, 0.60, 0.00, 1.0),  // MID_VOWEL
        p(0.20, 0.75, 0.00, 1.0),  // CLOSE_VOWEL
        p(0.40, 0.20, 0.80, 1.0),  // ROUNDED
        p(0.70, 0.35, 0.40, 1.0),  // DIPHTHONG_AW
        p(0.75, 0.60, 0.00, 1.0),  // DIPHTHONG_AY
    });
}

ParamBank ParamBank::parse(std::string_view json_text, const VisemeInventory& inventory) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(json_text.begin(), json_text.end());
    } catch (const ordered_json::parse_error& e) {
        throw ParseError(0, std::string("parameter bank: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("visemes") || !doc["visemes"].is_object()) {
        throw ParseError(0, "parameter bank: expected {\"dimension\": d, \"visemes\": {...}}");
    }
    if (doc.contains("dimension") && doc["dimension"] != kRigDim) {
        throw ConfigError("parameter bank dimension " + doc["dimension"].dump() +
                          " does not match rig dimension " + std::to_string(kRigDim));
    }
    const auto& visemes = doc["visemes"];
    std::vector<VisemeParams> params(inventory.size());
    for (std::size_t i = 0; i < inventory.size(); ++i) {
        const auto& name = inventory.names()[i];
        const auto it = visemes.find(name);
        if (it == visemes.end()) {
            throw ConfigError("parameter bank has no entry for viseme " + name);
        }
        if (!it->is_array() || it->size() != kRigDim) {
            throw ConfigError("parameter bank entry " + name + " must have " +
                              std::to_string(kRigDim) + " components");
        }
        for (std::size_t c = 0; c < kRigDim; ++c) {
            if (!(*it)[c].is_number()) {
                throw ConfigError("parameter bank entry " + name + " has a non-numeric component");
            }
            params[i][c] = (*it)[c].get<double>();
        }
    }
    for (const auto& [name, _] : visemes.items()) {
        if (!inventory.find(name)) {
            throw ConfigError("parameter bank names unknown viseme " + name);
        }
    }
    return ParamBank(inventory, std::move(params));
}

std::string ParamBank::serialize() const {
    ordered_json doc;
    doc["dimension"] = kRigDim;
    doc["components"] = {"jaw_open", "lip_width", "lip_protrusion", "mouth_bank_blend",
                         "warp0", "warp1", "warp2", "warp3"};
    ordered_json visemes = ordered_json::object();
    for (std::size_t i = 0; i < params_.size(); ++i) {
        visemes[inventory_.names()[i]] = params_[i].values;
    }
    doc["visemes"] = std::move(visemes);
    return doc.dump(2) + "\n";
}

const VisemeParams& ParamBank::at(VisemeId id) const {
    if (id.value >= params_.size()) {
        throw ValidationError(ValidationError::Reason::out_of_range, id.value,
                              "viseme id has no parameters in the bank");
    }
    return params_[id.value];
}

VisemeSchedule VisemeSchedule::create(std::vector<VisemeEvent> events, ParamBank bank) {
    using Reason = ValidationError::Reason;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& ev = events[i];
        if (!(ev.start_s < ev.end_s)) {
            throw ValidationError(Reason::empty_interval, i, "viseme event has start >= end");
        }
        if (i > 0 && ev.start_s < events[i - 1].end_s) {
            throw ValidationError(Reason::overlap, i, "viseme events overlap");
        }
        if (ev.viseme.value >= bank.inventory().size()) {
            throw ValidationError(Reason::out_of_range, i, "viseme event has no parameters in the bank");
        }
    }
    VisemeSchedule s;
    s.events_ = std::move(events);
    s.bank_ = std::move(bank);
    return s;
}

std::optional<std::size_t> VisemeSchedule::event_at(double t) const noexcept {
    if (events_.empty() || t < events_.front().start_s || t > events_.back().end_s) {
        return std::nullopt;
    }
    // First event whose end is strictly after t.
    const auto it = std::upper_bound(events_.begin(), events_.end(), t,
                                     [](double v, const VisemeEvent& e) { return v < e.end_s; });
    if (it == events_.end()) {
        return events_.size() - 1;
    }
    if (t < it->start_s) {
        return std::nullopt;  // inside a gap
    }
    return static_cast<std::size_t>(it - events_.begin());
}

VisemeSchedule map_phonemes_to_visemes(const PhonemeStream& stream, const VisemeMap& map,
                                       const ParamBank& bank, bool merge_adjacent,
                                       UnknownPhoneme unknown) {
    if (!(bank.inventory() == map.inventory())) {
        throw ConfigError("parameter bank and viseme map use different inventories");
    }
    const VisemeId neutral = map.default_viseme();
    std::vector<VisemeEvent> events;
    events.reserve(stream.size() * 2 + 1);

    auto push = [&](VisemeId v, double start, double end) {
        if (merge_adjacent && !events.empty() && events.back().viseme == v &&
            events.back().end_s == start) {
            events.back().end_s = end;
        } else {
            events.push_back({v, start, end});
        }
    };

    double cursor = 0.0;
    const auto& segments = stream.segments();
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& seg = segments[i];
        const auto mapped = map.find(seg.phoneme);
        if (!mapped && unknown == UnknownPhoneme::reject) {
            throw ValidationError(ValidationError::Reason::out_of_range, i,
                                  "phoneme " + seg.phoneme.str() + " has no viseme mapping");
        }
        if (seg.start_s > cursor) {
            push(neutral, cursor, seg.start_s);
        }
        push(mapped.value_or(neutral), seg.start_s, seg.end_s);
        cursor = seg.end_s;
    }
    if (stream.total_duration_s() > cursor) {
        push(neutral, cursor, stream.total_duration_s());
    }
    return VisemeSchedule::create(std::move(events), bank);
}

const VisemeParams& params_for(const VisemeSchedule& schedule, VisemeId viseme) {
    return schedule.bank().at(viseme);
}

}  // namespace vthg
