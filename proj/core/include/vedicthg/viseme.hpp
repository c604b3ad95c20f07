#pragma once

// Phoneme -> viseme lookup, the viseme control-parameter bank, and the
// viseme event schedule produced from a phoneme stream.

#include "vedicthg/phonetics.hpp"

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vthg {

struct VisemeId {
    std::uint16_t value = 0;

    friend auto operator<=>(const VisemeId&, const VisemeId&) = default;
};

// Rig layout: four semantic controls followed by four warp coefficients.
inline constexpr std::size_t kRigDim = 8;

enum RigComponent : std::size_t {
    jaw_open = 0,
    lip_width = 1,
    lip_protrusion = 2,
    mouth_bank_blend = 3,
};

struct ComponentRange {
    double lo;
    double hi;
};

// Valid range per rig component; blended vectors are clamped into it.
const std::array<ComponentRange, kRigDim>& rig_ranges() noexcept;

struct VisemeParams {
    std::array<double, kRigDim> values{};

    double operator[](std::size_t i) const noexcept { return values[i]; }
    double& operator[](std::size_t i) noexcept { return values[i]; }

    friend bool operator==(const VisemeParams&, const VisemeParams&) = default;
};

VisemeParams clamp_to_rig(const VisemeParams& p) noexcept;

// Ordered viseme names; a name's position is its VisemeId.
class VisemeInventory {
public:
    VisemeInventory() = default;
    explicit VisemeInventory(std::vector<std::string> names);

    // NEUTRAL, BILABIAL, ... DIPHTHONG_AY (14 classes).
    static VisemeInventory jeffers();

    std::size_t size() const noexcept { return names_.size(); }
    const std::string& name(VisemeId id) const;
    std::optional<VisemeId> find(std::string_view name) const noexcept;
    VisemeId id(std::string_view name) const;  // throws on unknown name
    const std::vector<std::string>& names() const noexcept { return names_; }

    friend bool operator==(const VisemeInventory& a, const VisemeInventory& b) {
        return a.names_ == b.names_;
    }

private:
    std::vector<std::string> names_;
};

inline constexpr std::string_view kNeutralViseme = "NEUTRAL";

// The 39 stress-free ARPAbet phonemes plus SIL and SP.
const std::vector<std::string>& supported_phonemes();

class VisemeMap {
public:
    // Built-in Jeffers-style grouping over the 14-class inventory.
    static VisemeMap builtin_jeffers();

    // Lines `PHONEME VISEME_NAME`, `#` comments. Must cover every supported
    // phoneme exactly once. NEUTRAL is always id 0 and the default.
    static VisemeMap parse(std::string_view text);

    // Either "builtin:jeffers" / "jeffers" or file contents.
    static VisemeMap load(std::string_view builtin_name_or_text);

    const VisemeInventory& inventory() const noexcept { return inventory_; }
    VisemeId default_viseme() const noexcept { return default_; }

    std::optional<VisemeId> find(const PhonemeLabel& phoneme) const noexcept;
    // Unknown phonemes fall back to the default viseme.
    VisemeId lookup(const PhonemeLabel& phoneme) const noexcept;

    std::string serialize() const;

private:
    VisemeInventory inventory_;
    std::unordered_map<std::string, VisemeId> table_;
    VisemeId default_{};
};

// m(v) for every viseme of an inventory.
class ParamBank {
public:
    ParamBank() = default;
    ParamBank(VisemeInventory inventory, std::vector<VisemeParams> params);

    // Hand-authored defaults for the Jeffers inventory.
    static ParamBank builtin_default();

    // {"dimension": 8, "visemes": {"NAME": [d numbers], ...}}; every viseme
    // in the inventory must be present and the dimension must equal kRigDim.
    static ParamBank parse(std::string_view json_text, const VisemeInventory& inventory);
    std::string serialize() const;

    const VisemeInventory& inventory() const noexcept { return inventory_; }
    const VisemeParams& at(VisemeId id) const;
    VisemeId neutral() const { return inventory_.id(kNeutralViseme); }

private:
    VisemeInventory inventory_;
    std::vector<VisemeParams> params_;
};

struct VisemeEvent {
    VisemeId viseme;
    double start_s = 0.0;
    double end_s = 0.0;

    double duration_s() const noexcept { return end_s - start_s; }
    friend bool operator==(const VisemeEvent&, const VisemeEvent&) = default;
};

class VisemeSchedule {
public:
    VisemeSchedule() = default;

    // Validates ordering, non-overlap and that the bank covers every event.
    static VisemeSchedule create(std::vector<VisemeEvent> events, ParamBank bank);

    const std::vector<VisemeEvent>& events() const noexcept { return events_; }
    const ParamBank& bank() const noexcept { return bank_; }
    const VisemeInventory& inventory() const noexcept { return bank_.inventory(); }
    bool empty() const noexcept { return events_.empty(); }
    double start_s() const noexcept { return events_.empty() ? 0.0 : events_.front().start_s; }
    double end_s() const noexcept { return events_.empty() ? 0.0 : events_.back().end_s; }

    // Index of the event whose half-open interval contains t (the last event
    // also owns its end point); nullopt outside the schedule.
    std::optional<std::size_t> event_at(double t) const noexcept;

private:
    std::vector<VisemeEvent> events_;
    ParamBank bank_;
};

enum class UnknownPhoneme { use_default, reject };

// One event per segment; gaps (and leading/trailing silence up to the
// stream duration) become NEUTRAL events. With merge_adjacent, runs of the
// same viseme are coalesced.
VisemeSchedule map_phonemes_to_visemes(const PhonemeStream& stream, const VisemeMap& map,
                                       const ParamBank& bank, bool merge_adjacent,
                                       UnknownPhoneme unknown = UnknownPhoneme::use_default);

const VisemeParams& params_for(const VisemeSchedule& schedule, VisemeId viseme);

}  // namespace vthg
