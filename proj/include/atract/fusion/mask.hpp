#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "atract/vitalgen/labels.hpp"

namespace atract::fusion {

// Which inputs the model may look at. Disabled sensor channels are replaced by
// 0 after standardization; a disabled video branch contributes a zero embedding.
struct ModalityMask {
    bool video = true;
    std::array<bool, vitalgen::kChannelCount> channels{true, true, true, true};

    bool any_sensor() const;
    bool enabled(vitalgen::Channel c) const { return channels[vitalgen::index(c)]; }
    // "video+hr+br+posture+movement" style name; order is fixed.
    std::string name() const;
    friend bool operator==(const ModalityMask&, const ModalityMask&) = default;
};

// Inverse of name(), plus "all" for every modality; throws Error{config} on unknown tokens or an empty mask.
ModalityMask parse_mask(std::string_view name);
void validate(const ModalityMask& mask);

// The thirteen single-modality and sensor-combination settings, in table order.
std::vector<ModalityMask> table_masks();

}  // namespace atract::fusion
