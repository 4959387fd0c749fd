#pragma once

#include <optional>

#include "atract/vitalgen/labels.hpp"

namespace atract::cvvitae {

// Clinical condition used to augment an action's recordings. Actions without
// evident injury signs are left raw.
constexpr std::optional<vitalgen::ClinicalLabel> action_to_clinical(vitalgen::ActionLabel a) {
    using vitalgen::ActionLabel;
    using vitalgen::ClinicalLabel;
    switch (a) {
        case ActionLabel::arm_injury: return ClinicalLabel::bleeding;
        case ActionLabel::walk_collapse: return ClinicalLabel::cardiac_arrest;
        case ActionLabel::head_injury: return ClinicalLabel::brain_injury;
        default: return std::nullopt;
    }
}

}  // namespace atract::cvvitae
