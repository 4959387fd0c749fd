#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace atract::vitalgen {

// Field actions performed for the drone capture. The first four are injured.
enum class ActionLabel { arm_injury, head_injury, limping, walk_collapse, crawling, running };
inline constexpr std::size_t kActionCount = 6;
inline constexpr std::array<ActionLabel, kActionCount> kAllActions{
    ActionLabel::arm_injury, ActionLabel::head_injury, ActionLabel::limping,
    ActionLabel::walk_collapse, ActionLabel::crawling, ActionLabel::running};

// Clinical reference classes.
enum class ClinicalLabel { bleeding, cardiac_arrest, brain_injury, baseline_healthy };
inline constexpr std::size_t kClinicalCount = 4;
inline constexpr std::array<ClinicalLabel, kClinicalCount> kAllClinical{
    ClinicalLabel::bleeding, ClinicalLabel::cardiac_arrest, ClinicalLabel::brain_injury,
    ClinicalLabel::baseline_healthy};

// Canonical channel order for serialization.
enum class Channel { heart_rate, breathing_rate, posture, movement };
inline constexpr std::size_t kChannelCount = 4;
inline constexpr std::array<Channel, kChannelCount> kAllChannels{
    Channel::heart_rate, Channel::breathing_rate, Channel::posture, Channel::movement};

struct ChannelRange {
    double lo;
    double hi;
};

// Admissible physical range of each channel.
constexpr ChannelRange channel_range(Channel c) {
    switch (c) {
        case Channel::heart_rate: return {20.0, 240.0};
        case Channel::breathing_rate: return {2.0, 70.0};
        case Channel::posture: return {-180.0, 180.0};
        case Channel::movement: return {0.0, 1.0e9};
    }
    return {0.0, 0.0};
}

constexpr std::size_t index(ActionLabel a) { return static_cast<std::size_t>(a); }
constexpr std::size_t index(ClinicalLabel c) { return static_cast<std::size_t>(c); }
constexpr std::size_t index(Channel c) { return static_cast<std::size_t>(c); }

constexpr bool is_injured(ActionLabel a) { return index(a) < 4; }

std::string_view to_string(ActionLabel a);
std::string_view to_string(ClinicalLabel c);
std::string_view to_string(Channel c);
std::optional<ActionLabel> parse_action(std::string_view s);
std::optional<ClinicalLabel> parse_clinical(std::string_view s);
std::optional<Channel> parse_channel(std::string_view s);

}  // namespace atract::vitalgen
