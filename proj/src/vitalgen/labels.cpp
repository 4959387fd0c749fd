#include "atract/vitalgen/labels.hpp"

namespace atract::vitalgen {

namespace {

constexpr std::array<std::string_view, kActionCount> kActionNames{
    "arm_injury", "head_injury", "limping", "walk_collapse", "crawling", "running"};
constexpr std::array<std::string_view, kClinicalCount> kClinicalNames{
    "bleeding", "cardiac_arrest", "brain_injury", "baseline_healthy"};
constexpr std::array<std::string_view, kChannelCount> kChannelNames{
    "heart_rate", "breathing_rate", "posture", "movement"};

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::string_view, N>& names, std::string_view s) {
    for (std::size_t i = 0; i < N; ++i)
        if (names[i] == s) return static_cast<E>(i);
    return std::nullopt;
}

}  // namespace

std::string_view to_string(ActionLabel a) { return kActionNames[index(a)]; }
std::string_view to_string(ClinicalLabel c) { return kClinicalNames[index(c)]; }
std::string_view to_string(Channel c) { return kChannelNames[index(c)]; }

std::optional<ActionLabel> parse_action(std::string_view s) {
    return lookup<ActionLabel>(kActionNames, s);
}
std::optional<ClinicalLabel> parse_clinical(std::string_view s) {
    return lookup<ClinicalLabel>(kClinicalNames, s);
}
std::optional<Channel> parse_channel(std::string_view s) {
    return lookup<Channel>(kChannelNames, s);
}

}  // namespace atract::vitalgen
