#include "atract/fusion/mask.hpp"

#include "atract/common/error.hpp"

namespace atract::fusion {

using vitalgen::Channel;

namespace {

constexpr std::array<std::pair<Channel, std::string_view>, 4> kTokens{{
    {Channel::heart_rate, "hr"},
    {Channel::breathing_rate, "br"},
    {Channel::posture, "posture"},
    {Channel::movement, "movement"},
}};

ModalityMask sensors(std::initializer_list<Channel> on) {
    ModalityMask m;
    m.video = false;
    m.channels.fill(false);
    for (auto c : on) m.channels[vitalgen::index(c)] = true;
    return m;
}

}  // namespace

bool ModalityMask::any_sensor() const {
    for (bool c : channels)
        if (c) return true;
    return false;
}

std::string ModalityMask::name() const {
    std::string out = video ? "video" : "";
    for (const auto& [c, tok] : kTokens) {
        if (!enabled(c)) continue;
        if (!out.empty()) out += '+';
        out += tok;
    }
    return out;
}

ModalityMask parse_mask(std::string_view name) {
    ModalityMask m;
    m.video = false;
    m.channels.fill(false);
    std::size_t pos = 0;
    while (pos <= name.size()) {
        const auto plus = name.find('+', pos);
        const auto tok = name.substr(pos, plus == std::string_view::npos ? std::string_view::npos : plus - pos);
        bool known = false;
        if (tok == "video") {
            m.video = known = true;
        } else if (tok == "all") {
            m.video = true;
            m.channels.fill(true);
            known = true;
        }
        for (const auto& [c, t] : kTokens) {
            if (tok == t) {
                m.channels[vitalgen::index(c)] = true;
                known = true;
            }
        }
        if (!known) fail(ErrorKind::config, "unknown modality '" + std::string(tok) + "' in mask '" + std::string(name) + "'");
        if (plus == std::string_view::npos) break;
        pos = plus + 1;
    }
    validate(m);
    return m;
}

void validate(const ModalityMask& mask) {
    if (!mask.video && !mask.any_sensor()) fail(ErrorKind::config, "modality mask enables nothing");
}

std::vector<ModalityMask> table_masks() {
    using C = Channel;
    ModalityMask video_only;
    video_only.channels.fill(false);
    return {
        video_only,
        sensors({C::heart_rate}),
        sensors({C::breathing_rate}),
        sensors({C::movement}),
        sensors({C::posture}),
        sensors({C::heart_rate, C::breathing_rate}),
        sensors({C::heart_rate, C::movement}),
        sensors({C::heart_rate, C::posture}),
        sensors({C::breathing_rate, C::movement}),
        sensors({C::breathing_rate, C::posture}),
        sensors({C::heart_rate, C::breathing_rate, C::posture}),
        sensors({C::heart_rate, C::breathing_rate, C::movement}),
        sensors({C::heart_rate, C::breathing_rate, C::posture, C::movement}),
    };
}

}  // namespace atract::fusion
