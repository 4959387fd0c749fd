#include "atract/tracksync/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "atract/common/rng.hpp"

namespace atract::tracksync {

using vitalgen::ActionLabel;
using Color = std::array<float, 3>;

namespace {

constexpr Color kSkin{0.92f, 0.76f, 0.62f};
constexpr Color kPants{0.18f, 0.18f, 0.28f};
constexpr Color kWound{0.85f, 0.05f, 0.05f};

struct Pose {
    double leg_left = 0.0;  // horizontal foot offset, box-normalized
    double leg_right = 0.0;
    double arm_left = 0.0;
    double arm_right = 0.0;
    bool head_wound = false;
    bool arm_wound = false;
    double tilt = 0.0;  // radians, rotation about the feet
    bool horizontal = false;
};

Pose pose_for(ActionLabel action, double t, const Appearance& look, bool ambiguous) {
    const auto gait = [&](double freq) { return std::sin(2.0 * std::numbers::pi * freq * t + look.phase); };
    Pose p;
    auto walk = [&] {
        const double s = gait(0.25);
        p.leg_left = 0.12 * s;
        p.leg_right = -0.12 * s;
        p.arm_left = -0.08 * s;
        p.arm_right = 0.08 * s;
    };
    switch (action) {
        case ActionLabel::running: {
            const double s = gait(0.37);
            p.leg_left = 0.26 * s;
            p.leg_right = -0.26 * s;
            p.arm_left = -0.22 * s;
            p.arm_right = 0.22 * s;
            break;
        }
        case ActionLabel::limping: {
            const double s = gait(0.2);
            p.leg_right = 0.16 * s;
            p.arm_left = -0.04 * s;
            p.arm_right = 0.04 * s;
            p.tilt = 0.12;
            break;
        }
        case ActionLabel::crawling: {
            const double s = gait(0.3);
            p.horizontal = true;
            p.leg_left = 0.1 * s;
            p.leg_right = -0.1 * s;
            p.arm_left = 0.1 * s;
            p.arm_right = -0.1 * s;
            break;
        }
        case ActionLabel::walk_collapse:
            walk();
            p.tilt = std::clamp((t - look.collapse_at) * 0.45, 0.0, 1.4);
            break;
        case ActionLabel::arm_injury:
            walk();
            if (!ambiguous) {
                p.arm_right = 0.0;
                p.arm_wound = true;
            }
            break;
        case ActionLabel::head_injury:
            walk();
            p.head_wound = !ambiguous;
            break;
    }
    return p;
}

// Upright figure in unit coordinates: u across (0 left), v down (0 = top of head).
std::optional<Color> sprite(double u, double v, const Pose& p, const Color& shirt) {
    if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0) return std::nullopt;
    const double hu = (u - 0.5) / 0.13, hv = (v - 0.11) / 0.1;
    if (hu * hu + hv * hv <= 1.0) return (p.head_wound && u < 0.5 && v < 0.12) ? kWound : kSkin;
    if (v >= 0.21 && v <= 0.58 && u >= 0.32 && u <= 0.68) return shirt;
    if (v >= 0.22 && v <= 0.55) {
        const double k = (v - 0.22) / 0.33;
        if (std::abs(u - (0.24 + p.arm_left * k)) < 0.06) return Color{shirt[0] * 0.7f, shirt[1] * 0.7f, shirt[2] * 0.7f};
        if (std::abs(u - (0.76 + p.arm_right * k)) < 0.06) {
            if (p.arm_wound && v > 0.34 && v < 0.5) return kWound;
            return Color{shirt[0] * 0.7f, shirt[1] * 0.7f, shirt[2] * 0.7f};
        }
    }
    if (v > 0.58) {
        const double k = (v - 0.58) / 0.42;
        if (std::abs(u - (0.41 + p.leg_left * k)) < 0.08) return kPants;
        if (std::abs(u - (0.59 + p.leg_right * k)) < 0.08) return kPants;
    }
    return std::nullopt;
}

}  // namespace

Appearance random_appearance(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Appearance a;
    a.shirt = {static_cast<float>(0.15 + 0.15 * u(rng)), static_cast<float>(0.3 + 0.15 * u(rng)),
               static_cast<float>(0.65 + 0.25 * u(rng))};
    a.phase = 2.0 * std::numbers::pi * u(rng);
    a.collapse_at = 3.0 + 5.0 * u(rng);
    return a;
}

BBox default_person_box(ActionLabel action) {
    if (action == ActionLabel::crawling) return {0, 0, 60, 30};
    return {0, 0, 30, 60};
}

void fill_background(Image& img, std::uint64_t seed, int frame) {
    auto rng = substream(seed, {0xB6, static_cast<std::uint64_t>(frame)});
    std::normal_distribution<float> noise(0.0f, 0.02f);
    for (int y = 0; y < img.height; ++y) {
        const float shade = 0.08f * static_cast<float>(y) / static_cast<float>(std::max(1, img.height));
        for (int x = 0; x < img.width; ++x) {
            img.at(y, x, 0) = std::clamp(0.36f + shade + noise(rng), 0.0f, 1.0f);
            img.at(y, x, 1) = std::clamp(0.48f + shade + noise(rng), 0.0f, 1.0f);
            img.at(y, x, 2) = std::clamp(0.30f + shade + noise(rng), 0.0f, 1.0f);
        }
    }
}

void draw_person(Image& img, const BBox& box, ActionLabel action, double t, const Appearance& look,
                 bool ambiguous) {
    const Pose pose = pose_for(action, t, look, ambiguous);
    const int x0 = std::max(0, static_cast<int>(std::floor(box.x)));
    const int y0 = std::max(0, static_cast<int>(std::floor(box.y)));
    const int x1 = std::min(img.width, static_cast<int>(std::ceil(box.x + box.w)));
    const int y1 = std::min(img.height, static_cast<int>(std::ceil(box.y + box.h)));
    const double c = std::cos(pose.tilt), s = std::sin(pose.tilt);
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            const double bu = (x + 0.5 - box.x) / box.w;
            const double bv = (y + 0.5 - box.y) / box.h;
            double u = bu, v = bv;
            if (pose.horizontal) {
                u = bv;
                v = bu;
            } else if (pose.tilt != 0.0) {
                // undo a rotation about the feet (0.5, 1)
                const double du = bu - 0.5, dv = bv - 1.0;
                u = 0.5 + c * du - s * dv;
                v = 1.0 + s * du + c * dv;
            }
            if (const auto col = sprite(u, v, pose, look.shirt))
                for (int k = 0; k < 3; ++k) img.at(y, x, k) = (*col)[static_cast<std::size_t>(k)];
        }
    }
}

}  // namespace atract::tracksync
