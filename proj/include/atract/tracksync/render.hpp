#pragma once

#include <array>
#include <cstdint>
#include <random>

#include "atract/tracksync/image.hpp"
#include "atract/vitalgen/labels.hpp"

namespace atract::tracksync {

// Per-person drawing parameters.
struct Appearance {
    std::array<float, 3> shirt{0.2f, 0.35f, 0.8f};
    double phase = 0.0;        // gait phase offset [rad]
    double collapse_at = 4.0;  // seconds; walk_collapse starts falling here
};

Appearance random_appearance(std::mt19937_64& rng);

// Box width x height (pixels) of a person performing `action` at scene scale.
BBox default_person_box(vitalgen::ActionLabel action);

// Textured ground plane, deterministic in (seed, frame).
void fill_background(Image& img, std::uint64_t seed, int frame);

// Draws a stick-figure person performing `action` at time t [s] inside `box`.
// With `ambiguous` set, arm_injury and head_injury are drawn as the same plain
// walking figure.
void draw_person(Image& img, const BBox& box, vitalgen::ActionLabel action, double t,
                 const Appearance& look, bool ambiguous = false);

}  // namespace atract::tracksync
