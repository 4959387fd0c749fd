#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "atract/cvvitae/model.hpp"
#include "atract/fusion/model.hpp"

namespace atract::fusion {

// Synthetic person-centric samples: one rendered clip and one 1 Hz sensor
// window per sample, both spanning frames / fps seconds.
struct FusionCorpusSpec {
    std::uint64_t seed = 42;
    int per_class = 40;
    ClipGeometry geometry;
    double fps = 1.0;
    // Injury sensor profiles collapse onto healthy walking and arm/head injuries
    // are drawn as plain walking.
    bool ambiguous = false;
};

void validate(const FusionCorpusSpec& spec);

// Class-major order, per_class samples per action.
std::vector<FusionSample> generate_fusion_corpus(const FusionCorpusSpec& spec);

// Sensor window length (samples at 1 Hz) of a corpus generated from `spec`.
int sensor_steps(const FusionCorpusSpec& spec);

// Replaces the sensor streams of arm_injury, head_injury and walk_collapse
// samples with cvvitae augmentations toward their mapped clinical class; other
// samples are copied. Labels and clips are unchanged.
std::vector<FusionSample> augment_sensors(const std::vector<FusionSample>& samples, const cvvitae::Cvvitae& model,
                                          std::uint64_t seed);

// One subdirectory per sample (clip frames + clip.json, sensors.csv, label).
void write_samples(const std::vector<FusionSample>& samples, const std::filesystem::path& dir);
std::vector<FusionSample> read_samples(const std::filesystem::path& dir);

}  // namespace atract::fusion
