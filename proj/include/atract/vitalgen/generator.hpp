#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "atract/vitalgen/series.hpp"

namespace atract::vitalgen {

// Per-channel generation profile. Each series draws its own mean uniformly from
// [mean_lo, mean_hi]; a linear trend (units per second) and zero-mean Gaussian
// noise are added around it, so the sample mean of a generated channel equals
// the drawn mean and therefore lies inside the band.
struct ChannelProfile {
    double mean_lo = 0.0;
    double mean_hi = 0.0;
    double slope = 0.0;
    double noise = 0.0;
};

using ClassProfile = std::array<ChannelProfile, kChannelCount>;

struct GeneratorSpec {
    std::uint64_t seed = 42;
    int per_class = 10;
    int timesteps = 120;
    double rate_hz = 1.0;
    // One profile per class, indexed by the class enum.
    std::vector<ClassProfile> profiles;
};

// Field corpus profiles. With `ambiguous_injuries` set, arm_injury,
// head_injury and walk_collapse share one healthy-walking profile, which is
// what the capture of uninjured cadets acting out injuries looks like.
std::vector<ClassProfile> default_field_profiles(bool ambiguous_injuries = false);
std::vector<ClassProfile> default_clinical_profiles();

GeneratorSpec default_field_spec(bool ambiguous_injuries = false);
GeneratorSpec default_clinical_spec();

// Throws Error{config} on invalid bands, counts or profile table size.
void validate(const GeneratorSpec& spec, std::size_t class_count);

std::vector<VitalSignSeries> generate_field_corpus(const GeneratorSpec& spec);
std::vector<VitalSignSeries> generate_clinical_reference(const GeneratorSpec& spec);

// One series of the given profile; the building block of both corpora.
VitalSignSeries generate_series(const ClassProfile& profile, int timesteps, double rate_hz,
                                std::uint64_t seed, std::uint64_t class_key,
                                std::uint64_t sample_key);

}  // namespace atract::vitalgen
