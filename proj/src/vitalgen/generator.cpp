#include "atract/vitalgen/generator.hpp"

#include <sstream>

#include "atract/common/error.hpp"
#include "atract/common/rng.hpp"

namespace atract::vitalgen {

namespace {

// Channel order: heart rate, breathing rate, posture, movement.
ClassProfile profile(ChannelProfile hr, ChannelProfile br, ChannelProfile posture,
                     ChannelProfile movement) {
    return {hr, br, posture, movement};
}

ClassProfile healthy_walking() {
    return profile({88, 98, 0, 2}, {15, 18, 0, 1}, {4, 10, 0, 2}, {0.45, 0.55, 0, 0.03});
}

std::vector<VitalSignSeries> generate_corpus(const GeneratorSpec& spec, std::size_t classes,
                                             auto&& label_of) {
    validate(spec, classes);
    std::vector<VitalSignSeries> corpus;
    corpus.reserve(classes * static_cast<std::size_t>(spec.per_class));
    for (std::size_t c = 0; c < classes; ++c) {
        for (int i = 0; i < spec.per_class; ++i) {
            auto s = generate_series(spec.profiles[c], spec.timesteps, spec.rate_hz, spec.seed, c,
                                     static_cast<std::uint64_t>(i));
            s.label = label_of(c);
            std::ostringstream id;
            id << label_name(s.label) << '-' << i;
            s.subject_id = id.str();
            corpus.push_back(std::move(s));
        }
    }
    return corpus;
}

}  // namespace

std::vector<ClassProfile> default_field_profiles(bool ambiguous_injuries) {
    std::vector<ClassProfile> p(kActionCount);
    p[index(ActionLabel::arm_injury)] =
        profile({112, 122, 0, 2}, {24, 28, 0, 1}, {25, 35, 0, 2}, {0.30, 0.40, 0, 0.03});
    p[index(ActionLabel::head_injury)] =
        profile({92, 102, 0, 2}, {15, 18, 0, 1}, {-25, -15, 0, 2}, {0.10, 0.20, 0, 0.02});
    p[index(ActionLabel::limping)] =
        profile({102, 110, 0, 2}, {19, 22, 0, 1}, {12, 20, 0, 2}, {0.60, 0.75, 0, 0.04});
    p[index(ActionLabel::walk_collapse)] =
        profile({78, 88, -0.3, 2}, {12, 15, -0.05, 1}, {50, 60, 1.5, 2}, {0.20, 0.30, -0.002, 0.02});
    p[index(ActionLabel::crawling)] =
        profile({118, 128, 0, 2}, {28, 32, 0, 1}, {75, 88, 0, 2}, {0.85, 1.00, 0, 0.04});
    p[index(ActionLabel::running)] =
        profile({145, 165, 0, 3}, {34, 42, 0, 1.5}, {5, 12, 0, 2}, {1.30, 1.70, 0, 0.08});
    if (ambiguous_injuries) {
        p[index(ActionLabel::arm_injury)] = healthy_walking();
        p[index(ActionLabel::head_injury)] = healthy_walking();
        p[index(ActionLabel::walk_collapse)] = healthy_walking();
    }
    return p;
}

std::vector<ClassProfile> default_clinical_profiles() {
    std::vector<ClassProfile> p(kClinicalCount);
    p[index(ClinicalLabel::bleeding)] =
        profile({120, 135, 0, 2}, {24, 30, 0, 1}, {40, 50, 0, 2}, {0.05, 0.10, 0, 0.01});
    p[index(ClinicalLabel::cardiac_arrest)] =
        profile({35, 45, 0, 2}, {5, 8, 0, 0.5}, {80, 90, 0, 2}, {0.01, 0.03, 0, 0.003});
    p[index(ClinicalLabel::brain_injury)] =
        profile({52, 60, 0, 2}, {9, 12, 0, 1}, {60, 70, 0, 2}, {0.02, 0.05, 0, 0.005});
    p[index(ClinicalLabel::baseline_healthy)] =
        profile({68, 78, 0, 2}, {13, 16, 0, 1}, {20, 30, 0, 2}, {0.10, 0.16, 0, 0.01});
    return p;
}

GeneratorSpec default_field_spec(bool ambiguous_injuries) {
    GeneratorSpec spec;
    spec.profiles = default_field_profiles(ambiguous_injuries);
    return spec;
}

GeneratorSpec default_clinical_spec() {
    GeneratorSpec spec;
    spec.profiles = default_clinical_profiles();
    return spec;
}

void validate(const GeneratorSpec& spec, std::size_t class_count) {
    if (spec.per_class < 0) fail(ErrorKind::config, "per-class count must be >= 0");
    if (spec.timesteps < 1) fail(ErrorKind::config, "timesteps must be >= 1");
    if (!(spec.rate_hz > 0.0)) fail(ErrorKind::config, "rate_hz must be positive");
    if (spec.profiles.size() != class_count) {
        std::ostringstream os;
        os << "expected " << class_count << " class profiles, got " << spec.profiles.size();
        fail(ErrorKind::config, os.str());
    }
    for (std::size_t c = 0; c < class_count; ++c) {
        for (auto ch : kAllChannels) {
            const auto& p = spec.profiles[c][index(ch)];
            if (p.mean_lo > p.mean_hi || p.noise < 0.0) {
                std::ostringstream os;
                os << "class " << c << " channel " << to_string(ch) << ": invalid band ["
                   << p.mean_lo << ", " << p.mean_hi << "] noise " << p.noise;
                fail(ErrorKind::config, os.str());
            }
        }
    }
}

VitalSignSeries generate_series(const ClassProfile& profile, int timesteps, double rate_hz,
                                std::uint64_t seed, std::uint64_t class_key,
                                std::uint64_t sample_key) {
    auto rng = substream(seed, {class_key, sample_key});
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    VitalSignSeries s;
    s.rate_hz = rate_hz;
    s.samples.resize(timesteps, static_cast<Eigen::Index>(kChannelCount));
    const double centre = 0.5 * (timesteps - 1);
    for (auto ch : kAllChannels) {
        const auto& p = profile[index(ch)];
        const double mean = p.mean_lo + (p.mean_hi - p.mean_lo) * unit(rng);
        Eigen::VectorXd noise(timesteps);
        for (int t = 0; t < timesteps; ++t) noise[t] = p.noise * gauss(rng);
        noise.array() -= noise.mean();
        auto col = s.channel(ch);
        for (int t = 0; t < timesteps; ++t)
            col[t] = mean + p.slope * (t - centre) / rate_hz + noise[t];
    }
    clamp_to_range(s.samples);
    return s;
}

std::vector<VitalSignSeries> generate_field_corpus(const GeneratorSpec& spec) {
    return generate_corpus(spec, kActionCount,
                           [](std::size_t c) { return SeriesLabel{static_cast<ActionLabel>(c)}; });
}

std::vector<VitalSignSeries> generate_clinical_reference(const GeneratorSpec& spec) {
    // Clinical keys are offset so that field and clinical substreams never collide.
    auto shifted = spec;
    shifted.seed = spec.seed ^ 0xC11A1CA1ULL;
    return generate_corpus(shifted, kClinicalCount, [](std::size_t c) {
        return SeriesLabel{static_cast<ClinicalLabel>(c)};
    });
}

}  // namespace atract::vitalgen
