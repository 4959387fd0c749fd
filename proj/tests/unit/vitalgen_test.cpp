#include <set>
#include <sstream>

#include "doctest.h"

#include "atract/common/error.hpp"
#include "atract/common/rng.hpp"
#include "atract/vitalgen/csv.hpp"
#include "atract/vitalgen/generator.hpp"

using namespace atract;
using namespace atract::vitalgen;

namespace {

std::string serialize(const std::vector<VitalSignSeries>& corpus) {
    std::ostringstream os;
    for (const auto& s : corpus) write_csv(s, os);
    return os.str();
}

double class_channel_mean(const std::vector<VitalSignSeries>& corpus, const SeriesLabel& label,
                          Channel ch) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : corpus) {
        if (s.label != label) continue;
        for (Eigen::Index t = 0; t < s.timesteps(); ++t) {
            sum += s.channel(ch)[t];
            ++n;
        }
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace

TEST_CASE("field corpus is byte-identical for equal specs") {
    auto spec = default_field_spec();
    spec.seed = 42;
    spec.per_class = 10;
    spec.timesteps = 120;
    const auto a = generate_field_corpus(spec);
    const auto b = generate_field_corpus(spec);
    CHECK(a.size() == 60);
    CHECK(serialize(a) == serialize(b));

    spec.seed = 43;
    CHECK(serialize(generate_field_corpus(spec)) != serialize(a));
}

TEST_CASE("empty per-class count yields an empty corpus") {
    auto spec = default_field_spec();
    spec.per_class = 0;
    CHECK(generate_field_corpus(spec).empty());
    CHECK(generate_clinical_reference([] {
              auto s = default_clinical_spec();
              s.per_class = 0;
              return s;
          }())
              .empty());
}

TEST_CASE("inverted profile band is a configuration error") {
    auto spec = default_field_spec();
    spec.profiles[0][0].mean_lo = 200;
    spec.profiles[0][0].mean_hi = 100;
    try {
        generate_field_corpus(spec);
        FAIL("expected config error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
    }
}

TEST_CASE("each series mean lies inside its class band") {
    auto spec = default_field_spec();
    spec.per_class = 10;
    spec.timesteps = 120;
    const auto corpus = generate_field_corpus(spec);
    for (const auto& s : corpus) {
        validate(s);
        const auto a = std::get<ActionLabel>(s.label);
        for (auto ch : kAllChannels) {
            const auto& band = spec.profiles[index(a)][index(ch)];
            const double m = s.channel(ch).mean();
            CHECK(m >= band.mean_lo - 1e-9);
            CHECK(m <= band.mean_hi + 1e-9);
        }
    }
    // running heart rate sits in the configured running band
    const double running_hr =
        class_channel_mean(corpus, ActionLabel::running, Channel::heart_rate);
    CHECK(running_hr >= 140.0);
    CHECK(running_hr <= 170.0);
}

TEST_CASE("clinical reference classes") {
    auto spec = default_clinical_spec();
    spec.per_class = 8;
    spec.timesteps = 32;
    const auto a = generate_clinical_reference(spec);
    CHECK(serialize(a) == serialize(generate_clinical_reference(spec)));

    std::set<std::string> labels;
    for (const auto& s : a) {
        validate(s);
        labels.insert(label_name(s.label));
        CHECK(s.samples.cols() == 4);
    }
    CHECK(labels.size() == 4);
    CHECK(class_channel_mean(a, ClinicalLabel::cardiac_arrest, Channel::heart_rate) <
          class_channel_mean(a, ClinicalLabel::baseline_healthy, Channel::heart_rate));
}

TEST_CASE("ambiguous field profiles collapse three injury classes") {
    const auto p = default_field_profiles(true);
    for (auto ch : kAllChannels) {
        const auto& arm = p[index(ActionLabel::arm_injury)][index(ch)];
        const auto& head = p[index(ActionLabel::head_injury)][index(ch)];
        CHECK(arm.mean_lo == head.mean_lo);
        CHECK(arm.mean_hi == head.mean_hi);
    }
}

TEST_CASE("csv round trip preserves random series exactly") {
    auto rng = substream(7, {1});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double rates[] = {1.0, 2.0, 0.5, 4.0, 10.0, 25.0};
    for (int trial = 0; trial < 25; ++trial) {
        VitalSignSeries s;
        const int t = 1 + static_cast<int>(u(rng) * 40);
        s.rate_hz = t >= 2 ? rates[trial % 6] : 1.0;
        s.samples.resize(t, 4);
        for (int i = 0; i < t; ++i) {
            s.samples(i, 0) = 20 + 220 * u(rng);
            s.samples(i, 1) = 2 + 68 * u(rng);
            s.samples(i, 2) = -180 + 360 * u(rng);
            s.samples(i, 3) = 3 * u(rng);
        }
        s.label = trial % 2 ? SeriesLabel{ActionLabel::limping} : SeriesLabel{ClinicalLabel::bleeding};
        s.subject_id = "subject-" + std::to_string(trial);
        std::stringstream io;
        write_csv(s, io);
        CHECK(read_csv(io) == s);
    }
}

TEST_CASE("csv parse errors name the row or the missing channel") {
    SUBCASE("heart rate out of range") {
        std::istringstream in(std::string(kCsvHeader) +
                              "\n0,80,12,0,0.1,running,a\n1,300,12,0,0.1,running,a\n");
        try {
            read_csv(in);
            FAIL("expected parse error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::parse);
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
            CHECK(std::string(e.what()).find("heart_rate") != std::string::npos);
        }
    }
    SUBCASE("missing movement column") {
        std::istringstream in("t,hr_bpm,br_rpm,posture_deg,label,subject_id\n0,80,12,0,running,a\n");
        try {
            read_csv(in);
            FAIL("expected parse error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::parse);
            CHECK(std::string(e.what()).find("movement") != std::string::npos);
        }
    }
    SUBCASE("malformed number") {
        std::istringstream in(std::string(kCsvHeader) + "\n0,eighty,12,0,0.1,running,a\n");
        CHECK_THROWS_AS(read_csv(in), Error);
    }
}
