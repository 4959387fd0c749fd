#include "atract/tracksync/align.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "atract/common/error.hpp"

namespace atract::tracksync {

PersonSubjectMap read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("person_id,subject_id", 0) != 0)
        fail(ErrorKind::parse, path.string() + " line 1: expected header person_id,subject_id");
    PersonSubjectMap out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || comma + 1 == line.size())
            fail(ErrorKind::parse, path.string() + " line " + std::to_string(lineno) + ": expected two fields");
        try {
            std::size_t used = 0;
            const int id = std::stoi(line.substr(0, comma), &used);
            if (used != comma) throw std::invalid_argument("trailing");
            out.emplace_back(id, line.substr(comma + 1));
        } catch (const std::exception&) {
            fail(ErrorKind::parse, path.string() + " line " + std::to_string(lineno) + ": bad person_id");
        }
    }
    return out;
}

void write_manifest(const PersonSubjectMap& mapping, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot open " + path.string());
    out << "person_id,subject_id\n";
    for (const auto& [p, s] : mapping) out << p << ',' << s << '\n';
}

vitalgen::VitalSignSeries sensor_window(const vitalgen::VitalSignSeries& series, double t0, double t1,
                                        int steps) {
    if (!(series.rate_hz > 0.0)) fail(ErrorKind::alignment, "sensor stream '" + series.subject_id + "' has no rate");
    const double eps = 1e-9;
    const auto first = static_cast<Eigen::Index>(std::ceil(t0 * series.rate_hz - eps));
    const auto end = static_cast<Eigen::Index>(std::ceil(t1 * series.rate_hz - eps));
    if (first < 0 || end > series.samples.rows() || end <= first) {
        std::ostringstream os;
        os << "sensor stream '" << series.subject_id << "' does not cover the clip window [" << t0 << ", " << t1
           << ") s";
        fail(ErrorKind::alignment, os.str());
    }
    vitalgen::VitalSignSeries out;
    out.label = series.label;
    out.subject_id = series.subject_id;
    out.rate_hz = series.rate_hz;
    const Eigen::MatrixXd window = series.samples.middleRows(first, end - first);
    if (steps <= 0 || steps == window.rows()) {
        out.samples = window;
        return out;
    }
    out.samples.resize(steps, window.cols());
    const double span = static_cast<double>(window.rows() - 1);
    for (int k = 0; k < steps; ++k) {
        const double pos = steps == 1 ? 0.0 : span * k / (steps - 1);
        const auto i0 = static_cast<Eigen::Index>(std::floor(pos));
        const auto i1 = std::min<Eigen::Index>(i0 + 1, window.rows() - 1);
        const double f = pos - static_cast<double>(i0);
        out.samples.row(k) = (1.0 - f) * window.row(i0) + f * window.row(i1);
    }
    out.rate_hz = series.rate_hz * static_cast<double>(steps) / static_cast<double>(window.rows());
    return out;
}

std::vector<FusionSample> align(const std::vector<PersonClip>& clips,
                                const std::vector<vitalgen::VitalSignSeries>& streams,
                                const PersonSubjectMap& mapping, const AlignOptions& options) {
    std::map<int, const PersonClip*> by_person;
    for (const auto& c : clips) by_person[c.person_id] = &c;
    std::map<std::string, const vitalgen::VitalSignSeries*> by_subject;
    for (const auto& s : streams) by_subject[s.subject_id] = &s;

    std::set<int> bad_persons;
    std::set<std::string> bad_subjects;
    std::map<int, std::string> person_to_subject;
    std::map<std::string, int> subject_to_person;
    for (const auto& [p, s] : mapping) {
        if (!by_person.count(p) || person_to_subject.count(p)) bad_persons.insert(p);
        if (!by_subject.count(s) || subject_to_person.count(s)) bad_subjects.insert(s);
        person_to_subject.emplace(p, s);
        subject_to_person.emplace(s, p);
    }
    for (const auto& [p, _] : by_person)
        if (!person_to_subject.count(p)) bad_persons.insert(p);
    for (const auto& [s, _] : by_subject)
        if (!subject_to_person.count(s)) bad_subjects.insert(s);
    if (!bad_persons.empty() || !bad_subjects.empty()) {
        std::ostringstream os;
        os << "person/sensor mapping is not one-to-one;";
        if (!bad_persons.empty()) {
            os << " unmatched persons:";
            for (int p : bad_persons) os << ' ' << p;
            os << ';';
        }
        if (!bad_subjects.empty()) {
            os << " unmatched subjects:";
            for (const auto& s : bad_subjects) os << ' ' << s;
            os << ';';
        }
        auto msg = os.str();
        msg.pop_back();
        fail(ErrorKind::alignment, msg);
    }

    std::vector<FusionSample> out;
    for (const auto& clip : clips) {
        const auto& series = *by_subject.at(person_to_subject.at(clip.person_id));
        FusionSample s;
        s.clip = clip;
        s.sensors = sensor_window(series, clip.start_time(), clip.end_time(), options.sensor_steps);
        if (const auto* a = std::get_if<vitalgen::ActionLabel>(&series.label)) s.label = *a;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace atract::tracksync
