#include "atract/gateway/decision_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "atract/common/error.hpp"

namespace atract::gateway {

double wall_clock() {
    return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

namespace {

std::string next_id(std::size_t n) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "d-%06zu", n + 1);
    return buf;
}

}  // namespace

DecisionLog::DecisionLog(std::filesystem::path path, Clock clock) : path_(std::move(path)), clock_(std::move(clock)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    recover();
    fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) fail(ErrorKind::io, "cannot open decision log " + path_.string() + ": " + std::strerror(errno));
}

DecisionLog::~DecisionLog() {
    if (fd_ >= 0) ::close(fd_);
}

void DecisionLog::recover() {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    in.close();

    const auto complete = text.rfind('\n') == std::string::npos ? 0 : text.rfind('\n') + 1;
    if (complete < text.size()) {
        truncated_bytes_ = text.size() - complete;
        std::filesystem::resize_file(path_, complete);
    }
    std::size_t line_no = 0, pos = 0;
    while (pos < complete) {
        const auto nl = text.find('\n', pos);
        const auto line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        const auto where = path_.string() + " line " + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::parse, where + ": " + e.what());
        }
        const auto event = j.value("event", std::string{});
        if (event == "create") {
            auto d = decision_from_json(j.at("decision"));
            if (index_.count(d.id)) fail(ErrorKind::parse, where + ": duplicate decision id " + d.id);
            index_[d.id] = records_.size();
            records_.push_back(std::move(d));
        } else if (event == "decide") {
            const auto id = j.value("id", std::string{});
            const auto it = index_.find(id);
            if (it == index_.end()) fail(ErrorKind::parse, where + ": decide for unknown id " + id);
            const auto action = parse_operator_action(j.value("action", std::string{}));
            if (!action) fail(ErrorKind::parse, where + ": unknown operator action");
            std::optional<Severity> sev;
            if (j.contains("severity") && !j["severity"].is_null()) {
                sev = parse_severity(j["severity"].get<std::string>());
                if (!sev) fail(ErrorKind::parse, where + ": unknown severity");
            }
            records_[it->second] = apply_operator(records_[it->second], *action, sev, j.at("at").get<double>());
        } else {
            fail(ErrorKind::parse, where + ": unknown event '" + event + "'");
        }
    }
}

void DecisionLog::append(const std::string& line) {
    const std::string data = line + '\n';
    std::size_t done = 0;
    while (done < data.size()) {
        const auto n = ::write(fd_, data.data() + done, data.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            fail(ErrorKind::io, "decision log write failed: " + std::string(std::strerror(errno)));
        }
        done += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) fail(ErrorKind::io, "decision log fsync failed: " + std::string(std::strerror(errno)));
}

TriageDecision DecisionLog::create(TriageDecision pending) {
    std::lock_guard lock(mutex_);
    pending.id = next_id(records_.size());
    pending.action = OperatorAction::pending;
    pending.operator_severity.reset();
    pending.decided_at.reset();
    pending.created_at = clock_();
    append(nlohmann::json{{"event", "create"}, {"decision", to_json(pending)}}.dump());
    index_[pending.id] = records_.size();
    records_.push_back(pending);
    return pending;
}

TriageDecision DecisionLog::submit(const std::string& id, OperatorAction action, std::optional<Severity> severity) {
    std::lock_guard lock(mutex_);
    const auto it = index_.find(id);
    if (it == index_.end()) fail(ErrorKind::not_found, "no decision with id '" + id + "'");
    auto updated = apply_operator(records_[it->second], action, severity, clock_());
    nlohmann::json j{{"event", "decide"}, {"id", id}, {"action", to_string(action)}, {"at", *updated.decided_at}};
    j["severity"] = severity ? nlohmann::json(to_string(*severity)) : nlohmann::json();
    append(j.dump());
    records_[it->second] = updated;
    return updated;
}

std::vector<TriageDecision> DecisionLog::decisions() const {
    std::lock_guard lock(mutex_);
    return records_;
}

std::optional<TriageDecision> DecisionLog::find(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return records_[it->second];
}

std::size_t DecisionLog::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

std::string DecisionLog::export_audit() const {
    std::lock_guard lock(mutex_);
    std::string out;
    for (const auto& d : records_) out += to_json(d).dump() + '\n';
    return out;
}

void DecisionLog::export_audit(const std::filesystem::path& out) const {
    std::ofstream f(out, std::ios::binary);
    if (!f) fail(ErrorKind::io, "cannot write " + out.string());
    f << export_audit();
}

}  // namespace atract::gateway
