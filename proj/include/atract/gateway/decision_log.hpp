#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "atract/gateway/decision.hpp"

namespace atract::gateway {

double wall_clock();

// Append-only journal of decision events, one JSON record per line:
//   {"event":"create","decision":{...}}
//   {"event":"decide","id":...,"action":...,"severity":...,"at":...}
// Every append is fsync'ed before the call returns. Opening an existing
// journal replays it; a torn final line (no newline) is cut off.
class DecisionLog {
public:
    using Clock = std::function<double()>;

    explicit DecisionLog(std::filesystem::path path, Clock clock = wall_clock);
    ~DecisionLog();
    DecisionLog(const DecisionLog&) = delete;
    DecisionLog& operator=(const DecisionLog&) = delete;

    // Assigns the next id and created_at, persists, and returns the stored record.
    TriageDecision create(TriageDecision pending);
    // Errors: unknown id -> not_found; see apply_operator for the rest.
    TriageDecision submit(const std::string& id, OperatorAction action, std::optional<Severity> severity = {});

    std::vector<TriageDecision> decisions() const;  // insertion order
    std::optional<TriageDecision> find(const std::string& id) const;
    std::size_t size() const;
    std::size_t truncated_bytes() const { return truncated_bytes_; }
    const std::filesystem::path& path() const { return path_; }

    // One decision record per line in insertion order, current state.
    std::string export_audit() const;
    void export_audit(const std::filesystem::path& out) const;

private:
    void recover();
    void append(const std::string& line);

    std::filesystem::path path_;
    Clock clock_;
    int fd_ = -1;
    mutable std::mutex mutex_;
    std::vector<TriageDecision> records_;
    std::map<std::string, std::size_t> index_;
    std::size_t truncated_bytes_ = 0;
};

}  // namespace atract::gateway
