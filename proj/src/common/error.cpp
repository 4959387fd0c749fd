#include "atract/common/error.hpp"

namespace atract {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::config: return "config";
        case ErrorKind::parse: return "parse";
        case ErrorKind::shape: return "shape";
        case ErrorKind::state: return "state";
        case ErrorKind::alignment: return "alignment";
        case ErrorKind::training: return "training";
        case ErrorKind::not_found: return "not_found";
        case ErrorKind::conflict: return "conflict";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

}  // namespace atract
