#include "atract/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "atract/common/error.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace atract::nn {

namespace {

constexpr char kMagic[8] = {'A', 'T', 'R', 'A', 'C', 'T', 'C', 'K'};

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) fail(ErrorKind::parse, path.string() + ": truncated checkpoint");
    return v;
}

std::string get_string(std::istream& in, std::uint64_t n, const std::filesystem::path& path) {
    if (n > (1ULL << 30)) fail(ErrorKind::parse, path.string() + ": implausible string length");
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) fail(ErrorKind::parse, path.string() + ": truncated checkpoint");
    return s;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const std::string& kind,
                      const std::string& config_json, const ParamRefs& tensors) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(kind.size()));
    out.write(kind.data(), static_cast<std::streamsize>(kind.size()));
    put<std::uint64_t>(out, config_json.size());
    out.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto* p : tensors) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
        out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(p->value.rows()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(p->value.cols()));
        out.write(reinterpret_cast<const char*>(p->value.data()),
                  static_cast<std::streamsize>(p->value.size() * sizeof(double)));
    }
    if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        fail(ErrorKind::parse, path.string() + ": not a checkpoint file");
    const auto version = get<std::uint32_t>(in, path);
    if (version != kCheckpointVersion) {
        std::ostringstream os;
        os << path.string() << ": unsupported checkpoint version " << version;
        fail(ErrorKind::parse, os.str());
    }
    Checkpoint ckpt;
    ckpt.kind = get_string(in, get<std::uint32_t>(in, path), path);
    ckpt.config_json = get_string(in, get<std::uint64_t>(in, path), path);
    const auto count = get<std::uint32_t>(in, path);
    for (std::uint32_t k = 0; k < count; ++k) {
        NamedTensor t;
        t.name = get_string(in, get<std::uint32_t>(in, path), path);
        const auto rows = get<std::uint32_t>(in, path);
        const auto cols = get<std::uint32_t>(in, path);
        if (static_cast<std::uint64_t>(rows) * cols > (1ULL << 31))
            fail(ErrorKind::parse, path.string() + ": implausible tensor size");
        t.value.resize(rows, cols);
        in.read(reinterpret_cast<char*>(t.value.data()),
                static_cast<std::streamsize>(t.value.size() * sizeof(double)));
        if (!in) fail(ErrorKind::parse, path.string() + ": truncated tensor " + t.name);
        ckpt.tensors.push_back(std::move(t));
    }
    return ckpt;
}

void load_tensors(const Checkpoint& ckpt, const ParamRefs& params) {
    if (ckpt.tensors.size() != params.size()) {
        std::ostringstream os;
        os << "checkpoint has " << ckpt.tensors.size() << " tensors, model expects "
           << params.size();
        fail(ErrorKind::shape, os.str());
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto& t = ckpt.tensors[k];
        auto& p = *params[k];
        if (t.name != p.name || t.value.rows() != p.value.rows() ||
            t.value.cols() != p.value.cols())
            fail(ErrorKind::shape, "checkpoint tensor '" + t.name + "' does not match '" +
                                       p.name + "'");
        p.value = t.value;
        p.grad.setZero(p.value.rows(), p.value.cols());
    }
}

}  // namespace atract::nn
