#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "atract/nn/param.hpp"

namespace atract::nn {

// Single-file model checkpoint:
//
//   magic   "ATRACTCK"                      8 bytes
//   version u32 (= kCheckpointVersion)
//   kind    u32 length + bytes              e.g. "cvvitae", "fusion"
//   config  u64 length + bytes              JSON text
//   count   u32
//   count x { name: u32 length + bytes, rows: u32, cols: u32,
//             rows*cols f64 column-major }
//
// Integers and doubles are little-endian. Tensors appear in the model's
// declared serialization order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
    std::string name;
    Eigen::MatrixXd value;
};

struct Checkpoint {
    std::string kind;
    std::string config_json;
    std::vector<NamedTensor> tensors;
};

void write_checkpoint(const std::filesystem::path& path, const std::string& kind,
                      const std::string& config_json, const ParamRefs& tensors);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Copies checkpoint tensors into `params`; names and shapes must match in order.
void load_tensors(const Checkpoint& ckpt, const ParamRefs& params);

}  // namespace atract::nn
