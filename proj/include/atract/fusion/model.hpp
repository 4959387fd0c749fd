#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "atract/fusion/mask.hpp"
#include "atract/kernels/conv3d.hpp"
#include "atract/nn/linear.hpp"
#include "atract/nn/lstm.hpp"
#include "atract/tracksync/align.hpp"

namespace atract::fusion {

using tracksync::ClipGeometry;
using tracksync::FusionSample;
using tracksync::PersonClip;

inline constexpr int kClasses = static_cast<int>(vitalgen::kActionCount);

struct FusionConfig {
    ClipGeometry geometry;  // frames, height and width must be multiples of 4
    double clip_fps = 1.0;  // frame rate of the training clips; sets the sensor window span
    int conv1_channels = 16;
    int conv2_channels = 32;
    int kernel = 3;
    int video_dim = 512;
    int sensor_dim = 128;
    int head_hidden = 256;
    double dropout = 0.5;
    double learning_rate = 1e-4;
    int epochs = 50;
    int batch_size = 8;
    std::uint64_t seed = 1;
    ModalityMask mask;
    bool flip_augment = true;  // random horizontal flips while training
};

void validate(const FusionConfig& config);

struct Prediction {
    Eigen::VectorXd logits;         // kClasses
    Eigen::VectorXd probabilities;  // softmax(logits)
    vitalgen::ActionLabel label = vitalgen::ActionLabel::arm_injury;  // argmax, lowest index on ties
};

Prediction make_prediction(const Eigen::VectorXd& logits);

// Activations of one clip through the video branch, kept for backprop and
// Grad-CAM. Volumes are channel-major [C][D][H][W].
struct VideoCache {
    std::vector<double> input;  // normalized clip, 3 channels
    std::vector<double> act1;   // relu(conv1)
    std::vector<double> pool1;
    std::vector<std::int32_t> arg1;
    std::vector<double> act2;   // relu(conv2): the Grad-CAM feature maps
    std::vector<double> pool2;
    std::vector<std::int32_t> arg2;
    Eigen::VectorXd gap;        // conv2_channels
};

struct HeadCache {
    Eigen::MatrixXd fused;
    Eigen::MatrixXd hidden;  // relu(fc1), before dropout
    Eigen::MatrixXd keep;    // dropout multipliers (0 or 1/(1-p)); empty in eval mode
    Eigen::MatrixXd dropped;
};

struct ComplexityReport {
    std::size_t parameters = 0;
    std::size_t macs = 0;  // multiply-accumulates for one clip + sensor window
    std::vector<std::pair<std::string, std::size_t>> parameter_breakdown;
    std::vector<std::pair<std::string, std::size_t>> mac_breakdown;
    std::string to_text() const;
};

// Video branch (two 3D conv + max-pool stages, global average pool, linear
// projection), recurrent sensor branch, and a late-fusion classifier head.
class FusionModel {
public:
    explicit FusionModel(const FusionConfig& config);

    const FusionConfig& config() const { return config_; }
    bool trained() const { return trained_; }
    void mark_trained() { trained_ = true; }

    void init(std::uint64_t seed);
    // Per-channel sensor standardization from the training split.
    void fit_standardization(const std::vector<FusionSample>& train);

    // 512-d (video_dim) embedding; throws Error{shape} on a clip of the wrong geometry.
    Eigen::VectorXd video_encode(const PersonClip& clip, bool flip = false, VideoCache* cache = nullptr) const;
    // 128-d (sensor_dim) embedding of a T x 4 window; masked channels read as 0.
    Eigen::VectorXd sensor_encode(const vitalgen::VitalSignSeries& series, const ModalityMask& mask) const;
    static Eigen::VectorXd fuse(const Eigen::VectorXd& video, const Eigen::VectorXd& sensor);

    // Head logits for fused columns. In train mode dropout masks are drawn from
    // `dropout_seed`.
    Eigen::MatrixXd head(const Eigen::MatrixXd& fused, bool train, std::uint64_t dropout_seed,
                         HeadCache* cache = nullptr) const;
    Prediction classify(const Eigen::VectorXd& fused) const;
    // Full inference under the model's own mask.
    Prediction predict(const FusionSample& sample) const;

    // Mean cross-entropy over `batch`; with `accumulate` the analytic gradient
    // is added to the parameters' grads. Dropout is active when `train` is set.
    double loss(const std::vector<const FusionSample*>& batch, const std::vector<bool>& flips, bool train,
                std::uint64_t dropout_seed, bool accumulate);

    // Logit of `target` as a function of the conv2 feature maps (after ReLU),
    // with the rest of the forward pass fixed. Used by Grad-CAM and its oracle.
    double logit_from_features(const std::vector<double>& act2, const Eigen::VectorXd& sensor_embedding,
                               vitalgen::ActionLabel target) const;
    // d logit_target / d act2, analytically.
    std::vector<double> feature_gradient(const VideoCache& cache, const Eigen::VectorXd& sensor_embedding,
                                         vitalgen::ActionLabel target) const;

    kernels::Conv3dGeometry conv1_geometry() const;
    kernels::Conv3dGeometry conv2_geometry() const;

    nn::ParamRefs parameters();
    nn::ParamRefs tensors();  // parameters + standardization buffers
    // MACs assume a sensor window of `sensor_steps` samples.
    ComplexityReport complexity(int sensor_steps) const;

    void save(const std::filesystem::path& path);
    static FusionModel load(const std::filesystem::path& path);

private:
    Eigen::MatrixXd sensor_inputs_step(const std::vector<const vitalgen::VitalSignSeries*>& batch,
                                       Eigen::Index t, const ModalityMask& mask) const;
    std::vector<Eigen::MatrixXd> sensor_sequence(const std::vector<const vitalgen::VitalSignSeries*>& batch,
                                                 const ModalityMask& mask) const;
    void video_backward(const VideoCache& cache, const Eigen::VectorXd& d_embedding);
    std::vector<double> gap_to_act2_gradient(const VideoCache& cache, const Eigen::VectorXd& d_gap) const;

    FusionConfig config_;
    bool trained_ = false;

    nn::Param conv1_w_;  // (in * k^3) x out, column o = weights of output channel o
    nn::Param conv1_b_;
    nn::Param conv2_w_;
    nn::Param conv2_b_;
    nn::Linear video_proj_;
    nn::Lstm sensor_rnn_;
    nn::Linear fc1_;
    nn::Linear fc2_;
    nn::Param sensor_mean_;  // 4 x 1
    nn::Param sensor_std_;   // 4 x 1
};

// Fixed per-pixel normalization applied to clips before the video branch.
inline constexpr double kPixelMean = 0.45;
inline constexpr double kPixelStd = 0.25;

}  // namespace atract::fusion
