#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "tactsim/layers.hpp"
#include "tactsim/tensor.hpp"

namespace tactsim {

/// Declarative description of one layer.
struct LayerSpec {
    enum class Kind { conv2d, batchnorm, relu, maxpool, avgpool, flatten, dense };
    Kind kind = Kind::relu;
    int out_channels = 0;  // conv
    int kernel = 0;        // conv
    int stride = 1;        // conv
    int padding = 0;       // conv
    int pool = 0;          // max/avg pool window
    int units = 0;         // dense

    std::string describe() const;
};

/// Declarative model: input shape plus the layer list. The CNN_n family is
/// produced by build_model().
struct ModelSpec {
    std::string name;
    std::array<int, 3> input_shape = {60, 60, 25};  // H, W, C
    std::vector<LayerSpec> layers;

    /// Static shape inference through every layer; throws when a layer cannot
    /// accept its input.
    std::vector<std::vector<int>> infer_shapes() const;

    /// Trainable parameter count (weights, biases, batch-norm gamma/beta).
    std::size_t param_count() const;

    /// Fingerprint of the architecture; checkpoints refuse to load into a
    /// model with a different hash.
    std::string hash() const;
};

/// The model family: CNN_1, CNN_3, CNN_5, CNN_7. Every variant opens with a
/// 7x7x64 valid convolution (60 -> 54) and closes with average pooling,
/// flatten and a 3-unit head for (x, y, z).
ModelSpec build_model(const std::string& name);

/// Runtime network: owns layers, parameters and the activation tape.
class Model {
public:
    explicit Model(const ModelSpec& spec, std::uint64_t init_seed = 1);

    const ModelSpec& spec() const { return spec_; }
    std::size_t param_count() const;

    /// Batch forward. Training mode uses batch statistics in batch norm and
    /// records the activation tape for backward.
    const Tensor& forward(const Tensor& batch, bool training);

    /// Mean-squared-error backward over the last training forward; fills
    /// parameter gradients (accumulating) and returns the batch loss.
    double backward_mse(const Tensor& targets);

    void zero_grad();

    /// Every parameter/state array in a stable order (checkpoint order).
    std::vector<ParamBlob> blobs();

private:
    ModelSpec spec_;
    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<Tensor> tape_;  // tape_[0] = input, tape_[i+1] = layer i output
    bool tape_valid_ = false;
};

/// MSE between predictions and targets of shape (N, outputs).
double mse_loss(const Tensor& predictions, const Tensor& targets);

}  // namespace tactsim
